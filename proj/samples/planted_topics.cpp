// Factorize a planted-topic corpus with enforced sparsity and print the
// topics next to their clustering accuracy.

#include <cstdio>
#include <iostream>

#include "esnmf/esnmf.hpp"

int main() {
  using namespace esnmf;

  const auto corpus = normalize_rows(synthetic_corpus({5, 30, 8, 0.1, 0.05, 1}));
  const auto& a = corpus.matrix;
  std::printf("corpus: %zu terms x %zu documents, %zu stored entries\n", a.rows(), a.cols(), a.nnz());

  NmfConfig cfg;
  cfg.k = 5;
  cfg.max_iters = 75;
  cfg.seed = 3;
  cfg.t_u = 40;
  cfg.t_v = 150;
  const auto [model, records] = projected_als(a, cfg);

  const auto& last = records.back();
  std::printf("%zu iterations, residual %.3e, error %.4f, nnz(U)=%zu nnz(V)=%zu\n", records.size(), last.residual,
              last.error, last.nnz_u, last.nnz_v);

  const auto topics = top_terms(model, corpus.vocabulary, 5);
  const auto acc = topic_accuracies(model, corpus.labels->index, corpus.labels->names.size());
  std::cout << '\n' << io::topics_table(topics, &acc);
  std::printf("\nmean accuracy %.3f\n", mean_accuracy(model, corpus.labels->index, corpus.labels->names.size()));
}
