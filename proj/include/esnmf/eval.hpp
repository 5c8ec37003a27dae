#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "esnmf/nmf.hpp"
#include "esnmf/sparse_matrix.hpp"

namespace esnmf {

/// Same-label pair count of the most even split of n_docs documents over
/// n_labels labels: the smallest value the pair count can take.
inline std::uint64_t alpha(std::uint64_t n_docs, std::uint64_t n_labels) {
  if (n_labels < 1) throw std::invalid_argument("alpha: number of labels must be >= 1");
  const std::uint64_t q = n_docs / n_labels;
  const std::uint64_t r = n_docs % n_labels;
  // q * (n_labels * (q - 1) / 2 + r), regrouped so every step is an integer
  return n_labels * (q * (q == 0 ? 0 : q - 1) / 2) + q * r;
}

/// Number of unordered document pairs.
inline std::uint64_t beta(std::uint64_t n_docs) { return n_docs < 2 ? 0 : n_docs * (n_docs - 1) / 2; }

/// Pair-counting accuracy of one topic whose member documents are
/// `doc_indices`. 1 when all members share a label, 0 for the most even split.
/// Topics with at most one member, or where alpha == beta, score 1.
inline double topic_accuracy(std::span<const Index> doc_indices, std::span<const Index> labels, Index n_labels) {
  if (n_labels < 1) throw std::invalid_argument("topic_accuracy: number of labels must be >= 1");
  std::vector<std::uint64_t> per_label(n_labels, 0);
  for (Index d : doc_indices) {
    if (d >= labels.size()) {
      throw std::out_of_range("topic_accuracy: document " + std::to_string(d) + " has no label");
    }
    if (labels[d] >= n_labels) {
      throw std::out_of_range("topic_accuracy: label " + std::to_string(labels[d]) + " of document " +
                              std::to_string(d) + " is not below " + std::to_string(n_labels));
    }
    ++per_label[labels[d]];
  }
  const std::uint64_t n_docs = doc_indices.size();
  const std::uint64_t lo = alpha(n_docs, n_labels);
  const std::uint64_t hi = beta(n_docs);
  if (n_docs <= 1 || hi == lo) return 1.0;
  std::uint64_t same = 0;
  for (std::uint64_t c : per_label) same += beta(c);
  return static_cast<double>(same - lo) / static_cast<double>(hi - lo);
}

/// Documents with a stored entry in column `topic` of V.
inline std::vector<Index> topic_members(const SparseMatrix& v, Index topic) {
  const auto c = v.column(topic);
  return {c.rows.begin(), c.rows.end()};
}

struct TopicAccuracy {
  Index topic_index = 0;
  Index n_docs = 0;
  double accuracy = 1.0;
};

inline std::vector<TopicAccuracy> topic_accuracies(const NmfModel& model, std::span<const Index> labels,
                                                   Index n_labels) {
  if (labels.size() != model.v.rows()) {
    throw DimensionError("labels cover " + std::to_string(labels.size()) + " documents, V has " +
                         std::to_string(model.v.rows()) + " rows");
  }
  std::vector<TopicAccuracy> out;
  for (Index t = 0; t < model.v.cols(); ++t) {
    const auto members = topic_members(model.v, t);
    out.push_back({t, members.size(), topic_accuracy(members, labels, n_labels)});
  }
  return out;
}

/// Mean of topic_accuracy over all topics; membership is a nonzero V entry.
inline double mean_accuracy(const NmfModel& model, std::span<const Index> labels, Index n_labels) {
  const auto acc = topic_accuracies(model, labels, n_labels);
  if (acc.empty()) return 1.0;
  double s = 0.0;
  for (const auto& a : acc) s += a.accuracy;
  return s / static_cast<double>(acc.size());
}

struct TermWeight {
  std::string term;
  double weight = 0.0;
};

struct TopicTermReport {
  Index topic_index = 0;
  std::vector<TermWeight> terms;
};

/// Top-m terms of every U column by weight; equal weights in term order.
inline std::vector<TopicTermReport> top_terms(const NmfModel& model, std::span<const std::string> vocabulary,
                                              Index m) {
  if (vocabulary.size() != model.u.rows()) {
    throw DimensionError("vocabulary has " + std::to_string(vocabulary.size()) + " terms, U has " +
                         std::to_string(model.u.rows()) + " rows");
  }
  std::vector<TopicTermReport> out;
  for (Index t = 0; t < model.u.cols(); ++t) {
    const auto c = model.u.column(t);
    std::vector<Index> order(c.size());
    std::iota(order.begin(), order.end(), Index{0});
    auto before = [&](Index a, Index b) {
      if (c.values[a] != c.values[b]) return c.values[a] > c.values[b];
      return vocabulary[c.rows[a]] < vocabulary[c.rows[b]];
    };
    const Index keep = std::min<Index>(m, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(), before);
    TopicTermReport rep{t, {}};
    for (Index i = 0; i < keep; ++i) rep.terms.push_back({vocabulary[c.rows[order[i]]], c.values[order[i]]});
    out.push_back(std::move(rep));
  }
  return out;
}

struct ColumnDistribution {
  std::vector<Index> counts;
  Index max = 0;
  Index min = 0;
  /// max / min; infinite when some column is empty and another is not,
  /// 1 when every column is empty.
  double skew = 1.0;
};

struct DistributionReport {
  ColumnDistribution u;
  ColumnDistribution v;
};

inline ColumnDistribution column_distribution(const SparseMatrix& m) {
  ColumnDistribution d;
  d.counts = m.column_nnz_list();
  if (d.counts.empty()) return d;
  const auto [lo, hi] = std::minmax_element(d.counts.begin(), d.counts.end());
  d.min = *lo;
  d.max = *hi;
  if (d.max == 0) {
    d.skew = 1.0;
  } else if (d.min == 0) {
    d.skew = std::numeric_limits<double>::infinity();
  } else {
    d.skew = static_cast<double>(d.max) / static_cast<double>(d.min);
  }
  return d;
}

inline DistributionReport uneven_distribution_report(const NmfModel& model) {
  return {column_distribution(model.u), column_distribution(model.v)};
}

}  // namespace esnmf
