#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "esnmf/corpus.hpp"

using namespace esnmf;
namespace fs = std::filesystem;

namespace {

std::vector<Document> cat_dog() { return {{"d1", "cat cat dog", {}}, {"d2", "dog fish", {}}}; }

IngestConfig min_count(Index c) {
  IngestConfig cfg;
  cfg.min_term_count = c;
  return cfg;
}

SparseMatrix dense(Index r, Index c, std::vector<double> v) { return SparseMatrix::from_dense(r, c, v); }

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("esnmf_test_corpus_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Tokenize, SplitsLowercasesAndFilters) {
  EXPECT_EQ(tokenize("Hello, world! a 42 x9 it's"), (std::vector<std::string>{"hello", "world", "x9", "it"}));
  EXPECT_EQ(tokenize("Hello World", false), (std::vector<std::string>{"Hello", "World"}));
  EXPECT_EQ(tokenize("caf\xc3\xa9-bar"), (std::vector<std::string>{"caf\xc3\xa9", "bar"}));
  EXPECT_TRUE(tokenize("").empty());
}

TEST(BuildMatrix, CountsTerms) {
  const auto tdm = build_matrix(cat_dog(), min_count(1));
  EXPECT_EQ(tdm.vocabulary, (std::vector<std::string>{"cat", "dog", "fish"}));
  EXPECT_EQ(tdm.doc_ids, (std::vector<std::string>{"d1", "d2"}));
  EXPECT_EQ(tdm.matrix, dense(3, 2, {2, 0, 1, 1, 0, 1}));
  EXPECT_FALSE(tdm.labels.has_value());
}

TEST(BuildMatrix, MinCountDropsSingletons) {
  const auto tdm = build_matrix(cat_dog(), min_count(2));
  EXPECT_EQ(tdm.vocabulary, (std::vector<std::string>{"cat", "dog"}));
  EXPECT_EQ(tdm.matrix, dense(2, 2, {2, 0, 1, 1}));
}

TEST(BuildMatrix, StopWordsRemoved) {
  auto cfg = min_count(1);
  cfg.stop_words = {"DOG"};
  const auto tdm = build_matrix(cat_dog(), cfg);
  EXPECT_EQ(tdm.vocabulary, (std::vector<std::string>{"cat", "fish"}));
  EXPECT_EQ(tdm.matrix, dense(2, 2, {2, 0, 0, 1}));
}

TEST(BuildMatrix, Errors) {
  EXPECT_THROW(build_matrix({}, min_count(1)), InputError);
  EXPECT_THROW(build_matrix({{"d", "a 1 2", {}}}, min_count(1)), InputError);
  EXPECT_THROW(build_matrix(cat_dog(), min_count(0)), std::invalid_argument);
  EXPECT_THROW(build_matrix({{"a", "cat", std::string("x")}, {"b", "cat", {}}}, min_count(1)), InputError);
}

TEST(BuildMatrix, LabelsSortedByName) {
  const auto tdm = build_matrix({{"a", "cat", "zoo"}, {"b", "dog", "ant"}, {"c", "cat", "zoo"}}, min_count(1));
  ASSERT_TRUE(tdm.labels.has_value());
  EXPECT_EQ(tdm.labels->names, (std::vector<std::string>{"ant", "zoo"}));
  EXPECT_EQ(tdm.labels->index, (std::vector<Index>{1, 0, 1}));
}

TEST(BuildMatrix, TotalMatchesTokenStream) {
  const std::vector<std::string> words{"alpha", "beta", "gamma", "delta", "eps", "zeta", "the", "and"};
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Document> docs;
    const int n_docs = 1 + gen() % 6;
    for (int d = 0; d < n_docs; ++d) {
      std::string text;
      const int n_tok = gen() % 12;
      for (int t = 0; t < n_tok; ++t) text += words[gen() % words.size()] + (gen() % 2 ? " " : ", ");
      docs.push_back({"d" + std::to_string(d), text + " anchor anchor anchor", {}});
    }
    IngestConfig cfg;
    cfg.stop_words = {"the", "and"};
    cfg.min_term_count = 1 + gen() % 3;

    // independent count: whitespace/comma split, filter, threshold
    std::map<std::string, double> totals;
    for (const auto& doc : docs) {
      std::string cur;
      for (char ch : doc.text + " ") {
        if (ch == ' ' || ch == ',') {
          if (!cur.empty() && !cfg.stop_words.contains(cur)) totals[cur] += 1;
          cur.clear();
        } else {
          cur += ch;
        }
      }
    }
    double expected = 0;
    std::set<std::string> kept;
    for (const auto& [w, c] : totals) {
      if (c >= static_cast<double>(cfg.min_term_count)) {
        expected += c;
        kept.insert(w);
      }
    }
    const auto tdm = build_matrix(docs, cfg);
    double sum = 0;
    for (double v : tdm.matrix.values()) sum += v;
    EXPECT_EQ(sum, expected);
    EXPECT_EQ(std::set<std::string>(tdm.vocabulary.begin(), tdm.vocabulary.end()), kept);
    EXPECT_EQ(build_matrix(docs, cfg).matrix, tdm.matrix);
  }
}

TEST(NormalizeRows, Examples) {
  TermDocumentMatrix tdm;
  tdm.matrix = dense(2, 3, {2, 0, 4, 0, 5, 0});
  const auto n = normalize_rows(tdm);
  EXPECT_EQ(n.matrix, dense(2, 3, {1, 0, 2, 0, 5, 0}));

  const auto cd = normalize_rows(build_matrix(cat_dog(), min_count(1)));
  EXPECT_EQ(cd.matrix, dense(3, 2, {2, 0, 0.5, 0.5, 0, 1}));
}

TEST(NormalizeRows, PreservesPatternAndDividesByRowCount) {
  const auto tdm = synthetic_corpus({4, 6, 5, 0.2, 0.1, 1});
  const auto n = normalize_rows(tdm);
  EXPECT_TRUE(std::ranges::equal(n.matrix.row_indices(), tdm.matrix.row_indices()));
  EXPECT_TRUE(std::ranges::equal(n.matrix.col_ptr(), tdm.matrix.col_ptr()));
  const auto counts = tdm.matrix.row_nnz();
  for (const auto& t : tdm.matrix.triplets()) {
    EXPECT_DOUBLE_EQ(n.matrix.at(t.row, t.col), t.value / static_cast<double>(counts[t.row]));
  }
}

TEST(NormalizeRows, EmptyRowRejected) {
  TermDocumentMatrix tdm;
  tdm.matrix = dense(2, 1, {1, 0});
  tdm.vocabulary = {"a", "b"};
  EXPECT_THROW(normalize_rows(tdm), InputError);
}

TEST(SyntheticCorpus, BlockDiagonalWithoutOverlap) {
  const auto tdm = synthetic_corpus({5, 20, 10, 0.0, 0.0, 7});
  EXPECT_EQ(tdm.matrix.rows(), 50u);
  EXPECT_EQ(tdm.matrix.cols(), 100u);
  ASSERT_TRUE(tdm.labels.has_value());
  EXPECT_EQ(tdm.labels->names.size(), 5u);
  for (Index j = 0; j < 100; ++j) EXPECT_EQ(tdm.labels->index[j], j / 20);
  for (const auto& t : tdm.matrix.triplets()) {
    EXPECT_EQ(t.row / 10, t.col / 20);
    EXPECT_GT(t.value, 0.0);
  }
  EXPECT_EQ(tdm.matrix.nnz(), 5u * 20u * 10u);
  EXPECT_EQ(tdm.vocabulary.size(), 50u);
  EXPECT_TRUE(std::is_sorted(tdm.vocabulary.begin(), tdm.vocabulary.end()));
}

TEST(SyntheticCorpus, ZeroOverlapTermsCarryOneLabel) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto tdm = synthetic_corpus({3, 7, 4, 0.0, 0.0, seed});
    std::vector<std::set<Index>> labels_of(tdm.matrix.rows());
    for (const auto& t : tdm.matrix.triplets()) labels_of[t.row].insert(tdm.labels->index[t.col]);
    for (const auto& s : labels_of) EXPECT_EQ(s.size(), 1u);
  }
}

TEST(SyntheticCorpus, Deterministic) {
  const SyntheticCorpusParams p{5, 20, 10, 0.1, 0.05, 42};
  const auto a = synthetic_corpus(p);
  const auto b = synthetic_corpus(p);
  EXPECT_EQ(a.matrix, b.matrix);
  EXPECT_EQ(a.vocabulary, b.vocabulary);
  EXPECT_EQ(a.doc_ids, b.doc_ids);
  auto q = p;
  q.seed = 43;
  EXPECT_NE(synthetic_corpus(q).matrix, a.matrix);
}

TEST(SyntheticCorpus, OverlapAddsSharedTerms) {
  const auto tdm = synthetic_corpus({5, 20, 10, 0.1, 0.0, 1});
  Index shared = 0;
  for (const auto& w : tdm.vocabulary) shared += w.rfind("shared_term", 0) == 0;
  EXPECT_EQ(shared, 5u);
  for (Index i = 0; i < tdm.matrix.rows(); ++i) EXPECT_GT(tdm.matrix.row_nnz()[i], 0u);
}

TEST(SyntheticCorpus, RejectsBadParameters) {
  EXPECT_THROW(synthetic_corpus({1, 5, 5, 0.0, 0.0, 0}), std::invalid_argument);
  EXPECT_THROW(synthetic_corpus({2, 5, 5, 1.0, 0.0, 0}), std::invalid_argument);
  EXPECT_THROW(synthetic_corpus({2, 5, 5, 0.0, -0.1, 0}), std::invalid_argument);
  EXPECT_THROW(synthetic_corpus({2, 0, 5, 0.0, 0.0, 0}), std::invalid_argument);
}

TEST(CorpusFiles, TextDirectoryAndTsv) {
  const auto dir = scratch("files");
  std::ofstream(dir / "b.txt") << "dog fish";
  std::ofstream(dir / "a.txt") << "cat cat dog";
  std::ofstream(dir / "skip.md") << "ignored";
  const auto docs = read_text_directory(dir);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].id, "a");
  EXPECT_EQ(docs[1].text, "dog fish");

  std::ofstream(dir / "c.tsv") << "x\tsports\tball game\r\n\ny\tnews\tvote\n";
  const auto tsv = read_tsv_corpus(dir / "c.tsv");
  ASSERT_EQ(tsv.size(), 2u);
  EXPECT_EQ(tsv[0].id, "x");
  EXPECT_EQ(*tsv[0].label, "sports");
  EXPECT_EQ(tsv[0].text, "ball game");

  std::ofstream(dir / "bad.tsv") << "only\tone tab\n";
  EXPECT_THROW(read_tsv_corpus(dir / "bad.tsv"), InputError);

  std::ofstream(dir / "stop.txt") << "  the \n\nand\n";
  EXPECT_EQ(read_stop_words(dir / "stop.txt"), (std::set<std::string>{"the", "and"}));
  EXPECT_THROW(read_stop_words(dir / "missing.txt"), InputError);
  EXPECT_THROW(read_text_directory(dir / "nope"), InputError);
  fs::remove_all(dir);
}
