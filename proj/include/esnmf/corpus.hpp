#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "esnmf/error.hpp"
#include "esnmf/random.hpp"
#include "esnmf/sparse_matrix.hpp"

namespace esnmf {

/// Ground-truth document classes ("journals").
struct DocumentLabels {
  std::vector<Index> index;        // one per document
  std::vector<std::string> names;  // label index -> name

  friend bool operator==(const DocumentLabels&, const DocumentLabels&) = default;
};

/// Term-document matrix: rows are terms, columns are documents.
struct TermDocumentMatrix {
  SparseMatrix matrix;
  std::vector<std::string> vocabulary;
  std::vector<std::string> doc_ids;
  std::optional<DocumentLabels> labels;

  friend bool operator==(const TermDocumentMatrix&, const TermDocumentMatrix&) = default;
};

struct Document {
  std::string id;
  std::string text;
  std::optional<std::string> label;
};

struct IngestConfig {
  std::set<std::string> stop_words;
  Index min_term_count = 2;
  bool lowercase = true;
};

/// Splits on every ASCII character that is not a letter or digit. Bytes
/// >= 0x80 stay inside tokens so UTF-8 words are not broken apart. Tokens
/// shorter than two bytes and all-digit tokens are dropped.
inline std::vector<std::string> tokenize(std::string_view text, bool lowercase = true) {
  std::vector<std::string> out;
  std::string cur;
  bool all_digits = true;
  auto emit = [&] {
    if (cur.size() >= 2 && !all_digits) out.push_back(cur);
    cur.clear();
    all_digits = true;
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      if (!std::isdigit(c)) all_digits = false;
      cur.push_back(lowercase && c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    } else {
      emit();
    }
  }
  emit();
  return out;
}

namespace detail {

inline std::optional<DocumentLabels> collect_labels(const std::vector<Document>& documents) {
  const auto labelled = std::count_if(documents.begin(), documents.end(),
                                      [](const Document& d) { return d.label.has_value(); });
  if (labelled == 0) return std::nullopt;
  if (static_cast<std::size_t>(labelled) != documents.size()) {
    throw InputError("either every document or no document must carry a label");
  }
  DocumentLabels labels;
  std::set<std::string> names;
  for (const auto& d : documents) names.insert(*d.label);
  labels.names.assign(names.begin(), names.end());
  labels.index.reserve(documents.size());
  for (const auto& d : documents) {
    const auto it = std::lower_bound(labels.names.begin(), labels.names.end(), *d.label);
    labels.index.push_back(static_cast<Index>(it - labels.names.begin()));
  }
  return labels;
}

}  // namespace detail

/// Raw term counts. Vocabulary is sorted; columns follow document order.
/// Terms whose corpus-wide count is below min_term_count are dropped.
inline TermDocumentMatrix build_matrix(const std::vector<Document>& documents, const IngestConfig& config) {
  if (documents.empty()) throw InputError("corpus has no documents");
  if (config.min_term_count < 1) throw std::invalid_argument("min_term_count must be >= 1");

  std::set<std::string> stop;
  for (const auto& w : config.stop_words) {
    std::string s = w;
    if (config.lowercase) {
      std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
        return c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c);
      });
    }
    stop.insert(std::move(s));
  }

  std::vector<std::map<std::string, Index>> per_doc(documents.size());
  std::map<std::string, Index> totals;
  for (std::size_t d = 0; d < documents.size(); ++d) {
    for (auto& tok : tokenize(documents[d].text, config.lowercase)) {
      if (stop.contains(tok)) continue;
      ++per_doc[d][tok];
      ++totals[tok];
    }
  }

  TermDocumentMatrix tdm;
  std::map<std::string, Index> row_of;
  for (const auto& [term, count] : totals) {
    if (count < config.min_term_count) continue;
    row_of.emplace(term, tdm.vocabulary.size());
    tdm.vocabulary.push_back(term);
  }
  if (tdm.vocabulary.empty()) throw InputError("vocabulary is empty after filtering");

  SparseMatrix::Builder b(tdm.vocabulary.size(), documents.size());
  for (std::size_t d = 0; d < documents.size(); ++d) {
    // map iteration is lexicographic, which is also row order
    for (const auto& [term, count] : per_doc[d]) {
      const auto it = row_of.find(term);
      if (it != row_of.end()) b.push(it->second, static_cast<double>(count));
    }
    b.end_column();
    tdm.doc_ids.push_back(documents[d].id);
  }
  tdm.matrix = std::move(b).finish();
  tdm.labels = detail::collect_labels(documents);
  return tdm;
}

/// Divides each row by its number of stored entries.
inline TermDocumentMatrix normalize_rows(TermDocumentMatrix tdm) {
  const auto counts = tdm.matrix.row_nnz();
  for (Index i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) {
      const std::string term = i < tdm.vocabulary.size() ? tdm.vocabulary[i] : std::to_string(i);
      throw InputError("cannot normalize: row for term '" + term + "' has no entries");
    }
  }
  const auto& m = tdm.matrix;
  SparseMatrix::Builder b(m.rows(), m.cols(), m.nnz());
  for (Index j = 0; j < m.cols(); ++j) {
    const auto c = m.column(j);
    for (Index p = 0; p < c.size(); ++p) {
      b.push(c.rows[p], c.values[p] / static_cast<double>(counts[c.rows[p]]));
    }
    b.end_column();
  }
  tdm.matrix = std::move(b).finish();
  return tdm;
}

struct SyntheticCorpusParams {
  Index n_topics = 5;
  Index docs_per_topic = 20;
  Index terms_per_topic = 10;
  double overlap_fraction = 0.0;
  double noise_rate = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::string padded(std::string_view prefix, Index value, Index max_value) {
  const auto width = std::to_string(max_value).size();
  std::string digits = std::to_string(value);
  return std::string(prefix) + std::string(width - std::min(width, digits.size()), '0') + digits;
}

}  // namespace detail

/// Planted-topic corpus.
///
/// Topic t owns terms_per_topic private terms with integer weights w_t in
/// [1, 4]; every document of topic t has a length multiplier c in [1, 3]
/// and count c * w_t(i) for each private term. With no overlap and no noise
/// every topic block is therefore rank one and A has an exact rank
/// n_topics nonnegative factorization.
///
/// overlap_fraction > 0 adds ceil(overlap * n_topics * terms_per_topic)
/// shared terms; each document uses each shared term with probability 1/2
/// and count c * u, u in [1, 2]. noise_rate > 0 adds
/// round(noise_rate * document token count) tokens per document, each on a
/// uniformly chosen term. Terms that end up unused are dropped.
inline TermDocumentMatrix synthetic_corpus(const SyntheticCorpusParams& p) {
  if (p.n_topics < 2) throw std::invalid_argument("synthetic corpus needs at least 2 topics");
  if (p.docs_per_topic < 1 || p.terms_per_topic < 1) {
    throw std::invalid_argument("synthetic corpus needs docs_per_topic and terms_per_topic >= 1");
  }
  if (!(p.overlap_fraction >= 0.0 && p.overlap_fraction < 1.0)) {
    throw std::invalid_argument("overlap_fraction must lie in [0, 1)");
  }
  if (!(p.noise_rate >= 0.0 && p.noise_rate < 1.0)) throw std::invalid_argument("noise_rate must lie in [0, 1)");

  Rng rng(p.seed);
  const Index private_terms = p.n_topics * p.terms_per_topic;
  const Index shared_terms =
      p.overlap_fraction > 0.0
          ? static_cast<Index>(std::ceil(p.overlap_fraction * static_cast<double>(private_terms)))
          : 0;
  const Index n_terms = private_terms + shared_terms;
  const Index n_docs = p.n_topics * p.docs_per_topic;

  // Term ids: shared pool first, then topic blocks, which keeps names sorted.
  std::vector<std::string> names;
  names.reserve(n_terms);
  for (Index s = 0; s < shared_terms; ++s) names.push_back(detail::padded("shared_term", s, shared_terms));
  for (Index t = 0; t < p.n_topics; ++t) {
    for (Index i = 0; i < p.terms_per_topic; ++i) {
      names.push_back(detail::padded("topic", t, p.n_topics) + detail::padded("_term", i, p.terms_per_topic));
    }
  }

  std::vector<std::vector<double>> weights(p.n_topics, std::vector<double>(p.terms_per_topic));
  for (auto& topic : weights) {
    for (auto& w : topic) w = static_cast<double>(rng.uniform_between(1, 4));
  }

  TermDocumentMatrix tdm;
  DocumentLabels labels;
  for (Index t = 0; t < p.n_topics; ++t) labels.names.push_back(detail::padded("topic", t, p.n_topics));

  std::vector<Triplet> entries;
  for (Index t = 0; t < p.n_topics; ++t) {
    for (Index d = 0; d < p.docs_per_topic; ++d) {
      const Index col = t * p.docs_per_topic + d;
      const double c = static_cast<double>(rng.uniform_between(1, 3));
      std::vector<double> counts(n_terms, 0.0);
      for (Index i = 0; i < p.terms_per_topic; ++i) {
        counts[shared_terms + t * p.terms_per_topic + i] = c * weights[t][i];
      }
      for (Index s = 0; s < shared_terms; ++s) {
        if (rng.bernoulli(0.5)) counts[s] = c * static_cast<double>(rng.uniform_between(1, 2));
      }
      if (p.noise_rate > 0.0) {
        double total = 0.0;
        for (double v : counts) total += v;
        const auto n_noise = static_cast<Index>(std::llround(p.noise_rate * total));
        for (Index e = 0; e < n_noise; ++e) counts[rng.uniform_index(n_terms)] += 1.0;
      }
      for (Index i = 0; i < n_terms; ++i) {
        if (counts[i] != 0.0) entries.push_back({i, col, counts[i]});
      }
      tdm.doc_ids.push_back(detail::padded("doc", col, n_docs));
      labels.index.push_back(t);
    }
  }

  // drop unused terms
  std::vector<Index> used(n_terms, 0);
  for (const auto& e : entries) used[e.row] = 1;
  std::vector<Index> new_row(n_terms, 0);
  Index next = 0;
  for (Index i = 0; i < n_terms; ++i) {
    if (used[i]) {
      new_row[i] = next++;
      tdm.vocabulary.push_back(names[i]);
    }
  }
  for (auto& e : entries) e.row = new_row[e.row];
  tdm.matrix = SparseMatrix::from_triplets(next, n_docs, std::move(entries));
  tdm.labels = std::move(labels);
  return tdm;
}

/// One stop word per line; blank lines and surrounding whitespace ignored.
inline std::set<std::string> read_stop_words(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("stop-word file not found: " + path.string());
  std::set<std::string> words;
  std::string line;
  while (std::getline(is, line)) {
    const auto b = line.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r\n");
    words.insert(line.substr(b, e - b + 1));
  }
  return words;
}

/// Every `*.txt` file in `dir`, ordered by file name; the id is the name
/// without its extension.
inline std::vector<Document> read_text_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Document> docs;
  for (const auto& f : files) {
    std::ifstream is(f, std::ios::binary);
    if (!is) throw InputError("cannot read " + f.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    docs.push_back({f.stem().string(), ss.str(), std::nullopt});
  }
  return docs;
}

/// Lines of `doc_id<TAB>label<TAB>text`. Blank lines are skipped.
inline std::vector<Document> read_tsv_corpus(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open corpus file " + path.string());
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected doc_id<TAB>label<TAB>text");
    }
    docs.push_back({line.substr(0, t1), line.substr(t2 + 1), line.substr(t1 + 1, t2 - t1 - 1)});
  }
  return docs;
}

}  // namespace esnmf
