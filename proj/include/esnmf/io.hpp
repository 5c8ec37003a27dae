#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "esnmf/corpus.hpp"
#include "esnmf/error.hpp"
#include "esnmf/eval.hpp"
#include "esnmf/matrix_market.hpp"
#include "esnmf/nmf.hpp"

// On-disk layouts.
//
//   corpus directory:  matrix.mtx + sidecar.json
//     sidecar.json = {vocabulary:[...], doc_ids:[...], labels:[...], label_names:[...]}
//     (labels and label_names are empty arrays when the corpus is unlabelled)
//   model directory:   U.mtx + V.mtx + model.json + records.jsonl

namespace esnmf::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* kMatrixFile = "matrix.mtx";
inline constexpr const char* kSidecarFile = "sidecar.json";
inline constexpr const char* kUFile = "U.mtx";
inline constexpr const char* kVFile = "V.mtx";
inline constexpr const char* kManifestFile = "model.json";
inline constexpr const char* kRecordsFile = "records.jsonl";

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw InputError("failed writing " + path.string());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": invalid JSON: " + e.what());
  }
}

/// Vocabulary, document ids and labels; everything but the matrix.
struct Sidecar {
  std::vector<std::string> vocabulary;
  std::vector<std::string> doc_ids;
  std::optional<DocumentLabels> labels;
};

inline json sidecar_json(const TermDocumentMatrix& tdm) {
  json j;
  j["vocabulary"] = tdm.vocabulary;
  j["doc_ids"] = tdm.doc_ids;
  j["labels"] = tdm.labels ? json(tdm.labels->index) : json::array();
  j["label_names"] = tdm.labels ? json(tdm.labels->names) : json::array();
  return j;
}

inline Sidecar parse_sidecar(const json& j, const std::string& name) {
  try {
    Sidecar s;
    s.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    s.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
    auto idx = j.value("labels", json::array()).get<std::vector<Index>>();
    auto names = j.value("label_names", json::array()).get<std::vector<std::string>>();
    if (!idx.empty() || !names.empty()) {
      if (idx.size() != s.doc_ids.size()) {
        throw InputError(name + ": " + std::to_string(idx.size()) + " labels for " +
                         std::to_string(s.doc_ids.size()) + " documents");
      }
      for (Index l : idx) {
        if (l >= names.size()) throw InputError(name + ": label index " + std::to_string(l) + " has no name");
      }
      s.labels = DocumentLabels{std::move(idx), std::move(names)};
    }
    return s;
  } catch (const json::exception& e) {
    throw InputError(name + ": malformed sidecar: " + e.what());
  }
}

inline Sidecar read_sidecar(const fs::path& path) { return parse_sidecar(read_json(path), path.string()); }

inline void write_corpus(const fs::path& dir, const TermDocumentMatrix& tdm) {
  fs::create_directories(dir);
  write_matrix_market(dir / kMatrixFile, tdm.matrix);
  write_text(dir / kSidecarFile, sidecar_json(tdm).dump(1) + "\n");
}

/// Loads a corpus directory, or a bare .mtx file with an optional sidecar
/// next to it (`<stem>.json` or sidecar.json).
inline TermDocumentMatrix read_corpus(const fs::path& path) {
  fs::path mtx = path;
  fs::path side;
  if (fs::is_directory(path)) {
    mtx = path / kMatrixFile;
    side = path / kSidecarFile;
  } else {
    for (const fs::path& cand : {fs::path(path).replace_extension(".json"), path.parent_path() / kSidecarFile}) {
      if (fs::exists(cand)) {
        side = cand;
        break;
      }
    }
  }
  TermDocumentMatrix tdm;
  tdm.matrix = read_matrix_market(mtx);
  if (!side.empty() && fs::exists(side)) {
    Sidecar s = read_sidecar(side);
    if (s.vocabulary.size() != tdm.matrix.rows() || s.doc_ids.size() != tdm.matrix.cols()) {
      throw InputError(side.string() + ": sidecar describes " + shape_string(s.vocabulary.size(), s.doc_ids.size()) +
                       " but matrix is " + shape_string(tdm.matrix.rows(), tdm.matrix.cols()));
    }
    tdm.vocabulary = std::move(s.vocabulary);
    tdm.doc_ids = std::move(s.doc_ids);
    tdm.labels = std::move(s.labels);
  } else {
    for (Index i = 0; i < tdm.matrix.rows(); ++i) tdm.vocabulary.push_back("term" + std::to_string(i));
    for (Index j = 0; j < tdm.matrix.cols(); ++j) tdm.doc_ids.push_back("doc" + std::to_string(j));
  }
  return tdm;
}

inline json record_json(const IterationRecord& r) {
  return json{{"iter", r.iter},   {"residual", r.residual}, {"error", r.error},      {"nnz_u", r.nnz_u},
              {"nnz_v", r.nnz_v}, {"peak_nnz", r.peak_nnz}, {"block", r.block}};
}

inline IterationRecord parse_record(const json& j) {
  IterationRecord r;
  r.iter = j.at("iter").get<Index>();
  r.residual = j.at("residual").get<double>();
  r.error = j.at("error").get<double>();
  r.nnz_u = j.at("nnz_u").get<Index>();
  r.nnz_v = j.at("nnz_v").get<Index>();
  r.peak_nnz = j.at("peak_nnz").get<Index>();
  r.block = j.value("block", Index{0});
  return r;
}

inline void write_records(std::ostream& os, const std::vector<IterationRecord>& records) {
  for (const auto& r : records) os << record_json(r).dump() << '\n';
}

inline std::vector<IterationRecord> read_records(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  std::vector<IterationRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(parse_record(json::parse(line)));
    } catch (const json::exception& e) {
      throw InputError(path.string() + ": bad record: " + e.what());
    }
  }
  return out;
}

inline json config_json(const NmfConfig& c) {
  json j;
  j["k"] = c.k;
  j["max_iters"] = c.max_iters;
  j["residual_tol"] = c.residual_tol;
  j["t_u"] = c.t_u ? json(*c.t_u) : json(nullptr);
  j["t_v"] = c.t_v ? json(*c.t_v) : json(nullptr);
  j["enforcement"] = to_string(c.mode);
  j["ridge_scale"] = c.ridge_scale;
  j["seed"] = c.seed;
  j["init_nnz"] = c.init_nnz ? json(*c.init_nnz) : json(nullptr);
  return j;
}

/// Writes U.mtx, V.mtx, records.jsonl and model.json (`manifest` plus the rank).
inline void write_model(const fs::path& dir, const NmfModel& model, const std::vector<IterationRecord>& records,
                        json manifest) {
  fs::create_directories(dir);
  write_matrix_market(dir / kUFile, model.u);
  write_matrix_market(dir / kVFile, model.v);
  std::ostringstream rec;
  write_records(rec, records);
  write_text(dir / kRecordsFile, rec.str());
  manifest["k"] = model.rank();
  write_text(dir / kManifestFile, manifest.dump(2) + "\n");
}

inline NmfModel read_model(const fs::path& dir) {
  NmfModel m{read_matrix_market(dir / kUFile), read_matrix_market(dir / kVFile)};
  if (m.u.cols() != m.v.cols()) {
    throw InputError(dir.string() + ": U has " + std::to_string(m.u.cols()) + " columns, V has " +
                     std::to_string(m.v.cols()));
  }
  return m;
}

inline json topics_json(const std::vector<TopicTermReport>& reports) {
  json arr = json::array();
  for (const auto& rep : reports) {
    json terms = json::array();
    for (const auto& tw : rep.terms) terms.push_back({{"term", tw.term}, {"weight", tw.weight}});
    arr.push_back({{"topic", rep.topic_index}, {"terms", std::move(terms)}});
  }
  return arr;
}

inline json accuracy_json(const std::vector<TopicAccuracy>& acc, double mean) {
  json arr = json::array();
  for (const auto& a : acc) arr.push_back({{"topic", a.topic_index}, {"n_docs", a.n_docs}, {"accuracy", a.accuracy}});
  return json{{"topics", std::move(arr)}, {"mean_accuracy", mean}};
}

inline json distribution_json(const DistributionReport& d) {
  auto one = [](const ColumnDistribution& c) {
    return json{{"column_nnz", c.counts},
                {"max", c.max},
                {"min", c.min},
                {"skew", std::isfinite(c.skew) ? json(c.skew) : json(nullptr)}};
  };
  return json{{"u", one(d.u)}, {"v", one(d.v)}};
}

/// Aligned table with one column per topic ("Topic 1" ...) and one row per
/// rank; accuracy rows are appended when given.
inline std::string topics_table(const std::vector<TopicTermReport>& reports,
                                const std::vector<TopicAccuracy>* accuracy = nullptr) {
  std::vector<std::vector<std::string>> cols;
  Index depth = 0;
  for (const auto& rep : reports) depth = std::max<Index>(depth, rep.terms.size());
  for (const auto& rep : reports) {
    std::vector<std::string> col{"Topic " + std::to_string(rep.topic_index + 1)};
    for (Index i = 0; i < depth; ++i) col.push_back(i < rep.terms.size() ? rep.terms[i].term : "");
    if (accuracy) {
      const auto& a = (*accuracy)[rep.topic_index];
      std::ostringstream acc;
      acc.setf(std::ios::fixed);
      acc.precision(3);
      acc << a.accuracy;
      col.push_back("docs=" + std::to_string(a.n_docs));
      col.push_back("acc=" + acc.str());
    }
    cols.push_back(std::move(col));
  }
  std::vector<std::size_t> width;
  for (const auto& c : cols) {
    std::size_t w = 0;
    for (const auto& s : c) w = std::max(w, s.size());
    width.push_back(w);
  }
  std::ostringstream os;
  const std::size_t n_rows = cols.empty() ? 0 : cols.front().size();
  auto rule = [&] {
    for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "-+-" : "") << std::string(width[c], '-');
    os << '\n';
  };
  for (std::size_t r = 0; r < n_rows; ++r) {
    if (r == 1 || (accuracy && r == depth + 1)) rule();
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) os << " | ";
      os << cols[c][r];
      if (c + 1 < cols.size()) os << std::string(width[c] - cols[c][r].size(), ' ');
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace esnmf::io
