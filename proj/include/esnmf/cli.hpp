#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "esnmf/corpus.hpp"
#include "esnmf/error.hpp"
#include "esnmf/eval.hpp"
#include "esnmf/io.hpp"
#include "esnmf/nmf.hpp"
#include "esnmf/sweep.hpp"

// Command-line driver: ingest, factorize, sweep, topics, eval.
// Exit codes: 0 success, 2 usage, 3 input error, 4 solver degeneracy.

namespace esnmf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitSolver = 4;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace fs = std::filesystem;
using json = nlohmann::json;

struct SolverOptions {
  std::optional<Index> k;
  Index max_iters = 100;
  double tol = 1e-10;
  std::optional<Index> nnz_u;
  std::optional<Index> nnz_v;
  bool per_column = false;
  bool sequential = false;
  Index block_size = 1;
  std::optional<Index> blocks;
  std::optional<Index> iters_per_block;
  bool enforce_after = false;
  std::uint64_t seed = 0;
  std::optional<Index> init_nnz;
  double ridge = kDefaultRidgeScale;
};

inline void add_solver_options(CLI::App& cmd, SolverOptions& o) {
  cmd.add_option("--k", o.k, "Number of topics (default 5)");
  cmd.add_option("--max-iters", o.max_iters, "ALS iterations cap")->capture_default_str();
  cmd.add_option("--tol", o.tol, "Stop when the residual drops below this")->capture_default_str();
  cmd.add_option("--nnz-u", o.nnz_u, "Budget of stored entries in U");
  cmd.add_option("--nnz-v", o.nnz_v, "Budget of stored entries in V");
  cmd.add_flag("--per-column", o.per_column, "Apply budgets to every column instead of the whole matrix");
  cmd.add_flag("--sequential", o.sequential, "Sequential ALS, one block of topics at a time");
  cmd.add_option("--block-size", o.block_size, "Topics per block for --sequential")->capture_default_str();
  cmd.add_option("--blocks", o.blocks, "Number of blocks for --sequential");
  cmd.add_option("--iters-per-block", o.iters_per_block, "ALS iterations per block for --sequential");
  cmd.add_flag("--enforce-after", o.enforce_after, "Run unenforced ALS, then truncate the result once");
  cmd.add_option("--seed", o.seed, "Seed for the initial guess")->capture_default_str();
  cmd.add_option("--init-nnz", o.init_nnz, "Entries in the initial guess (default: dense)");
  cmd.add_option("--ridge", o.ridge, "Ridge scale for Gram solves")->capture_default_str();
}

inline NmfConfig make_config(const SolverOptions& o) {
  NmfConfig c;
  c.k = o.k.value_or(5);
  c.max_iters = o.max_iters;
  c.residual_tol = o.tol;
  c.t_u = o.nnz_u;
  c.t_v = o.nnz_v;
  c.mode = o.per_column ? Enforcement::per_column : Enforcement::global;
  c.ridge_scale = o.ridge;
  c.seed = o.seed;
  c.init_nnz = o.init_nnz;
  return c;
}

/// Rank, block count and per-block iterations for --sequential.
struct SequentialPlan {
  Index block_size = 1;
  Index blocks = 1;
  Index iters_per_block = 1;
};

inline SequentialPlan plan_sequential(const SolverOptions& o) {
  if (o.block_size < 1) throw UsageError("--block-size must be >= 1");
  SequentialPlan p;
  p.block_size = o.block_size;
  if (o.blocks) {
    p.blocks = *o.blocks;
    if (o.k && *o.k != p.blocks * p.block_size) {
      throw UsageError("--k " + std::to_string(*o.k) + " differs from --block-size x --blocks = " +
                       std::to_string(p.blocks * p.block_size));
    }
  } else {
    const Index k = o.k.value_or(5);
    if (k % p.block_size != 0) throw UsageError("--k must be a multiple of --block-size");
    p.blocks = k / p.block_size;
  }
  if (p.blocks < 1) throw UsageError("--blocks must be >= 1");
  p.iters_per_block = o.iters_per_block.value_or(o.max_iters);
  return p;
}

inline std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << v;
  return os.str();
}

/// Fills options of `cmd` from a TOML file. Options already given on the
/// command line keep their values. Keys may use '-' or '_' and may sit at
/// top level or under a [<subcommand>] table.
inline void apply_config_file(CLI::App& cmd, const std::string& path) {
  if (path.empty()) return;
  if (!fs::is_regular_file(path)) throw InputError("config file not found: " + path);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path);
  } catch (const CLI::Error& e) {
    throw UsageError(path + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // table markers
    if (!item.parents.empty() && item.parents != std::vector<std::string>{cmd.get_name()}) continue;
    std::string name = item.name;
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* opt = cmd.get_option_no_throw("--" + name);
    if (opt == nullptr || name == "config") throw UsageError(path + ": unknown option '" + item.name + "'");
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

// ---------------------------------------------------------------------------

struct IngestOptions {
  std::string corpus;
  std::string stopwords;
  Index min_term_count = 2;
  bool keep_case = false;
  bool no_normalize = false;
  std::string out;
  bool synthetic = false;
  Index topics = 5;
  Index docs_per_topic = 20;
  Index terms_per_topic = 10;
  double overlap = 0.0;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

inline int cmd_ingest(const IngestOptions& o, std::ostream& out) {
  TermDocumentMatrix tdm;
  if (o.synthetic) {
    if (!o.corpus.empty()) throw UsageError("--synthetic takes no corpus path");
    tdm = synthetic_corpus({o.topics, o.docs_per_topic, o.terms_per_topic, o.overlap, o.noise, o.seed});
  } else {
    if (o.corpus.empty()) throw UsageError("ingest needs a corpus path or --synthetic");
    IngestConfig cfg;
    cfg.min_term_count = o.min_term_count;
    cfg.lowercase = !o.keep_case;
    if (!o.stopwords.empty()) cfg.stop_words = read_stop_words(o.stopwords);
    const fs::path path(o.corpus);
    if (!fs::exists(path)) throw InputError("corpus not found: " + o.corpus);
    const auto docs = fs::is_directory(path) ? read_text_directory(path) : read_tsv_corpus(path);
    tdm = build_matrix(docs, cfg);
  }
  if (!o.no_normalize) tdm = normalize_rows(std::move(tdm));
  io::write_corpus(o.out, tdm);

  const auto n = tdm.matrix.rows();
  const auto m = tdm.matrix.cols();
  const double sparsity = 1.0 - static_cast<double>(tdm.matrix.nnz()) / (static_cast<double>(n) * static_cast<double>(m));
  out << "terms: " << n << "\ndocuments: " << m << "\nnnz: " << tdm.matrix.nnz() << "\nsparsity: "
      << fixed(100.0 * sparsity, 2) << "%\n";
  if (tdm.labels) out << "labels: " << tdm.labels->names.size() << "\n";
  out << "wrote " << (fs::path(o.out) / io::kMatrixFile).string() << " and "
      << (fs::path(o.out) / io::kSidecarFile).string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

inline void print_run_summary(std::ostream& out, const NmfResult& r, double final_error, double ms) {
  const auto& recs = r.records;
  Index peak = 0;
  for (const auto& rec : recs) peak = std::max(peak, rec.peak_nnz);
  out << "iterations: " << recs.size() << "\n";
  if (!recs.empty()) out << "final residual: " << sci(recs.back().residual) << "\n";
  out << "final error: " << sci(final_error) << "\n";
  out << "nnz(U): " << r.model.u.nnz() << "  nnz(V): " << r.model.v.nnz() << "  peak nnz: " << peak << "\n";
  out << "wall time: " << fixed(ms, 1) << " ms";
  if (!recs.empty()) out << " (" << fixed(ms / static_cast<double>(recs.size()), 3) << " ms/iter)";
  out << "\n";
}

inline int cmd_factorize(const std::string& input, const SolverOptions& o, const std::string& out_dir,
                         std::ostream& out) {
  if (o.sequential && o.enforce_after) throw UsageError("--sequential and --enforce-after are exclusive");
  if (o.enforce_after && !o.nnz_u && !o.nnz_v) throw UsageError("--enforce-after needs --nnz-u and/or --nnz-v");
  const TermDocumentMatrix tdm = io::read_corpus(input);
  const SparseMatrix& a = tdm.matrix;

  NmfConfig cfg = make_config(o);
  json manifest;
  NmfResult result;
  const auto start = std::chrono::steady_clock::now();
  if (o.sequential) {
    const SequentialPlan plan = plan_sequential(o);
    cfg.k = plan.block_size * plan.blocks;
    cfg.max_iters = plan.iters_per_block;
    result = sequential_als(a, cfg, plan.block_size, plan.blocks);
    manifest["solver"] = "sequential";
    manifest["block_size"] = plan.block_size;
    manifest["blocks"] = plan.blocks;
  } else if (o.enforce_after) {
    NmfConfig dense = cfg;
    dense.t_u.reset();
    dense.t_v.reset();
    dense.validate(a.rows());
    cfg.validate(a.rows());
    result = projected_als(a, dense);
    result.model = enforce_after(result.model, cfg.t_u, cfg.t_v, cfg.mode);
    manifest["solver"] = "enforce-after";
  } else {
    result = projected_als(a, cfg);
    manifest["solver"] = "als";
  }
  const double ms = detail::elapsed_ms(start);
  const double final_error = relative_error(a, result.model);

  manifest["config"] = io::config_json(cfg);
  manifest["n"] = a.rows();
  manifest["m"] = a.cols();
  manifest["iterations"] = result.records.size();
  manifest["final_residual"] = result.records.empty() ? 0.0 : result.records.back().residual;
  manifest["final_error"] = final_error;
  io::write_model(out_dir, result.model, result.records, std::move(manifest));

  print_run_summary(out, result, final_error, ms);
  out << "wrote model to " << out_dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SweepOptions {
  std::vector<Index> budgets;
  std::vector<std::string> targets{"u", "v", "both"};
  std::vector<std::string> solvers{"als"};
};

inline Target parse_target(const std::string& s) {
  if (s == "u") return Target::u;
  if (s == "v") return Target::v;
  if (s == "both") return Target::both;
  throw UsageError("unknown target '" + s + "' (expected u, v or both)");
}

inline Solver parse_solver(const std::string& s) {
  if (s == "als") return Solver::als;
  if (s == "per-column") return Solver::per_column;
  if (s == "sequential") return Solver::sequential;
  if (s == "enforce-after") return Solver::enforce_after;
  throw UsageError("unknown solver '" + s + "' (expected als, per-column, sequential or enforce-after)");
}

inline int cmd_sweep(const std::string& input, const SolverOptions& o, const SweepOptions& s,
                     const std::string& out_dir, std::ostream& out) {
  if (s.budgets.empty()) throw UsageError("--budgets must list at least one budget");
  if (o.nnz_u || o.nnz_v) throw UsageError("sweep takes budgets from --budgets, not --nnz-u/--nnz-v");
  SweepSpec grid;
  grid.base = make_config(o);
  grid.budgets = s.budgets;
  grid.targets.clear();
  for (const auto& t : s.targets) grid.targets.push_back(parse_target(t));
  grid.solvers.clear();
  for (const auto& v : s.solvers) grid.solvers.push_back(parse_solver(v));
  if (grid.targets.empty() || grid.solvers.empty()) throw UsageError("--targets and --solvers must not be empty");
  grid.block_size = o.block_size;
  grid.iters_per_block = o.iters_per_block;
  if (o.per_column) {
    for (auto& v : grid.solvers) {
      if (v == Solver::als) v = Solver::per_column;
    }
  }

  const TermDocumentMatrix tdm = io::read_corpus(input);
  const auto runs = run_sweep(tdm.matrix, tdm.labels, grid);

  fs::create_directories(out_dir);
  std::ostringstream csv;
  write_sweep_csv(csv, runs);
  io::write_text(fs::path(out_dir) / "sweep.csv", csv.str());
  std::ostringstream recs;
  for (Index i = 0; i < runs.size(); ++i) {
    for (const auto& r : runs[i].result.records) {
      json j = io::record_json(r);
      j["run"] = i;
      j["solver"] = to_string(runs[i].solver);
      j["target"] = to_string(runs[i].target);
      recs << j.dump() << '\n';
    }
  }
  io::write_text(fs::path(out_dir) / "sweep_records.jsonl", recs.str());
  out << csv.str();
  out << "wrote " << runs.size() << " rows to " << (fs::path(out_dir) / "sweep.csv").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

inline io::Sidecar load_sidecar_arg(const std::string& path) {
  const fs::path p(path);
  if (fs::is_directory(p)) return io::read_sidecar(p / io::kSidecarFile);
  return io::read_sidecar(p);
}

inline int cmd_report(const std::string& model_dir, const std::string& corpus, Index top_m,
                      const std::string& out_dir, bool with_accuracy, std::ostream& out) {
  const NmfModel model = io::read_model(model_dir);
  const io::Sidecar side = load_sidecar_arg(corpus);
  if (side.vocabulary.size() != model.u.rows() || side.doc_ids.size() != model.v.rows()) {
    throw InputError("model (" + std::to_string(model.u.rows()) + " terms, " + std::to_string(model.v.rows()) +
                     " documents) does not match sidecar (" + std::to_string(side.vocabulary.size()) + " terms, " +
                     std::to_string(side.doc_ids.size()) + " documents)");
  }
  const auto topics = top_terms(model, side.vocabulary, top_m);
  json report{{"topics", io::topics_json(topics)}, {"distribution", io::distribution_json(uneven_distribution_report(model))}};

  std::optional<std::vector<TopicAccuracy>> acc;
  if (with_accuracy) {
    if (side.labels) {
      acc = topic_accuracies(model, side.labels->index, side.labels->names.size());
      const double mean = mean_accuracy(model, side.labels->index, side.labels->names.size());
      report["accuracy"] = io::accuracy_json(*acc, mean);
    } else {
      out << "notice: corpus has no labels; accuracy skipped\n";
    }
  }
  const std::string table = io::topics_table(topics, acc ? &*acc : nullptr);
  out << table;
  if (report.contains("accuracy")) out << "mean accuracy: " << fixed(report["accuracy"]["mean_accuracy"].get<double>(), 4) << "\n";

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const std::string stem = with_accuracy ? "eval" : "topics";
    io::write_text(fs::path(out_dir) / (stem + ".json"), report.dump(2) + "\n");
    io::write_text(fs::path(out_dir) / (stem + ".txt"), table);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

/// Runs the command line `args` (args[0] is the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse nonnegative matrix factorization for topic modeling", "esnmf"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  std::string config_path;
  IngestOptions ingest_o;
  auto* ingest = app.add_subcommand("ingest", "Build a normalized term-document matrix");
  ingest->add_option("--config", config_path, "TOML file with option defaults");
  ingest->add_option("corpus", ingest_o.corpus, "Directory of .txt files or a doc_id<TAB>label<TAB>text file");
  ingest->add_option("--stopwords", ingest_o.stopwords, "Stop-word file, one term per line");
  ingest->add_option("--min-term-count", ingest_o.min_term_count, "Drop terms seen fewer times in the corpus")
      ->capture_default_str();
  ingest->add_flag("--keep-case", ingest_o.keep_case, "Do not lowercase tokens");
  ingest->add_flag("--no-normalize", ingest_o.no_normalize, "Keep raw counts");
  ingest->add_option("--out", ingest_o.out, "Output directory")->required();
  ingest->add_flag("--synthetic", ingest_o.synthetic, "Generate a planted-topic corpus instead of reading one");
  ingest->add_option("--topics", ingest_o.topics, "Synthetic: number of topics")->capture_default_str();
  ingest->add_option("--docs-per-topic", ingest_o.docs_per_topic, "Synthetic: documents per topic")->capture_default_str();
  ingest->add_option("--terms-per-topic", ingest_o.terms_per_topic, "Synthetic: private terms per topic")
      ->capture_default_str();
  ingest->add_option("--overlap", ingest_o.overlap, "Synthetic: shared-term fraction in [0,1)")->capture_default_str();
  ingest->add_option("--noise", ingest_o.noise, "Synthetic: noise-token rate in [0,1)")->capture_default_str();
  ingest->add_option("--seed", ingest_o.seed, "Synthetic: generator seed")->capture_default_str();

  std::string fact_input, fact_out;
  SolverOptions fact_o;
  auto* factorize = app.add_subcommand("factorize", "Compute a factorization and its iteration records");
  factorize->add_option("--config", config_path, "TOML file with option defaults");
  factorize->add_option("input", fact_input, "Corpus directory or .mtx file")->required();
  add_solver_options(*factorize, fact_o);
  factorize->add_option("--out", fact_out, "Output directory")->required();

  std::string sweep_input, sweep_out;
  SolverOptions sweep_o;
  SweepOptions sweep_s;
  auto* sweep = app.add_subcommand("sweep", "Run a grid of sparsity budgets and write CSV");
  sweep->add_option("--config", config_path, "TOML file with option defaults");
  sweep->add_option("input", sweep_input, "Corpus directory or .mtx file")->required();
  add_solver_options(*sweep, sweep_o);
  sweep->add_option("--budgets", sweep_s.budgets, "Budgets to sweep")->delimiter(',')->required();
  sweep->add_option("--targets", sweep_s.targets, "Factors to constrain: u, v, both")->delimiter(',');
  sweep->add_option("--solvers", sweep_s.solvers, "als, per-column, sequential, enforce-after")->delimiter(',');
  sweep->add_option("--out", sweep_out, "Output directory")->required();

  std::string topics_model, topics_corpus, topics_out;
  Index topics_m = 5;
  auto* topics = app.add_subcommand("topics", "Print the top terms of every topic");
  topics->add_option("model", topics_model, "Model directory")->required();
  topics->add_option("--corpus", topics_corpus, "Corpus directory or sidecar JSON")->required();
  topics->add_option("--top", topics_m, "Terms per topic")->capture_default_str();
  topics->add_option("--out", topics_out, "Write topics.json and topics.txt here");

  std::string eval_model, eval_corpus, eval_out;
  Index eval_m = 5;
  auto* eval = app.add_subcommand("eval", "Topic terms plus document clustering accuracy");
  eval->add_option("model", eval_model, "Model directory")->required();
  eval->add_option("--corpus", eval_corpus, "Corpus directory or sidecar JSON")->required();
  eval->add_option("--top", eval_m, "Terms per topic")->capture_default_str();
  eval->add_option("--out", eval_out, "Write eval.json and eval.txt here");

  std::vector<std::string> rest(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    for (auto* sub : {ingest, factorize, sweep}) {
      if (sub->parsed()) apply_config_file(*sub, config_path);
    }
    if (ingest->parsed()) return cmd_ingest(ingest_o, out);
    if (factorize->parsed()) return cmd_factorize(fact_input, fact_o, fact_out, out);
    if (sweep->parsed()) return cmd_sweep(sweep_input, sweep_o, sweep_s, sweep_out, out);
    if (topics->parsed()) return cmd_report(topics_model, topics_corpus, topics_m, topics_out, false, out);
    if (eval->parsed()) return cmd_report(eval_model, eval_corpus, eval_m, eval_out, true, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DegenerateFactorError& e) {
    err << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const DimensionError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitUsage;
}

}  // namespace esnmf::cli
