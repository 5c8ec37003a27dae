#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "esnmf/cli.hpp"
#include "esnmf/io.hpp"

using namespace esnmf;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run esnmf_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "esnmf");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("esnmf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string path(const std::string& name) const { return (root_ / name).string(); }

  std::string synthetic(const std::string& name, double overlap = 0.1, double noise = 0.05) {
    const auto r = esnmf_cli({"ingest", "--synthetic", "--overlap", std::to_string(overlap), "--noise",
                              std::to_string(noise), "--seed", "4", "--out", path(name)});
    EXPECT_EQ(r.code, 0) << r.err;
    return path(name);
  }

  fs::path root_;
};

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

}  // namespace

TEST_F(CliTest, IngestTinyCorpus) {
  std::ofstream(path("tiny.tsv")) << "d1\tpets\tcat cat dog\nd2\tfarm\tdog fish\n";
  const auto r = esnmf_cli({"ingest", path("tiny.tsv"), "--min-term-count", "1", "--out", path("c")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("terms: 3"), std::string::npos);
  EXPECT_NE(r.out.find("sparsity: 33.33%"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("c/matrix.mtx")));

  const auto tdm = io::read_corpus(path("c"));
  EXPECT_EQ(tdm.vocabulary, (std::vector<std::string>{"cat", "dog", "fish"}));
  EXPECT_EQ(tdm.matrix, SparseMatrix::from_dense(3, 2, std::vector<double>{2, 0, 0.5, 0.5, 0, 1}));
  ASSERT_TRUE(tdm.labels.has_value());
  EXPECT_EQ(tdm.labels->names, (std::vector<std::string>{"farm", "pets"}));
}

TEST_F(CliTest, IngestTextDirectoryWithStopWords) {
  fs::create_directories(path("docs"));
  std::ofstream(path("docs/a.txt")) << "The cat and the dog";
  std::ofstream(path("docs/b.txt")) << "the dog and a cat";
  std::ofstream(path("stop.txt")) << "the\nand\n";
  const auto r = esnmf_cli({"ingest", path("docs"), "--stopwords", path("stop.txt"), "--out", path("c")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto tdm = io::read_corpus(path("c"));
  EXPECT_EQ(tdm.vocabulary, (std::vector<std::string>{"cat", "dog"}));
  EXPECT_EQ(tdm.doc_ids, (std::vector<std::string>{"a", "b"}));
  EXPECT_FALSE(tdm.labels.has_value());
}

TEST_F(CliTest, IngestMissingStopWordFile) {
  std::ofstream(path("tiny.tsv")) << "d1\tx\tcat cat\n";
  const auto r = esnmf_cli({"ingest", path("tiny.tsv"), "--stopwords", path("nope.txt"), "--out", path("c")});
  EXPECT_EQ(r.code, cli::kExitInput);
  EXPECT_NE(r.err.find("nope.txt"), std::string::npos);
}

TEST_F(CliTest, IngestEmptyVocabularyAndMissingCorpus) {
  std::ofstream(path("tiny.tsv")) << "d1\tx\tcat dog\n";
  EXPECT_EQ(esnmf_cli({"ingest", path("tiny.tsv"), "--out", path("c")}).code, cli::kExitInput);
  EXPECT_EQ(esnmf_cli({"ingest", path("missing.tsv"), "--out", path("c")}).code, cli::kExitInput);
  EXPECT_EQ(esnmf_cli({"ingest", "--out", path("c")}).code, cli::kExitUsage);
}

TEST_F(CliTest, IngestIsByteIdenticalOnRerun) {
  const auto a = synthetic("a");
  const auto b = synthetic("b");
  for (const char* f : {io::kMatrixFile, io::kSidecarFile}) {
    EXPECT_EQ(io::read_text(fs::path(a) / f), io::read_text(fs::path(b) / f)) << f;
  }
}

TEST_F(CliTest, FactorizeWritesOneRecordPerIteration) {
  const auto corpus = synthetic("c");
  const auto r = esnmf_cli({"factorize", corpus, "--k", "5", "--max-iters", "50", "--out", path("m")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto recs = io::read_records(path("m/records.jsonl"));
  ASSERT_EQ(recs.size(), 50u);
  for (Index i = 0; i < recs.size(); ++i) EXPECT_EQ(recs[i].iter, i + 1);

  const auto manifest = io::read_json(path("m/model.json"));
  EXPECT_EQ(manifest["k"], 5);
  EXPECT_EQ(manifest["solver"], "als");
  EXPECT_EQ(manifest["iterations"], 50);
  EXPECT_EQ(manifest["config"]["max_iters"], 50);
  const auto model = io::read_model(path("m"));
  EXPECT_EQ(model.rank(), 5u);
  EXPECT_EQ(model.u.nnz(), recs.back().nnz_u);
}

TEST_F(CliTest, FactorizeRespectsBudget) {
  const auto corpus = synthetic("c");
  const auto r = esnmf_cli({"factorize", corpus, "--nnz-u", "55", "--max-iters", "30", "--out", path("m")});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& rec : io::read_records(path("m/records.jsonl"))) EXPECT_LE(rec.nnz_u, 55u);
  EXPECT_EQ(io::read_json(path("m/model.json"))["config"]["t_u"], 55);
}

TEST_F(CliTest, FactorizeSequentialRunsEveryBlock) {
  const auto corpus = synthetic("c");
  const auto r = esnmf_cli({"factorize", corpus, "--sequential", "--block-size", "1", "--blocks", "5",
                            "--iters-per-block", "20", "--tol", "0", "--out", path("m")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto recs = io::read_records(path("m/records.jsonl"));
  ASSERT_EQ(recs.size(), 100u);
  EXPECT_EQ(recs.back().block, 4u);
  EXPECT_EQ(io::read_model(path("m")).rank(), 5u);
  EXPECT_EQ(io::read_json(path("m/model.json"))["solver"], "sequential");
}

TEST_F(CliTest, FactorizeEnforceAfter) {
  const auto corpus = synthetic("c");
  const auto r = esnmf_cli(
      {"factorize", corpus, "--enforce-after", "--nnz-u", "20", "--nnz-v", "40", "--max-iters", "20", "--out", path("m")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto model = io::read_model(path("m"));
  EXPECT_LE(model.u.nnz(), 20u);
  EXPECT_LE(model.v.nnz(), 40u);
  EXPECT_EQ(esnmf_cli({"factorize", corpus, "--enforce-after", "--out", path("n")}).code, cli::kExitUsage);
}

TEST_F(CliTest, FactorizeErrors) {
  const auto corpus = synthetic("c");
  EXPECT_EQ(esnmf_cli({"factorize", corpus, "--nnz-u", "2", "--out", path("m")}).code, cli::kExitUsage);
  EXPECT_EQ(esnmf_cli({"factorize", path("missing"), "--out", path("m")}).code, cli::kExitInput);
  EXPECT_EQ(esnmf_cli({"factorize", corpus, "--sequential", "--k", "4", "--blocks", "5", "--out", path("m")}).code,
            cli::kExitUsage);
  EXPECT_EQ(esnmf_cli({"factorize", corpus}).code, cli::kExitUsage);
  EXPECT_EQ(esnmf_cli({"frobnicate"}).code, cli::kExitUsage);

  // singular Gram system without ridge
  std::ofstream(path("one.mtx")) << "%%MatrixMarket matrix coordinate real general\n1 2 2\n1 1 1\n1 2 1\n";
  const auto r = esnmf_cli({"factorize", path("one.mtx"), "--k", "2", "--init-nnz", "2", "--ridge", "0", "--out",
                            path("m")});
  EXPECT_EQ(r.code, cli::kExitSolver) << r.err;
}

TEST_F(CliTest, SweepRowsPerTargetAndBudget) {
  const auto corpus = synthetic("c");
  const auto r = esnmf_cli({"sweep", corpus, "--budgets", "10,25,50", "--max-iters", "15", "--out", path("s")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = io::read_text(path("s/sweep.csv"));
  EXPECT_EQ(count_lines(csv), 1u + 3u * 3u);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "solver,target,t_u,t_v,iterations,residual,error,mean_accuracy,peak_nnz,max_nnz_uv,final_nnz_u,"
            "final_nnz_v,wall_ms,ms_per_iter");
  EXPECT_NE(csv.find("\nals,u,10,,15,"), std::string::npos);
  EXPECT_NE(csv.find("\nals,v,,25,15,"), std::string::npos);
  EXPECT_EQ(count_lines(io::read_text(path("s/sweep_records.jsonl"))), 9u * 15u);
}

TEST_F(CliTest, SweepWithEverySolver) {
  const auto corpus = synthetic("c");
  const auto r = esnmf_cli({"sweep", corpus, "--budgets", "10,40", "--targets", "both", "--solvers",
                            "als,per-column,sequential,enforce-after", "--max-iters", "10", "--out", path("s")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = io::read_text(path("s/sweep.csv"));
  EXPECT_EQ(count_lines(csv), 1u + 4u * 2u);
  EXPECT_NE(csv.find("\nenforce-after,both,40,40,"), std::string::npos);
  EXPECT_NE(csv.find("\nsequential,both,10,10,"), std::string::npos);
}

TEST_F(CliTest, SweepUsageErrors) {
  const auto corpus = synthetic("c");
  EXPECT_EQ(esnmf_cli({"sweep", corpus, "--out", path("s")}).code, cli::kExitUsage);
  EXPECT_EQ(esnmf_cli({"sweep", corpus, "--budgets", "", "--out", path("s")}).code, cli::kExitUsage);
  EXPECT_EQ(esnmf_cli({"sweep", corpus, "--budgets", "10", "--targets", "w", "--out", path("s")}).code,
            cli::kExitUsage);
  EXPECT_EQ(esnmf_cli({"sweep", corpus, "--budgets", "10", "--nnz-u", "5", "--out", path("s")}).code,
            cli::kExitUsage);
}

TEST_F(CliTest, EvalPlantedModelIsPerfect) {
  const auto corpus = synthetic("c", 0.0, 0.0);
  const auto tdm = io::read_corpus(corpus);
  std::vector<Triplet> u, v;
  for (Index i = 0; i < tdm.matrix.rows(); ++i) u.push_back({i, i / 10, 1.0 + static_cast<double>(i % 10)});
  for (Index j = 0; j < tdm.matrix.cols(); ++j) v.push_back({j, tdm.labels->index[j], 1.0});
  const NmfModel planted{SparseMatrix::from_triplets(tdm.matrix.rows(), 5, u),
                         SparseMatrix::from_triplets(tdm.matrix.cols(), 5, v)};
  io::write_model(path("m"), planted, {}, json::object());

  const auto r = esnmf_cli({"eval", path("m"), "--corpus", corpus, "--top", "3", "--out", path("e")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("mean accuracy: 1.0000"), std::string::npos);
  EXPECT_NE(r.out.find("Topic 1"), std::string::npos);
  const auto report = io::read_json(path("e/eval.json"));
  EXPECT_EQ(report["accuracy"]["mean_accuracy"], 1.0);
  for (const auto& t : report["topics"]) EXPECT_EQ(t["terms"].size(), 3u);
  EXPECT_EQ(report["topics"][0]["terms"][0]["term"], "topic0_term09");
}

TEST_F(CliTest, TopicsAtMostMTermsAndNoLabelsNotice) {
  std::ofstream(path("tiny.tsv")) << "d1\tx\tcat cat dog dog fish fish\nd2\ty\tdog fish\n";
  ASSERT_EQ(esnmf_cli({"ingest", path("tiny.tsv"), "--out", path("c")}).code, 0);
  json side = io::read_json(path("c/sidecar.json"));
  side.erase("labels");
  side.erase("label_names");
  io::write_text(path("c/sidecar.json"), side.dump());
  ASSERT_EQ(esnmf_cli({"factorize", path("c"), "--k", "2", "--max-iters", "5", "--out", path("m")}).code, 0);

  const auto topics = esnmf_cli({"topics", path("m"), "--corpus", path("c"), "--top", "2", "--out", path("t")});
  ASSERT_EQ(topics.code, 0) << topics.err;
  for (const auto& t : io::read_json(path("t/topics.json"))["topics"]) EXPECT_LE(t["terms"].size(), 2u);

  const auto eval = esnmf_cli({"eval", path("m"), "--corpus", path("c/sidecar.json")});
  ASSERT_EQ(eval.code, 0) << eval.err;
  EXPECT_NE(eval.out.find("notice: corpus has no labels"), std::string::npos);
  EXPECT_NE(eval.out.find("Topic 2"), std::string::npos);
}

TEST_F(CliTest, EvalShapeMismatch) {
  const auto big = synthetic("big");
  std::ofstream(path("tiny.tsv")) << "d1\tx\tcat cat dog dog\nd2\ty\tdog cat\n";
  ASSERT_EQ(esnmf_cli({"ingest", path("tiny.tsv"), "--out", path("small")}).code, 0);
  ASSERT_EQ(esnmf_cli({"factorize", big, "--max-iters", "3", "--out", path("m")}).code, 0);
  const auto r = esnmf_cli({"eval", path("m"), "--corpus", path("small")});
  EXPECT_EQ(r.code, cli::kExitInput);
  EXPECT_NE(r.err.find("does not match"), std::string::npos);
}

TEST_F(CliTest, RoundTripIngestFactorizeEval) {
  std::ofstream tsv(path("corpus.tsv"));
  for (int d = 0; d < 12; ++d) {
    tsv << "doc" << d << '\t' << (d % 2 ? "space" : "food") << '\t'
        << (d % 2 ? "rocket orbit launch rocket planet orbit" : "bread cheese apple bread soup cheese") << '\n';
  }
  tsv.close();
  ASSERT_EQ(esnmf_cli({"ingest", path("corpus.tsv"), "--out", path("c")}).code, 0);
  const auto f = esnmf_cli({"factorize", path("c"), "--k", "2", "--max-iters", "50", "--seed", "1", "--out", path("m")});
  ASSERT_EQ(f.code, 0) << f.err;
  const auto e = esnmf_cli({"eval", path("m"), "--corpus", path("c"), "--out", path("e")});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_TRUE(fs::exists(path("e/eval.txt")));
  const double err = io::read_json(path("m/model.json"))["final_error"];
  EXPECT_LT(err, 1e-6);
}

TEST_F(CliTest, ConfigFileWithFlagPrecedence) {
  const auto corpus = synthetic("c");
  std::ofstream(path("run.toml")) << "k = 3\nmax-iters = 7\nseed = 9\nnnz-v = 40\n";
  const auto r = esnmf_cli(
      {"factorize", corpus, "--config", path("run.toml"), "--max-iters", "4", "--tol", "0", "--out", path("m")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto manifest = io::read_json(path("m/model.json"));
  EXPECT_EQ(manifest["k"], 3);
  EXPECT_EQ(manifest["config"]["max_iters"], 4);
  EXPECT_EQ(manifest["config"]["seed"], 9);
  EXPECT_EQ(manifest["config"]["t_v"], 40);
  EXPECT_EQ(io::read_records(path("m/records.jsonl")).size(), 4u);

  std::ofstream(path("section.toml")) << "[factorize]\nk = 2\nmax_iters = 3\n";
  ASSERT_EQ(esnmf_cli({"factorize", corpus, "--config", path("section.toml"), "--out", path("n")}).code, 0);
  EXPECT_EQ(io::read_json(path("n/model.json"))["k"], 2);
  EXPECT_EQ(io::read_json(path("n/model.json"))["config"]["max_iters"], 3);

  std::ofstream(path("bad.toml")) << "bogus = 1\n";
  EXPECT_EQ(esnmf_cli({"factorize", corpus, "--config", path("bad.toml"), "--out", path("o")}).code,
            cli::kExitUsage);
  EXPECT_EQ(esnmf_cli({"factorize", corpus, "--config", path("none.toml"), "--out", path("o")}).code,
            cli::kExitInput);
}

TEST_F(CliTest, HelpExitsCleanly) {
  const auto r = esnmf_cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("factorize"), std::string::npos);
}

TEST(Io, RecordsRoundTrip) {
  std::vector<IterationRecord> recs{{1, 0.5, 0.25, 10, 20, 40, 0}, {2, 1e-300, 1.0 / 3.0, 11, 19, 45, 1}};
  std::ostringstream os;
  io::write_records(os, recs);
  const auto p = fs::temp_directory_path() / "esnmf_io_records.jsonl";
  io::write_text(p, os.str());
  EXPECT_EQ(io::read_records(p), recs);
  io::write_text(p, "{not json}\n");
  EXPECT_THROW(io::read_records(p), InputError);
  fs::remove(p);
}

TEST(Io, BareMatrixGetsPlaceholderNames) {
  const auto dir = fs::temp_directory_path() / "esnmf_io_bare";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_matrix_market(dir / "a.mtx", SparseMatrix::identity(2));
  const auto tdm = io::read_corpus(dir / "a.mtx");
  EXPECT_EQ(tdm.vocabulary, (std::vector<std::string>{"term0", "term1"}));
  EXPECT_EQ(tdm.doc_ids, (std::vector<std::string>{"doc0", "doc1"}));
  EXPECT_FALSE(tdm.labels.has_value());

  io::write_text(dir / "a.json", R"({"vocabulary":["x"],"doc_ids":["d0","d1"]})");
  EXPECT_THROW(io::read_corpus(dir / "a.mtx"), InputError);
  fs::remove_all(dir);
}

TEST(Io, TopicsTableLayout) {
  const std::vector<TopicTermReport> reps{{0, {{"apple", 2.0}, {"pie", 1.0}}}, {1, {{"rocket", 3.0}}}};
  EXPECT_EQ(io::topics_table(reps),
            "Topic 1 | Topic 2\n"
            "--------+--------\n"
            "apple   | rocket\n"
            "pie     | \n");
}
