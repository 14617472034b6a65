#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "hyq/graph.hpp"
#include "hyq/model.hpp"
#include "hyq/random.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("hyq_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

Result run(const std::vector<std::string>& args) {
  static int counter = 0;
  const auto dir = fs::temp_directory_path() / "hyq_cli_test_io";
  fs::create_directories(dir);
  const auto out = dir / ("out" + std::to_string(counter));
  const auto err = dir / ("err" + std::to_string(counter++));
  std::string cmd = quote(HYQ_CLI_PATH);
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += " >" + quote(out.string()) + " 2>" + quote(err.string());
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(out), read_file(err)};
}

Result ok(const std::vector<std::string>& args) {
  auto r = run(args);
  EXPECT_EQ(r.code, 0) << args.front() << ": " << r.err;
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

/// Random triples written as train/valid/test TSV files.
void write_random_tsvs(const fs::path& dir, std::size_t entities, std::size_t relations, std::size_t edges,
                       std::size_t test_edges, std::uint64_t seed) {
  hyq::Rng rng(seed);
  std::set<std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>> seen;
  std::ofstream train(dir / "train.tsv"), test(dir / "test.tsv"), valid(dir / "valid.tsv");
  while (seen.size() < edges) {
    const auto h = rng.index(entities), r = rng.index(relations), t = rng.index(entities);
    if (!seen.insert({h, r, t}).second) continue;
    auto& out = seen.size() <= test_edges ? test : train;
    out << "n" << h << "\trel" << r << "\tn" << t << "\n";
  }
}

/// Closed-form mean and standard error of MRR for uniform random scores,
/// pooled over every hard answer in a query file.
std::pair<double, double> random_mrr(const fs::path& queries, std::size_t num_entities) {
  double mean = 0.0, var = 0.0;
  std::size_t n = 0;
  std::ifstream in(queries);
  for (std::string line; std::getline(in, line);) {
    const auto j = nlohmann::json::parse(line);
    const std::size_t candidates = num_entities - j["easy"].size() - j["hard"].size() + 1;
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t k = 1; k <= candidates; ++k) {
      m1 += 1.0 / static_cast<double>(k);
      m2 += 1.0 / static_cast<double>(k * k);
    }
    m1 /= static_cast<double>(candidates);
    m2 /= static_cast<double>(candidates);
    for (std::size_t i = 0; i < j["hard"].size(); ++i) {
      mean += m1;
      var += m2 - m1 * m1;
      ++n;
    }
  }
  return {mean / static_cast<double>(n), std::sqrt(var) / static_cast<double>(n)};
}

}  // namespace

TEST(Cli, VersionAndHelp) {
  const auto v = ok({"--version"});
  EXPECT_EQ(v.out, std::string("hyq ") + HYQ_VERSION + "\n");
  EXPECT_NE(ok({"--help"}).out.find("gen-queries"), std::string::npos);
  EXPECT_NE(ok({"train", "--help"}).out.find("--lr"), std::string::npos);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"bogus"}).code, 1);
}

TEST(Cli, AnswerOnAnchorIsCertain) {
  const auto dir = fresh_dir("anchor");
  ok({"synth", "--out", (dir / "g").string(), "--entities", "30", "--seed", "1"});
  ok({"gen-queries", "--graph", (dir / "g").string(), "--structures", "1p", "--count", "5", "--split", "train",
      "--seed", "1", "--out", (dir / "q.jsonl").string()});
  ok({"train", "--graph", (dir / "g").string(), "--queries", (dir / "q.jsonl").string(), "--out",
      (dir / "m").string(), "--epochs", "0", "--dim", "8", "--layers", "2", "--seed", "1"});
  const auto r = ok({"answer", "--graph", (dir / "g").string(), "--checkpoint", (dir / "m/model.hyqr").string(),
                     "--top-k", "3", "--trace", (dir / "trace.json").string(), "(e e0005)"});
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "e0005\t1.000000");
  EXPECT_EQ(rows[1].substr(rows[1].find('\t')), "\t0.000000");
  const auto trace = nlohmann::json::parse(read_file(dir / "trace.json"));
  EXPECT_EQ(trace["nodes"].size(), 1u);
}

TEST(Cli, PipelineSmokeUnderOneMinute) {
  const auto start = std::chrono::steady_clock::now();
  const auto dir = fresh_dir("smoke");
  ok({"synth", "--out", (dir / "raw").string(), "--entities", "50", "--test-fraction", "0.1", "--valid-fraction",
      "0.05", "--seed", "3"});
  ok({"ingest", "--train", (dir / "raw/train.tsv").string(), "--valid", (dir / "raw/valid.tsv").string(), "--test",
      (dir / "raw/test.tsv").string(), "--out", (dir / "g").string()});
  const auto g = (dir / "g").string();
  ok({"gen-queries", "--graph", g, "--structures", "1p,2p,2i,2in", "--count", "20", "--split", "train", "--seed", "4",
      "--out", (dir / "train.jsonl").string()});
  ok({"gen-queries", "--graph", g, "--structures", "1p,2i,2u", "--count", "10", "--split", "test", "--seed", "5",
      "--out", (dir / "test.jsonl").string()});
  ok({"train", "--graph", g, "--queries", (dir / "train.jsonl").string(), "--out", (dir / "m").string(), "--epochs",
      "2", "--dim", "8", "--layers", "2", "--seed", "6"});
  for (const char* f : {"epoch-1.hyqr", "epoch-2.hyqr", "model.hyqr", "loss.csv", "config.json"}) {
    EXPECT_TRUE(fs::exists(dir / "m" / f)) << f;
  }
  const auto r = ok({"eval", "--graph", g, "--queries", (dir / "test.jsonl").string(), "--checkpoint",
                     (dir / "m/model.hyqr").string(), "--out", (dir / "eval").string()});
  const auto report = nlohmann::json::parse(r.out);
  EXPECT_EQ(report["structures"].size(), 3u);
  EXPECT_EQ(read_file(dir / "eval/report.json"), r.out);
  EXPECT_EQ(lines(read_file(dir / "eval/ranks.tsv")).front(), "query\tstructure\tentity\trank");
  const auto card = ok({"cardinality", "--graph", g, "--queries", (dir / "test.jsonl").string(), "--checkpoint",
                        (dir / "m/model.hyqr").string()});
  EXPECT_EQ(lines(card.out).front(), "structure\tqueries\tspearman");
  EXPECT_EQ(lines(card.out).size(), 4u);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 60.0);
}

TEST(Cli, RandomInitEvalIsNearRandomRanking) {
  const auto dir = fresh_dir("random");
  write_random_tsvs(dir, 40, 3, 200, 30, 3);
  ok({"ingest", "--train", (dir / "train.tsv").string(), "--valid", (dir / "valid.tsv").string(), "--test",
      (dir / "test.tsv").string(), "--out", (dir / "g").string()});
  const auto g = (dir / "g").string();
  ok({"gen-queries", "--graph", g, "--structures", "1p,2p,2i", "--count", "100", "--split", "test", "--seed", "1",
      "--out", (dir / "q.jsonl").string()});
  ok({"train", "--graph", g, "--queries", (dir / "q.jsonl").string(), "--out", (dir / "m").string(), "--epochs", "0",
      "--seed", "1"});
  ok({"eval", "--graph", g, "--queries", (dir / "q.jsonl").string(), "--checkpoint", (dir / "m/model.hyqr").string(),
      "--ranks", (dir / "ranks.tsv").string()});
  double total = 0.0;
  std::size_t n = 0;
  const auto rows = lines(read_file(dir / "ranks.tsv"));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    total += 1.0 / std::stod(rows[i].substr(rows[i].rfind('\t') + 1));
    ++n;
  }
  const auto [expect, sigma] = random_mrr(dir / "q.jsonl", 40);
  EXPECT_NEAR(total / static_cast<double>(n), expect, 3 * sigma);
}

TEST(Cli, ExitCodes) {
  const auto dir = fresh_dir("codes");
  ok({"synth", "--out", (dir / "g").string(), "--entities", "20", "--seed", "1"});
  const auto g = (dir / "g").string();
  auto missing = run({"eval", "--graph", g, "--queries", (dir / "nope.jsonl").string(), "--checkpoint", "x"});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("nope.jsonl"), std::string::npos) << missing.err;
  EXPECT_EQ(run({"gen-queries", "--graph", g, "--structures", "1p", "--out", (dir / "q").string()}).code, 1);

  hyq::ProjectionModel model(20, 10, {.dim = 4, .layers = 2}, 1);
  model.save(dir / "fine.hyqr");
  auto bad_query = run({"answer", "--graph", g, "--checkpoint", (dir / "fine.hyqr").string(), "(p parent (e zzz))"});
  EXPECT_EQ(bad_query.code, 1);
  EXPECT_NE(bad_query.err.find("zzz"), std::string::npos) << bad_query.err;

  model.params().at("relations").value.setConstant(std::numeric_limits<double>::infinity());
  model.save(dir / "broken.hyqr");
  auto numeric = run({"answer", "--graph", g, "--checkpoint", (dir / "broken.hyqr").string(), "(p parent (e e0001))"});
  EXPECT_EQ(numeric.code, 2) << numeric.err;

  std::ofstream(dir / "bad.jsonl") << "{\"query\": \"(p parent (e e0001))\"}\n{broken\n";
  auto parse = run({"eval", "--graph", g, "--queries", (dir / "bad.jsonl").string(), "--checkpoint",
                    (dir / "fine.hyqr").string()});
  EXPECT_EQ(parse.code, 1);
  EXPECT_NE(parse.err.find("bad.jsonl:2"), std::string::npos) << parse.err;
}

TEST(Cli, ConfigFileSitsBetweenDefaultsAndFlags) {
  const auto dir = fresh_dir("config");
  ok({"synth", "--out", (dir / "g").string(), "--entities", "20", "--seed", "1"});
  const auto g = (dir / "g").string();
  ok({"gen-queries", "--graph", g, "--structures", "1p", "--count", "3", "--split", "train", "--seed", "1", "--out",
      (dir / "q.jsonl").string()});
  std::ofstream(dir / "cfg.json") << R"({"train": {"seed": 9, "epochs": 0, "dim": 8, "layers": 2}})";
  ok({"--config", (dir / "cfg.json").string(), "train", "--graph", g, "--queries", (dir / "q.jsonl").string(), "--out",
      (dir / "a").string()});
  auto echoed = nlohmann::json::parse(read_file(dir / "a/config.json"));
  EXPECT_EQ(echoed["options"]["dim"], "8");
  EXPECT_EQ(echoed["options"]["epochs"], "0");
  EXPECT_EQ(echoed["options"]["seed"], "9");
  EXPECT_EQ(echoed["options"]["lr"], "0.001");
  EXPECT_EQ(hyq::ProjectionModel::load(dir / "a/model.hyqr").config().dim, 8u);

  ok({"--config", (dir / "cfg.json").string(), "train", "--graph", g, "--queries", (dir / "q.jsonl").string(), "--out",
      (dir / "b").string(), "--dim", "6"});
  echoed = nlohmann::json::parse(read_file(dir / "b/config.json"));
  EXPECT_EQ(echoed["options"]["dim"], "6");
  EXPECT_EQ(hyq::ProjectionModel::load(dir / "b/model.hyqr").config().dim, 6u);

  std::ofstream(dir / "typo.json") << R"({"train": {"epoch": 3}})";
  EXPECT_EQ(run({"--config", (dir / "typo.json").string(), "train", "--graph", g, "--queries",
                 (dir / "q.jsonl").string(), "--out", (dir / "c").string(), "--seed", "1"})
                .code,
            1);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  const auto dir = fresh_dir("repeat");
  ok({"synth", "--out", (dir / "g").string(), "--entities", "40", "--seed", "2"});
  const auto g = (dir / "g").string();
  for (const char* name : {"a", "b"}) {
    ok({"gen-queries", "--graph", g, "--structures", "1p,2i", "--count", "10", "--split", "train", "--seed", "3",
        "--out", (dir / (std::string(name) + ".jsonl")).string()});
  }
  EXPECT_EQ(read_file(dir / "a.jsonl"), read_file(dir / "b.jsonl"));
  ok({"gen-queries", "--graph", g, "--structures", "1p,2i", "--count", "10", "--split", "test", "--seed", "3", "--out",
      (dir / "t.jsonl").string()});
  ok({"train", "--graph", g, "--queries", (dir / "a.jsonl").string(), "--out", (dir / "m").string(), "--epochs", "1",
      "--dim", "4", "--layers", "2", "--seed", "1"});
  std::vector<std::string> reports;
  for (const char* threads : {"1", "3"}) {
    reports.push_back(ok({"--threads", threads, "eval", "--graph", g, "--queries", (dir / "t.jsonl").string(),
                          "--checkpoint", (dir / "m/model.hyqr").string()})
                          .out);
  }
  EXPECT_EQ(reports[0], reports[1]);
}
