#include <gtest/gtest.h>

#include <cstdlib>
#include <sys/wait.h>

#include "chartforge/config.hpp"
#include "chartforge/error.hpp"
#include "chartforge/pipeline.hpp"
#include "fakes.hpp"
#include "test_util.hpp"

namespace chartforge {
namespace {

namespace fs = std::filesystem;
const fs::path kCli = CHARTFORGE_CLI_PATH;
const fs::path kSnapshots = fs::path(CHARTFORGE_TEST_SUPPORT_DIR).parent_path() / "snapshots";
const fs::path kFixtureCorpus = fs::path(CHARTFORGE_FIXTURE_DIR) / "corpus" / "corpus.jsonl";

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

Run cli(const std::vector<std::string>& args, const std::string& env = "") {
  static test::TempDir scratch;
  static std::atomic<int> n{0};
  const auto id = std::to_string(n++);
  const auto out = scratch.path() / ("out" + id);
  const auto err = scratch.path() / ("err" + id);
  std::string cmd = env + " " + quote(kCli.string());
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += " >" + quote(out.string()) + " 2>" + quote(err.string());
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = test::read_file(out);
  r.err = test::read_file(err);
  return r;
}

std::string runner_env() {
  const auto r = test::stub_runner();
  return "CHARTFORGE_RUNNER=" + quote(r[0] + " " + r[1]);
}

// Last stderr line that parses as a JSON error record.
nlohmann::json error_record(const std::string& err) {
  nlohmann::json rec;
  for (const auto& line : split_lines(err)) {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (!j.is_discarded() && j.contains("error")) rec = j["error"];
  }
  return rec;
}

// ---------------------------------------------------------------------------

class HelpSnapshot : public ::testing::TestWithParam<std::string> {};

TEST_P(HelpSnapshot, MatchesPinnedText) {
  const auto& sub = GetParam();
  std::vector<std::string> args;
  if (sub != "main") args.push_back(sub);
  args.push_back("--help");
  const auto r = cli(args);
  EXPECT_EQ(r.code, 0);
  const auto path = kSnapshots / ("help_" + sub + ".txt");
  if (std::getenv("CHARTFORGE_UPDATE_SNAPSHOTS")) test::write_file(path, r.out);
  ASSERT_TRUE(fs::exists(path)) << "missing snapshot " << path;
  EXPECT_EQ(r.out, test::read_file(path));
}

INSTANTIATE_TEST_SUITE_P(Cli, HelpSnapshot,
                         ::testing::Values("main", "generate", "analyze", "evaluate", "prep-rl",
                                           "validate"),
                         [](const auto& info) {
                           auto s = info.param;
                           std::replace(s.begin(), s.end(), '-', '_');
                           return s;
                         });

TEST(Cli, HelpListsEveryFlag) {
  const auto r = cli({"evaluate", "--help"});
  for (const char* flag : {"--task", "--corpus", "--predictions", "--report", "--tag", "--json"}) {
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  }
  const auto m = cli({"--help"});
  for (const char* flag : {"--config", "--set", "--seed", "--verbose", "--version"}) {
    EXPECT_NE(m.out.find(flag), std::string::npos) << flag;
  }
}

// ---------------------------------------------------------------------------

TEST(Cli, ValidateFixtureCorpus) {
  const auto r = cli({"validate", kFixtureCorpus.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("ok: 20 entries"), std::string::npos);
}

TEST(Cli, ValidateReportsViolations) {
  test::TempDir d;
  auto line = test::read_file(kFixtureCorpus);
  line = line.substr(0, line.find('\n') + 1);
  test::write_file(d.path() / "corpus.jsonl", line);
  const auto r = cli({"validate", (d.path() / "corpus.jsonl").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("figure_exists"), std::string::npos);
}

TEST(Cli, AnalyzeUniformCorpusPrintsFullEvenness) {
  const auto r = cli({"analyze", kFixtureCorpus.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("shannon evenness: 1.0000"), std::string::npos) << r.out;
  const auto j = cli({"analyze", "--json", kFixtureCorpus.string()});
  const auto parsed = nlohmann::json::parse(j.out);
  EXPECT_EQ(parsed.at("entries"), 20);
  EXPECT_EQ(parsed.at("categories").at("gridded"), 4);
}

TEST(Cli, EveryRunLogsFingerprint) {
  const auto a = cli({"validate", kFixtureCorpus.string()});
  const auto b = cli({"--set", "pipeline.seed=9", "validate", kFixtureCorpus.string()});
  auto fp = [](const std::string& err) {
    for (const auto& line : split_lines(err)) {
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (!j.is_discarded() && j.value("event", "") == "config") return j["fingerprint"].get<std::string>();
    }
    return std::string();
  };
  EXPECT_EQ(fp(a.err).size(), 16u);
  EXPECT_NE(fp(a.err), fp(b.err));
  EXPECT_EQ(fp(a.err), load_config(std::nullopt, {}).fingerprint());
}

TEST(Cli, DataErrorExitsOneWithRecord) {
  test::TempDir d;
  test::write_file(d.path() / "c.jsonl", "{not json\n");
  const auto r = cli({"analyze", (d.path() / "c.jsonl").string()});
  EXPECT_EQ(r.code, 1);
  const auto rec = error_record(r.err);
  EXPECT_EQ(rec.at("kind"), "parse");
  EXPECT_EQ(rec.at("exit_code"), 1);
}

TEST(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(cli({"--set", "pipeline.nope=1", "validate", kFixtureCorpus.string()}).code, 2);
  EXPECT_EQ(cli({"validate", "--bogus-flag", kFixtureCorpus.string()}).code, 2);
  EXPECT_EQ(cli({"evaluate", "--task", "4", "--corpus", "x", "--predictions", "y"}).code, 2);
  EXPECT_EQ(cli({}).code, 2);
  test::TempDir d;
  test::write_file(d.path() / "cfg.json", "{\"eval\": {\"embeding\": \"hash\"}}");
  const auto r = cli({"--config", (d.path() / "cfg.json").string(), "validate", kFixtureCorpus.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(error_record(r.err).at("kind"), "config");
  // Live generation without an endpoint.
  const auto g = cli({"generate", "--out", (d.path() / "o").string()});
  EXPECT_EQ(g.code, 2);
}

TEST(Cli, EvaluateTaskThreeIdentity) {
  test::TempDir d;
  const auto corpus = load_corpus(kFixtureCorpus, Taxonomy::builtin());
  std::string preds;
  for (const auto& e : corpus.entries) {
    preds += nlohmann::json{{"id", e.id}, {"text", e.description}}.dump() + "\n";
  }
  test::write_file(d.path() / "p.jsonl", preds);
  const auto r = cli({"evaluate", "--task", "3", "--corpus", kFixtureCorpus.string(), "--predictions",
                      (d.path() / "p.jsonl").string(), "--report", (d.path() / "r.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = nlohmann::json::parse(test::read_file(d.path() / "r.json"));
  EXPECT_NEAR(rep["aggregates"]["rougeL_f"].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(rep["aggregates"]["bertscore_f"].get<double>(), 1.0, 1e-9);
  EXPECT_EQ(rep["generator_tag"], "p");
}

TEST(Cli, EvaluateTaskOneIdentityThroughRunner) {
  CHARTFORGE_REQUIRE_RUNNER();
  test::TempDir d;
  const auto corpus = load_corpus(kFixtureCorpus, Taxonomy::builtin());
  std::string preds;
  for (const auto& e : corpus.entries) {
    preds += nlohmann::json{{"id", e.id}, {"text", e.code}}.dump() + "\n";
  }
  test::write_file(d.path() / "p.jsonl", preds);
  const auto r = cli({"--set", "sandbox.max_concurrent=4", "evaluate", "--task", "1", "--corpus",
                      kFixtureCorpus.string(), "--predictions", (d.path() / "p.jsonl").string(),
                      "--json"},
                     runner_env());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = nlohmann::json::parse(r.out);
  EXPECT_EQ(rep["error_ratio"]["total"]["error_ratio"].get<double>(), 0.0);
  EXPECT_NEAR(rep["aggregates"]["codebleu"].get<double>(), 1.0, 1e-9);
}

TEST(Cli, PrepRlExportsPairs) {
  test::TempDir d;
  const auto corpus = load_corpus(kFixtureCorpus, Taxonomy::builtin());
  std::string outs, regen;
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    const auto& e = corpus.entries[i];
    const auto code = i < 2 ? e.code : "```python\n" + e.code + "plt.close()\n```";
    outs += nlohmann::json{{"id", e.id}, {"text", code}}.dump() + "\n";
    regen += nlohmann::json{{"id", e.id}, {"text", e.description}}.dump() + "\n";
  }
  test::write_file(d.path() / "outs.jsonl", outs);
  test::write_file(d.path() / "regen.jsonl", regen);
  const auto r = cli({"--seed", "3", "prep-rl", "--corpus", kFixtureCorpus.string(), "--outputs",
                      (d.path() / "outs.jsonl").string(), "--regenerated",
                      (d.path() / "regen.jsonl").string(), "--out", (d.path() / "rl").string(),
                      "--sample-frac", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = nlohmann::json::parse(test::read_file(d.path() / "rl" / "prep_report.json"));
  EXPECT_EQ(rep["pairs"], 18);
  EXPECT_EQ(rep["skips"]["identical_to_reference"], 2);
  EXPECT_EQ(rep["sampled"], 9);
  EXPECT_EQ(rep["rewards"], 9);
  for (const auto& line : split_lines(test::read_file(d.path() / "rl" / "pairs.jsonl"))) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    bool found = false;
    for (const auto& e : corpus.entries) found |= e.description == j["prompt"] && e.code == j["chosen"];
    EXPECT_TRUE(found);
  }
  for (const auto& line : split_lines(test::read_file(d.path() / "rl" / "rewards.jsonl"))) {
    if (!line.empty()) EXPECT_DOUBLE_EQ(nlohmann::json::parse(line)["reward"].get<double>(), 1.0);
  }
}

TEST(Cli, PrepRlEmptyPairsWarns) {
  test::TempDir d;
  test::write_file(d.path() / "outs.jsonl", "");
  const auto r = cli({"prep-rl", "--corpus", kFixtureCorpus.string(), "--outputs",
                      (d.path() / "outs.jsonl").string(), "--out", (d.path() / "rl").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("no preference pairs"), std::string::npos);
  EXPECT_EQ(fs::file_size(d.path() / "rl" / "pairs.jsonl"), 0u);
}

// ---------------------------------------------------------------------------
// generate: record a cache in-process, then replay through the CLI twice.

TEST(Cli, GenerateReplayIsByteIdentical) {
  CHARTFORGE_REQUIRE_RUNNER();
  test::TempDir d;
  const std::string cfg_json = R"({
    "pipeline": {"counts": {"pairwise": 2, "gridded": 1}, "seed": 5, "workers": 2},
    "gateway": {"mode": "replay", "cache_dir": ")" + (d.path() / "cache").string() + R"("}
  })";
  test::write_file(d.path() / "cfg.json", cfg_json);
  const auto cfg = load_config(d.path() / "cfg.json", {});

  test::MockWorld world;
  world.topics = {{"pairwise", test::distinct_topics("p", 2)}, {"gridded", test::distinct_topics("g", 1)}};
  {
    auto gw = test::make_gateway(world.responder(), d.path() / "cache");
    sandbox::SandboxOptions so;
    so.runner = test::stub_runner();
    sandbox::Sandbox sb(so);
    pipeline::Pipeline p(cfg.pipeline, *gw.gateway, sb, pipeline::SeedBank::builtin(),
                         Taxonomy::builtin());
    const auto res = p.run({.out_dir = d.path() / "recorded"});
    ASSERT_EQ(res.report.emitted, 3u);
  }
  const auto env = runner_env() + " CHARTFORGE_CACHE_DIR=" + quote((d.path() / "cache").string());
  const auto a = cli({"--config", (d.path() / "cfg.json").string(), "generate", "--out",
                      (d.path() / "a").string()}, env);
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = cli({"--config", (d.path() / "cfg.json").string(), "--set", "pipeline.workers=1",
                      "generate", "--replay", "--out", (d.path() / "b").string()}, env);
  ASSERT_EQ(b.code, 0) << b.err;
  const auto ca = test::read_file(d.path() / "a" / "corpus.jsonl");
  EXPECT_FALSE(ca.empty());
  EXPECT_EQ(ca, test::read_file(d.path() / "b" / "corpus.jsonl"));
  EXPECT_EQ(ca, test::read_file(d.path() / "recorded" / "corpus.jsonl"));
  EXPECT_TRUE(fs::exists(d.path() / "a" / "reports" / "run_report.json"));

  // A config change that alters requests misses the cache: data error.
  const auto c = cli({"--config", (d.path() / "cfg.json").string(), "--seed", "6", "generate",
                      "--out", (d.path() / "c").string()}, env);
  EXPECT_EQ(c.code, 1);
  EXPECT_EQ(error_record(c.err).at("kind"), "cache_miss");
}

}  // namespace
}  // namespace chartforge
