#include <gtest/gtest.h>

#include <set>
#include <thread>

#include "chartforge/error.hpp"
#include "chartforge/sandbox.hpp"
#include "test_util.hpp"

using namespace chartforge;
using namespace chartforge::sandbox;

namespace {

std::set<std::string> snapshot(const std::filesystem::path& dir) {
  std::set<std::string> out;
  std::error_code ec;
  for (auto it = std::filesystem::recursive_directory_iterator(dir, ec);
       it != std::filesystem::recursive_directory_iterator(); it.increment(ec)) {
    out.insert(it->path().string());
  }
  return out;
}

const char* kPlotScript = R"(import matplotlib.pyplot as plt
xs = [1, 2, 3, 4]
plt.plot(xs, [x * x for x in xs])
plt.title('squares')
plt.savefig('squares.png')
)";

class SandboxTest : public ::testing::Test {
 protected:
  void SetUp() override {
    CHARTFORGE_REQUIRE_RUNNER();
    SandboxOptions opts;
    opts.runner = test::stub_runner();
    opts.base_dir = base.path();
    opts.limits.wall_timeout_seconds = 20;
    sandbox.emplace(opts);
  }
  test::TempDir base;
  std::optional<Sandbox> sandbox;
};

}  // namespace

TEST(Classify, RuleTable) {
  FailureSignals s;
  s.stderr_text = "Traceback (most recent call last):\n  ...\nZeroDivisionError: division by zero\n";
  s.exit_code = 1;
  EXPECT_EQ(classify_failure(s), ErrorClass::RuntimeError);

  FailureSignals bare;
  bare.stderr_text = "ZeroDivisionError: division by zero";
  EXPECT_EQ(classify_failure(bare), ErrorClass::RuntimeError);

  RunnerReport compile_fail;
  compile_fail.phase = "compile";
  FailureSignals syntax;
  syntax.report = &compile_fail;
  EXPECT_EQ(classify_failure(syntax), ErrorClass::SyntaxError);

  FailureSignals syntax_no_report;
  syntax_no_report.stderr_text = "  File \"x\", line 1\n    def (\nSyntaxError: invalid syntax\n";
  syntax_no_report.exit_code = 1;
  EXPECT_EQ(classify_failure(syntax_no_report), ErrorClass::SyntaxError);

  RunnerReport ok;
  ok.ok = true;
  ok.phase = "exec";
  FailureSignals no_fig;
  no_fig.report = &ok;
  EXPECT_EQ(classify_failure(no_fig), ErrorClass::NoFigureProduced);
  no_fig.mode = Mode::Table;
  EXPECT_EQ(classify_failure(no_fig), ErrorClass::None);

  FailureSignals killed = no_fig;
  killed.killed_by_limit = true;
  EXPECT_EQ(classify_failure(killed), ErrorClass::Timeout);

  FailureSignals nonzero;
  nonzero.report = &ok;
  nonzero.exit_code = 3;
  nonzero.figure_count = 1;
  EXPECT_EQ(classify_failure(nonzero), ErrorClass::NonZeroExit);

  FailureSignals clean;
  clean.report = &ok;
  clean.figure_count = 2;
  EXPECT_EQ(classify_failure(clean), ErrorClass::None);
}

TEST(Classify, TotalOverFailures) {
  // Every combination of signals that is not a success maps to exactly one
  // non-None class.
  RunnerReport reports[3];
  reports[0].ok = true;
  reports[0].phase = "exec";
  reports[1].ok = false;
  reports[1].phase = "exec";
  reports[2].ok = false;
  reports[2].phase = "compile";
  const char* stderrs[] = {"", "Traceback (most recent call last):\nValueError: x", "noise"};
  for (int r = -1; r < 3; ++r) {
    for (auto* err : stderrs) {
      for (int code : {0, 1, 137}) {
        for (bool killed : {false, true}) {
          for (auto mode : {Mode::Plot, Mode::Table}) {
            for (std::size_t figs : {0u, 1u}) {
              FailureSignals s{r < 0 ? nullptr : &reports[r], err, code, killed, mode, figs};
              const auto cls = classify_failure(s);
              const bool clean = !killed && code == 0 && std::string(err) != stderrs[1] &&
                                 (r == 0 || (r < 0)) && !(mode == Mode::Plot && figs == 0);
              if (clean) {
                EXPECT_EQ(cls, ErrorClass::None);
              } else {
                EXPECT_NE(cls, ErrorClass::None);
              }
            }
          }
        }
      }
    }
  }
}

TEST(RunnerReport, ParsesLastLine) {
  const auto r = parse_runner_report(
      "noise\n{\"schema_version\":1,\"ok\":true,\"phase\":\"exec\",\"figures\":[\"figure_1.png\"],"
      "\"csvs\":[],\"library_versions\":{\"matplotlib\":\"3.8.0\"}}\n\n");
  ASSERT_TRUE(r.has_value());
  EXPECT_TRUE(r->ok);
  EXPECT_EQ(r->figures, std::vector<std::string>{"figure_1.png"});
  EXPECT_EQ(r->library_versions.at("matplotlib"), "3.8.0");
  EXPECT_FALSE(parse_runner_report("not json").has_value());
  EXPECT_FALSE(parse_runner_report("").has_value());
}

TEST(Sandbox, MissingShimIsEnvironmentError) {
  SandboxOptions opts;
  opts.runner = {"definitely-not-a-runner-binary"};
  EXPECT_THROW(Sandbox{opts}, EnvironmentError);
  opts.runner = {"python3", "/nonexistent/runner.py"};
  EXPECT_THROW(Sandbox{opts}, EnvironmentError);
}

TEST_F(SandboxTest, FixturePlotScriptSucceeds) {
  const auto r = sandbox->execute(kPlotScript, Mode::Plot);
  EXPECT_EQ(r.status, Status::Success) << r.stderr_text;
  EXPECT_EQ(r.error_class, ErrorClass::None);
  ASSERT_EQ(r.figure_paths.size(), 1u);
  EXPECT_TRUE(std::filesystem::exists(r.figure_paths[0]));
  const auto rel = r.figure_paths[0].lexically_relative(r.workdir->path());
  EXPECT_NE(*rel.begin(), "..");
  ASSERT_TRUE(r.report.has_value());
  EXPECT_TRUE(r.report->library_versions.count("matplotlib"));
}

TEST_F(SandboxTest, ExceptionIsRuntimeError) {
  const auto r = sandbox->execute("x = 1 / 0\n", Mode::Plot);
  EXPECT_EQ(r.status, Status::Failure);
  EXPECT_EQ(r.error_class, ErrorClass::RuntimeError);
  EXPECT_NE(r.stderr_text.find("ZeroDivisionError"), std::string::npos);
}

TEST_F(SandboxTest, SyntaxErrorIsClassified) {
  const auto r = sandbox->execute("def broken(:\n  pass\n", Mode::Plot);
  EXPECT_EQ(r.error_class, ErrorClass::SyntaxError);
}

TEST_F(SandboxTest, NoFigureInPlotMode) {
  const auto r = sandbox->execute("x = 41 + 1\n", Mode::Plot);
  EXPECT_EQ(r.error_class, ErrorClass::NoFigureProduced);
}

TEST_F(SandboxTest, OpenFigureIsForceSaved) {
  const auto r = sandbox->execute("import matplotlib.pyplot as plt\nplt.bar([1,2],[3,4])\nplt.show()\n",
                                  Mode::Plot);
  EXPECT_EQ(r.status, Status::Success) << r.stderr_text;
  EXPECT_EQ(r.figure_paths.size(), 1u);
}

TEST_F(SandboxTest, TableModeCapturesCsv) {
  const auto r = sandbox->execute(
      "with open('data.csv', 'w') as f:\n    f.write('x,y\\n1,2\\n3,4\\n')\n", Mode::Table);
  EXPECT_EQ(r.status, Status::Success) << r.stderr_text;
  ASSERT_EQ(r.csv_outputs.size(), 1u);
  EXPECT_EQ(r.csv_outputs[0].filename(), "data.csv");
  EXPECT_EQ(r.read_csv(), "x,y\n1,2\n3,4\n");
}

TEST_F(SandboxTest, InfiniteLoopTimesOut) {
  Limits limits = sandbox->options().limits;
  limits.wall_timeout_seconds = 1.5;
  const auto r = sandbox->execute("while True:\n    pass\n", Mode::Plot, limits);
  EXPECT_EQ(r.error_class, ErrorClass::Timeout);
  EXPECT_GE(r.duration.count(), 1.5);
  EXPECT_LE(r.duration.count(), 1.5 + 2.0);
}

TEST_F(SandboxTest, SleepingChildProcessIsKilledWithGroup) {
  Limits limits = sandbox->options().limits;
  limits.wall_timeout_seconds = 1.0;
  const auto r = sandbox->execute(
      "import subprocess\nsubprocess.run(['sleep', '30'])\n", Mode::Plot, limits);
  EXPECT_EQ(r.error_class, ErrorClass::Timeout);
  EXPECT_LE(r.duration.count(), 1.0 + 2.0);
}

TEST_F(SandboxTest, OutputIsTruncatedToLimit) {
  Limits limits = sandbox->options().limits;
  limits.max_output_bytes = 1000;
  const auto r = sandbox->execute("for i in range(10000):\n    print('spam', i)\n", Mode::Table,
                                  limits);
  EXPECT_LE(r.stderr_text.size(), 1000u);
  EXPECT_TRUE(r.output_truncated);
}

TEST_F(SandboxTest, NoWritesOutsideWorkdir) {
  test::TempDir watched;
  const auto cwd = std::filesystem::current_path();
  const auto before_cwd = snapshot(cwd);
  const auto before_base = snapshot(base.path());
  {
    const auto r = sandbox->execute(
        "import matplotlib.pyplot as plt\n"
        "open('relative.txt', 'w').write('x')\n"
        "open('data.csv', 'w').write('a,b\\n1,2\\n')\n"
        "plt.plot([1, 2]); plt.savefig('p.png')\n",
        Mode::Plot);
    EXPECT_EQ(r.status, Status::Success) << r.stderr_text;
    EXPECT_TRUE(std::filesystem::exists(r.workdir->path() / "relative.txt"));
  }
  EXPECT_EQ(snapshot(cwd), before_cwd);
  EXPECT_EQ(snapshot(base.path()), before_base);
}

TEST_F(SandboxTest, ConcurrentExecutionsAreIndependent) {
  std::vector<std::jthread> threads;
  std::vector<SandboxResult> results(4);
  for (int i = 0; i < 4; ++i) {
    threads.emplace_back([&, i] {
      results[i] = sandbox->execute(
          "open('data.csv','w').write('k,v\\n" + std::to_string(i) + ",1\\n')\n", Mode::Table);
    });
  }
  threads.clear();
  std::set<std::string> dirs;
  for (int i = 0; i < 4; ++i) {
    ASSERT_TRUE(results[i].ok()) << results[i].stderr_text;
    EXPECT_EQ(results[i].read_csv(), "k,v\n" + std::to_string(i) + ",1\n");
    dirs.insert(results[i].workdir->path().string());
  }
  EXPECT_EQ(dirs.size(), 4u);
}
