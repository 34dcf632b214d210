#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace chartforge::sandbox {

// Analyze asks the runner for AstFacts instead of executing the script.
enum class Mode { Plot, Table, Analyze };
enum class Status { Success, Failure };
enum class ErrorClass { None, SyntaxError, RuntimeError, Timeout, NonZeroExit, NoFigureProduced };

std::string_view mode_name(Mode m);
std::string_view status_name(Status s);
std::string_view error_class_name(ErrorClass e);
ErrorClass parse_error_class(std::string_view s);

struct Limits {
  double wall_timeout_seconds = 30.0;
  std::size_t max_output_bytes = 64 * 1024;
  std::size_t max_figure_files = 16;
};

// The single JSON object the runner shim prints on stdout.
struct RunnerReport {
  int schema_version = 1;
  bool ok = false;
  std::string phase;  // "compile" or "exec"
  std::optional<std::string> exception_type;
  std::string traceback_tail;
  std::vector<std::string> figures;
  std::vector<std::string> csvs;
  std::map<std::string, std::string> library_versions;
};

// Parses the last non-empty stdout line. nullopt when absent or malformed.
std::optional<RunnerReport> parse_runner_report(std::string_view stdout_text);

// A private scratch directory, removed on destruction unless kept.
class WorkDir {
 public:
  explicit WorkDir(const std::filesystem::path& base, bool keep = false);
  ~WorkDir();
  WorkDir(const WorkDir&) = delete;
  WorkDir& operator=(const WorkDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  bool keep_;
};

struct SandboxResult {
  Status status = Status::Failure;
  ErrorClass error_class = ErrorClass::None;
  int exit_code = -1;
  std::string stdout_text;
  std::string stderr_text;  // tail, at most max_output_bytes
  bool output_truncated = false;
  std::vector<std::filesystem::path> figure_paths;  // absolute, inside workdir
  std::vector<std::filesystem::path> csv_outputs;   // absolute, inside workdir
  std::chrono::duration<double> duration{0};
  std::optional<RunnerReport> report;
  // Keeps the artifacts alive while the result is in use.
  std::shared_ptr<const WorkDir> workdir;

  bool ok() const { return status == Status::Success; }
  std::string read_csv(std::size_t index = 0) const;
};

// Everything classification looks at.
struct FailureSignals {
  const RunnerReport* report = nullptr;
  std::string_view stderr_text;
  int exit_code = 0;
  bool killed_by_limit = false;
  Mode mode = Mode::Plot;
  std::size_t figure_count = 0;
};

// Total and deterministic: timeout > syntax > runtime > nonzero exit >
// missing figure (plot mode) > none.
ErrorClass classify_failure(const FailureSignals& signals);

class CodeExecutor {
 public:
  virtual ~CodeExecutor() = default;
  virtual SandboxResult execute(const std::string& script, Mode mode) = 0;
};

struct SandboxOptions {
  // Runner command prefix, e.g. {"python3", "/opt/chartforge/runner.py"}. The
  // sandbox appends: --mode {plot|table|analyze} --script <path> --out <dir>.
  std::vector<std::string> runner;
  Limits limits;
  std::filesystem::path base_dir;  // defaults to <tmp>/chartforge-sandbox
  std::size_t max_concurrent = 2;
  bool keep_workdirs = false;
};

// Resolves argv[0] on PATH and checks that script-like arguments exist.
bool runner_available(const std::vector<std::string>& runner);

// Runner command from $CHARTFORGE_RUNNER (whitespace separated), if set.
std::vector<std::string> runner_from_env();

class Sandbox final : public CodeExecutor {
 public:
  // Throws EnvironmentError when the runner shim cannot be found.
  explicit Sandbox(SandboxOptions options);

  SandboxResult execute(const std::string& script, Mode mode) override;
  SandboxResult execute(const std::string& script, Mode mode, const Limits& limits);

  const SandboxOptions& options() const { return options_; }

 private:
  SandboxOptions options_;
  std::counting_semaphore<1024> slots_;
};

}  // namespace chartforge::sandbox
