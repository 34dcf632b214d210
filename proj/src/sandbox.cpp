#include "chartforge/sandbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>

#include "chartforge/error.hpp"
#include "chartforge/text.hpp"
#include "json.hpp"

namespace chartforge::sandbox {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::Plot: return "plot";
    case Mode::Table: return "table";
    case Mode::Analyze: return "analyze";
  }
  return "plot";
}

std::string_view status_name(Status s) { return s == Status::Success ? "Success" : "Failure"; }

std::string_view error_class_name(ErrorClass e) {
  switch (e) {
    case ErrorClass::None: return "None";
    case ErrorClass::SyntaxError: return "SyntaxError";
    case ErrorClass::RuntimeError: return "RuntimeError";
    case ErrorClass::Timeout: return "Timeout";
    case ErrorClass::NonZeroExit: return "NonZeroExit";
    case ErrorClass::NoFigureProduced: return "NoFigureProduced";
  }
  return "None";
}

ErrorClass parse_error_class(std::string_view s) {
  for (auto e : {ErrorClass::None, ErrorClass::SyntaxError, ErrorClass::RuntimeError,
                 ErrorClass::Timeout, ErrorClass::NonZeroExit, ErrorClass::NoFigureProduced}) {
    if (error_class_name(e) == s) return e;
  }
  throw SchemaError("unknown error class '" + std::string(s) + "'");
}

std::optional<RunnerReport> parse_runner_report(std::string_view stdout_text) {
  const auto lines = split_lines(stdout_text);
  auto it = std::find_if(lines.rbegin(), lines.rend(),
                         [](const std::string& l) { return !trim(l).empty(); });
  if (it == lines.rend()) return std::nullopt;
  try {
    const auto j = json::parse(*it);
    if (!j.is_object() || !j.contains("ok")) return std::nullopt;
    RunnerReport r;
    r.schema_version = j.value("schema_version", 1);
    r.ok = j.at("ok").get<bool>();
    r.phase = j.value("phase", "");
    if (auto e = j.find("exception_type"); e != j.end() && e->is_string()) {
      r.exception_type = e->get<std::string>();
    }
    r.traceback_tail = j.value("traceback_tail", "");
    r.figures = j.value("figures", std::vector<std::string>{});
    r.csvs = j.value("csvs", std::vector<std::string>{});
    if (auto v = j.find("library_versions"); v != j.end() && v->is_object()) {
      for (const auto& [k, val] : v->items()) {
        r.library_versions[k] = val.is_string() ? val.get<std::string>() : val.dump();
      }
    }
    return r;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

WorkDir::WorkDir(const fs::path& base, bool keep) : keep_(keep) {
  fs::create_directories(base);
  std::string tmpl = (base / "run-XXXXXX").string();
  if (mkdtemp(tmpl.data()) == nullptr) {
    throw IoError("cannot create sandbox workdir under " + base.string() + ": " +
                  std::strerror(errno));
  }
  path_ = tmpl;
}

WorkDir::~WorkDir() {
  if (keep_) return;
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string SandboxResult::read_csv(std::size_t index) const {
  if (index >= csv_outputs.size()) throw ContractError("no csv output at index " + std::to_string(index));
  std::ifstream in(csv_outputs[index], std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string last_nonempty_line(std::string_view text) {
  const auto lines = split_lines(text);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    auto t = trim(*it);
    if (!t.empty()) return t;
  }
  return {};
}

}  // namespace

ErrorClass classify_failure(const FailureSignals& s) {
  if (s.killed_by_limit) return ErrorClass::Timeout;

  static const std::regex kSyntax(R"(^(SyntaxError|IndentationError|TabError)\b)");
  static const std::regex kException(R"(^[A-Za-z_][\w.]*(Error|Exception|Exit|Interrupt)\b)");
  const auto last = last_nonempty_line(s.stderr_text);

  if (s.report != nullptr && !s.report->ok && s.report->phase == "compile") {
    return ErrorClass::SyntaxError;
  }
  if (s.report == nullptr && std::regex_search(last, kSyntax)) return ErrorClass::SyntaxError;

  const bool traceback = s.stderr_text.find("Traceback (most recent call last)") !=
                             std::string_view::npos ||
                         std::regex_search(last, kException);
  if ((s.report != nullptr && !s.report->ok) || traceback) return ErrorClass::RuntimeError;
  if (s.exit_code != 0) return ErrorClass::NonZeroExit;
  if (s.mode == Mode::Plot && s.figure_count == 0) return ErrorClass::NoFigureProduced;
  return ErrorClass::None;
}

namespace {

std::optional<fs::path> which(const std::string& program) {
  if (program.find('/') != std::string::npos) {
    if (::access(program.c_str(), X_OK) == 0) return fs::path(program);
    return std::nullopt;
  }
  const char* path = std::getenv("PATH");
  std::stringstream ss(path ? path : "/usr/bin:/bin");
  std::string dir;
  while (std::getline(ss, dir, ':')) {
    if (dir.empty()) continue;
    const auto candidate = fs::path(dir) / program;
    if (::access(candidate.c_str(), X_OK) == 0) return candidate;
  }
  return std::nullopt;
}

bool looks_like_script(const std::string& arg) {
  return arg.size() > 3 && arg.compare(arg.size() - 3, 3, ".py") == 0;
}

// Bounded capture: keeps the head (for stdout) or tail (for stderr).
struct Capture {
  std::string data;
  std::size_t limit;
  bool keep_tail;
  bool truncated = false;

  void append(const char* buf, std::size_t n) {
    data.append(buf, n);
    if (data.size() > limit) {
      truncated = true;
      if (keep_tail) {
        data.erase(0, data.size() - limit);
      } else {
        data.resize(limit);
      }
    }
  }
};

std::vector<fs::path> list_files(const fs::path& dir, const std::string& ext, const fs::path& root) {
  std::vector<fs::path> out;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return out;
  const auto canon_root = fs::weakly_canonical(root);
  for (const auto& e : fs::directory_iterator(dir, ec)) {
    if (!e.is_regular_file() || e.is_symlink() || e.path().extension() != ext) continue;
    const auto canon = fs::weakly_canonical(e.path());
    const auto rel = canon.lexically_relative(canon_root);
    if (rel.empty() || *rel.begin() == "..") continue;
    out.push_back(canon);
  }
  std::sort(out.begin(), out.end());
  return out;
}

[[noreturn]] void exec_child(const std::vector<std::string>& argv, const fs::path& workdir,
                             int out_fd, int err_fd) {
  ::setpgid(0, 0);
  ::dup2(out_fd, STDOUT_FILENO);
  ::dup2(err_fd, STDERR_FILENO);
  int devnull = ::open("/dev/null", O_RDONLY);
  if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
  if (::chdir(workdir.c_str()) != 0) ::_exit(126);
  ::setenv("MPLBACKEND", "Agg", 1);
  ::setenv("MPLCONFIGDIR", (workdir / ".mplconfig").c_str(), 1);
  ::setenv("HOME", workdir.c_str(), 1);
  ::setenv("XDG_CACHE_HOME", (workdir / ".cache").c_str(), 1);
  ::setenv("PYTHONDONTWRITEBYTECODE", "1", 1);
  ::setenv("TMPDIR", workdir.c_str(), 1);
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  ::execvp(args[0], args.data());
  ::_exit(127);
}

}  // namespace

bool runner_available(const std::vector<std::string>& runner) {
  if (runner.empty() || !which(runner.front())) return false;
  for (std::size_t i = 1; i < runner.size(); ++i) {
    std::error_code ec;
    if (looks_like_script(runner[i]) && !fs::is_regular_file(runner[i], ec)) return false;
  }
  return true;
}

std::vector<std::string> runner_from_env() {
  std::vector<std::string> out;
  if (const char* env = std::getenv("CHARTFORGE_RUNNER"); env && *env) {
    std::stringstream ss(env);
    std::string part;
    while (ss >> part) out.push_back(part);
  }
  return out;
}

Sandbox::Sandbox(SandboxOptions options)
    : options_(std::move(options)),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(options_.max_concurrent, 1, 1024))) {
  if (!runner_available(options_.runner)) {
    std::string cmd;
    for (const auto& a : options_.runner) cmd += (cmd.empty() ? "" : " ") + a;
    throw EnvironmentError("runner shim not available: '" + cmd + "'");
  }
  if (!(options_.limits.wall_timeout_seconds > 0)) throw ConfigError("wall_timeout must be > 0");
  if (options_.base_dir.empty()) options_.base_dir = fs::temp_directory_path() / "chartforge-sandbox";
}

SandboxResult Sandbox::execute(const std::string& script, Mode mode) {
  return execute(script, mode, options_.limits);
}

SandboxResult Sandbox::execute(const std::string& script, Mode mode, const Limits& limits) {
  struct SlotGuard {
    std::counting_semaphore<1024>& s;
    explicit SlotGuard(std::counting_semaphore<1024>& sem) : s(sem) { s.acquire(); }
    ~SlotGuard() { s.release(); }
  } guard(slots_);

  SandboxResult result;
  auto workdir = std::make_shared<WorkDir>(options_.base_dir, options_.keep_workdirs);
  result.workdir = workdir;
  const auto& wd = workdir->path();
  const auto script_path = wd / "script.py";
  {
    std::ofstream out(script_path, std::ios::binary);
    out << script;
  }
  fs::create_directories(wd / "figures");

  std::vector<std::string> argv = options_.runner;
  argv.insert(argv.end(), {"--mode", std::string(mode_name(mode)), "--script",
                           script_path.string(), "--out", wd.string()});

  int out_pipe[2], err_pipe[2];
  if (::pipe2(out_pipe, O_CLOEXEC) != 0 || ::pipe2(err_pipe, O_CLOEXEC) != 0) {
    throw IoError(std::string("pipe failed: ") + std::strerror(errno));
  }
  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) throw IoError(std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) exec_child(argv, wd, out_pipe[1], err_pipe[1]);
  ::setpgid(pid, pid);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);

  Capture out{{}, limits.max_output_bytes, false};
  Capture err{{}, limits.max_output_bytes, true};
  const auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                    std::chrono::duration<double>(limits.wall_timeout_seconds));
  bool killed = false;
  pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
  int open_fds = 2;
  char buf[8192];
  while (open_fds > 0) {
    const auto now = std::chrono::steady_clock::now();
    if (!killed && now >= deadline) {
      ::kill(-pid, SIGKILL);
      killed = true;
    }
    int wait_ms = 200;
    if (!killed) {
      wait_ms = static_cast<int>(std::clamp<long long>(
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1, 1, 200));
    }
    const int rc = ::poll(fds, 2, wait_ms);
    if (rc < 0 && errno != EINTR) break;
    for (int i = 0; i < 2; ++i) {
      if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      const ssize_t n = ::read(fds[i].fd, buf, sizeof buf);
      if (n > 0) {
        (i == 0 ? out : err).append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || (errno != EINTR && errno != EAGAIN)) {
        ::close(fds[i].fd);
        fds[i].fd = -1;
        --open_fds;
      }
    }
    // A killed group may leave a detached descendant holding the pipe; stop
    // reading shortly after the kill.
    if (killed && std::chrono::steady_clock::now() > deadline + std::chrono::seconds(1)) break;
  }
  for (auto& f : fds) {
    if (f.fd >= 0) ::close(f.fd);
  }
  int status = 0;
  ::waitpid(pid, &status, 0);
  ::kill(-pid, SIGKILL);  // reap stragglers in the group
  result.duration = std::chrono::steady_clock::now() - start;

  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  if (!killed && result.exit_code == 127 && out.data.empty()) {
    throw EnvironmentError("runner shim could not be executed: " + argv.front());
  }

  result.stdout_text = std::move(out.data);
  result.stderr_text = std::move(err.data);
  result.output_truncated = out.truncated || err.truncated;
  result.report = parse_runner_report(result.stdout_text);

  result.figure_paths = list_files(wd / "figures", ".png", wd);
  if (result.figure_paths.size() > limits.max_figure_files) {
    result.figure_paths.resize(limits.max_figure_files);
  }
  result.csv_outputs = list_files(wd, ".csv", wd);

  FailureSignals signals;
  signals.report = result.report ? &*result.report : nullptr;
  signals.stderr_text = result.stderr_text;
  signals.exit_code = result.exit_code;
  signals.killed_by_limit = killed;
  signals.mode = mode;
  signals.figure_count = result.figure_paths.size();
  result.error_class = classify_failure(signals);
  result.status = result.error_class == ErrorClass::None ? Status::Success : Status::Failure;
  return result;
}

}  // namespace chartforge::sandbox
