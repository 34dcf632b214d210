#pragma once

// In-process doubles for the LLM backend and the code executor so pipeline
// and evaluation tests run without network or Python.

#include <atomic>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>

#include "chartforge/corpus.hpp"
#include "chartforge/gateway.hpp"
#include "chartforge/hashing.hpp"
#include "chartforge/sandbox.hpp"
#include "chartforge/text.hpp"
#include "test_util.hpp"

namespace chartforge::test {

// Executes nothing. Plot scripts succeed and leave one figure unless they
// contain "1 / 0" (RuntimeError), "while True" (Timeout) or "no_figure".
// Table scripts succeed when they contain open('data.csv', 'w').write('...'),
// whose literal (with \n escapes) becomes data.csv.
class FakeExecutor final : public sandbox::CodeExecutor {
 public:
  sandbox::SandboxResult execute(const std::string& script, sandbox::Mode mode) override {
    using namespace sandbox;
    ++executions_;
    SandboxResult r;
    r.workdir = std::make_shared<WorkDir>(base_.path());
    const auto& wd = r.workdir->path();
    std::filesystem::create_directories(wd / "figures");
    r.exit_code = 0;
    auto fail = [&](ErrorClass c, int code, std::string err) {
      r.status = Status::Failure;
      r.error_class = c;
      r.exit_code = code;
      r.stderr_text = std::move(err);
      return r;
    };
    if (script.find("1 / 0") != std::string::npos) {
      return fail(ErrorClass::RuntimeError, 1,
                  "Traceback (most recent call last):\nZeroDivisionError: division by zero\n");
    }
    if (script.find("while True") != std::string::npos) return fail(ErrorClass::Timeout, -9, "");
    if (mode == Mode::Analyze) {
      r.status = Status::Success;
      return r;
    }
    if (mode == Mode::Table) {
      const std::string open_marker = "open('data.csv', 'w').write('";
      const auto p = script.find(open_marker);
      if (p != std::string::npos) {
        const auto start = p + open_marker.size();
        const auto end = script.find("')", start);
        std::string body;
        for (std::size_t i = start; i < end; ++i) {
          if (script[i] == '\\' && i + 1 < end && script[i + 1] == 'n') {
            body += '\n';
            ++i;
          } else {
            body += script[i];
          }
        }
        write_file(wd / "data.csv", body);
        r.csv_outputs.push_back(wd / "data.csv");
      }
      r.status = Status::Success;
      return r;
    }
    if (script.find("no_figure") != std::string::npos) {
      r.status = Status::Failure;
      r.error_class = ErrorClass::NoFigureProduced;
      return r;
    }
    write_file(wd / "figures" / "figure_1.png", "PNG:" + sha256_hex(script));
    r.figure_paths.push_back(wd / "figures" / "figure_1.png");
    r.status = Status::Success;
    return r;
  }

  std::size_t executions() const { return executions_; }

 private:
  TempDir base_;
  std::atomic<std::size_t> executions_{0};
};

// Scripted responses for every pipeline template. Topics carry marker words
// that steer later stages: zzselfeval fails self-evaluation, zzsandbox yields
// crashing code, zzcycle fails the cycle check, zzreason yields reasoning
// missing a section, zzcsv yields a headerless table.
inline std::string reasoning_text(const std::string& best = "Line Plot") {
  return "1. Characteristics of the data and CSV file:\nTwo numeric columns.\n"
         "2. Possible plot types:\n- " +
         best +
         "\n3. Most suitable plot type:\n" + best +
         "\n4. Further considerations for the description:\nLabel the axes.\n";
}

inline std::string plot_code_for(const std::string& description) {
  const auto h = sha256_hex(description).substr(0, 8);
  return "import matplotlib.pyplot as plt\n"
         "xs = [1, 2, 3, 4]\n"
         "plt.plot(xs, [x * 2 for x in xs])\n"
         "plt.title('chart " + h + "')\n"
         "plt.savefig('figure.png')\n";
}

inline std::string table_code() {
  return "open('data.csv', 'w').write('x,y,z\\n0,0,1.5\\n0,1,2.5\\n1,0,3.5\\n1,1,4.5\\n')\n";
}

class MockWorld {
 public:
  // topics[category_key] = lines returned by topic_gen for that category.
  std::map<std::string, std::vector<std::string>> topics;

  llm::ScriptedBackend::Responder responder() {
    return [this](const llm::ChatRequest& req, const std::string&) { return respond(req); };
  }

  std::string respond(const llm::ChatRequest& req) {
    const auto& b = req.bindings;
    const auto& t = req.template_id;
    auto has = [](const std::string& text, const char* marker) {
      return text.find(marker) != std::string::npos;
    };
    if (t == "topic_gen") {
      const auto cat = b.at("category");
      for (const auto& [key, lines] : topics) {
        if (category_name(parse_category(key)) == cat) {
          std::string out;
          for (const auto& l : lines) out += l + "\n";
          return out;
        }
      }
      return "";
    }
    if (t == "description_gen") {
      return "Create a " + b.at("plot_type") + " about " + b.at("topic") +
             " using values stored in data.csv, with labeled axes and a title.";
    }
    if (t == "self_eval") {
      const bool bad = has(b.at("description"), "zzselfeval");
      return std::string("compatible_with_plot_type: ") + (bad ? "no" : "yes") +
             "\ndata_sufficient: yes\nwell_formed: yes\nVERDICT: " + (bad ? "FAIL" : "PASS");
    }
    if (t == "code_gen" || t == "task1") {
      const auto& d = b.at("description");
      if (has(d, "zzsandbox")) return "```python\nx = 1 / 0\n```";
      return "Here is the code.\n```python\n" + plot_code_for(d) + "```\n";
    }
    if (t == "table_gen") {
      if (has(b.at("description"), "zzcsv")) return "12 17 19\n";
      return "```csv\nmonth,value\nJan,3\nFeb,5\nMar,4\n```";
    }
    if (t == "table_code_gen") return "```python\n" + table_code() + "```";
    if (t == "reasoning_gen") {
      if (has(b.at("data_table"), "zzreason")) return "1. Characteristics of the data:\nx\n";
      return reasoning_text();
    }
    if (t == "task3") return "Regenerated: a chart drawn by the given code.";
    if (t == "cycle_check") {
      const bool bad = has(b.at("original_description"), "zzcycle");
      return std::string("plot_type_consistent: ") + (bad ? "no" : "yes") +
             "\ndata_source_consistent: yes\ndetail_sufficient: yes\nVERDICT: " +
             (bad ? "FAIL" : "PASS");
    }
    if (t == "task2") return reasoning_text() + "Description: a chart.";
    return "";
  }
};

struct GatewayBundle {
  std::shared_ptr<llm::ScriptedBackend> backend;
  std::shared_ptr<llm::ResponseCache> cache;
  std::unique_ptr<llm::Gateway> gateway;
};

inline GatewayBundle make_gateway(llm::ScriptedBackend::Responder responder,
                                  const std::filesystem::path& cache_dir,
                                  llm::GatewayMode mode = llm::GatewayMode::Live) {
  GatewayBundle g;
  g.backend = std::make_shared<llm::ScriptedBackend>(std::move(responder));
  g.cache = std::make_shared<llm::ResponseCache>(cache_dir);
  llm::GatewayOptions opts;
  opts.mode = mode;
  opts.backoff_base_seconds = 0.0;
  g.gateway = std::make_unique<llm::Gateway>(llm::PromptLibrary::builtin(), g.backend, g.cache,
                                             opts);
  return g;
}

// Lexically distinct topic lines (pairwise ROUGE-L well below 0.7).
inline std::vector<std::string> distinct_topics(const std::string& tag, std::size_t n) {
  static const char* a[] = {"glacier", "orchard", "harbor", "volcano", "prairie", "canyon",
                            "lagoon", "tundra", "reef", "delta", "mesa", "fjord"};
  static const char* b[] = {"salinity", "yield", "traffic", "tremors", "rainfall", "erosion",
                            "algae", "permafrost", "bleaching", "sediment", "winds", "tides"};
  static const char* c[] = {"norway", "chile", "kenya", "japan", "peru", "canada",
                            "morocco", "iceland", "vietnam", "spain", "nepal", "ghana"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(std::string(a[i % 12]) + " " + b[(i * 5 + 1) % 12] + " " + c[(i * 7 + 3) % 12] +
                  " " + tag + std::to_string(i));
  }
  return out;
}

// n datapoints with distinct ground-truth codes and one mock output each;
// outputs for the ids at `identical` equal the ground truth.
struct PreferenceFixture {
  Corpus corpus;
  std::map<std::string, std::string> outputs;
};

inline PreferenceFixture preference_fixture(std::size_t n, const std::set<std::size_t>& identical) {
  PreferenceFixture f;
  f.corpus.taxonomy = Taxonomy::builtin();
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "gt-%03zu", i);
    auto dp = sample_datapoint(id, f.corpus.taxonomy.types()[i % f.corpus.taxonomy.size()].id);
    dp.description = "Plot series " + std::to_string(i) + " as a " + dp.plot_type + ".";
    dp.code = plot_code_for(dp.description);
    f.outputs[dp.id] = identical.count(i) ? dp.code : dp.code + "plt.grid(True)\n";
    f.corpus.entries.push_back(std::move(dp));
  }
  return f;
}

}  // namespace chartforge::test
