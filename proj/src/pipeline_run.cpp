#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "chartforge/error.hpp"
#include "chartforge/hashing.hpp"
#include "chartforge/pipeline.hpp"
#include "chartforge/text.hpp"

namespace chartforge::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config

std::string PipelineConfig::backend_for(const std::string& stage) const {
  if (auto it = backends.find(stage); it != backends.end()) return it->second;
  if (auto it = backends.find("default"); it != backends.end()) return it->second;
  return "default";
}

ordered_json PipelineConfig::to_json() const {
  ordered_json c = ordered_json::object();
  for (auto cat : kAllCategories) {
    auto it = counts.find(cat);
    c[std::string(category_key(cat))] = it == counts.end() ? 0 : it->second;
  }
  ordered_json b = ordered_json::object();
  for (const auto& [k, v] : backends) b[k] = v;
  return ordered_json{{"counts", c},
                      {"rouge_dedup_threshold", rouge_dedup_threshold},
                      {"topics_per_call", topics_per_call},
                      {"max_topic_rounds", max_topic_rounds},
                      {"stage_retries", stage_retries},
                      {"backends", b},
                      {"temperature", decoding.temperature},
                      {"judge_temperature", judge_temperature},
                      {"max_tokens", decoding.max_tokens},
                      {"seed", seed},
                      {"test_fraction", test_fraction},
                      {"workers", workers}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("pipeline config must be an object");
  static const std::set<std::string> known{
      "counts", "rouge_dedup_threshold", "topics_per_call", "max_topic_rounds", "stage_retries",
      "backends", "temperature", "judge_temperature", "max_tokens", "seed", "test_fraction", "workers"};
  for (const auto& [k, _] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown pipeline config key: " + k);
  }
  PipelineConfig c;
  try {
    if (auto it = j.find("counts"); it != j.end()) {
      for (const auto& [k, v] : it->items()) {
        PlotCategory cat;
        try {
          cat = parse_category(k);
        } catch (const Error&) {
          throw ConfigError("unknown category in counts: " + k);
        }
        if (!v.is_number_integer() || v.get<long long>() < 0) {
          throw ConfigError("count for " + k + " must be a non-negative integer");
        }
        c.counts[cat] = v.get<std::size_t>();
      }
    }
    c.rouge_dedup_threshold = j.value("rouge_dedup_threshold", c.rouge_dedup_threshold);
    c.topics_per_call = j.value("topics_per_call", c.topics_per_call);
    c.max_topic_rounds = j.value("max_topic_rounds", c.max_topic_rounds);
    c.stage_retries = j.value("stage_retries", c.stage_retries);
    if (auto it = j.find("backends"); it != j.end()) {
      c.backends = it->get<std::map<std::string, std::string>>();
    }
    c.decoding.temperature = j.value("temperature", c.decoding.temperature);
    c.judge_temperature = j.value("judge_temperature", c.judge_temperature);
    c.decoding.max_tokens = j.value("max_tokens", c.decoding.max_tokens);
    c.seed = j.value("seed", c.seed);
    c.test_fraction = j.value("test_fraction", c.test_fraction);
    c.workers = j.value("workers", c.workers);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid pipeline config: ") + e.what());
  }
  if (!(c.rouge_dedup_threshold > 0.0 && c.rouge_dedup_threshold <= 1.0)) {
    throw ConfigError("rouge_dedup_threshold must be in (0, 1]");
  }
  if (c.stage_retries < 1) throw ConfigError("stage_retries must be >= 1");
  if (c.topics_per_call < 1 || c.max_topic_rounds < 1) {
    throw ConfigError("topics_per_call and max_topic_rounds must be >= 1");
  }
  if (!(c.test_fraction >= 0.0 && c.test_fraction <= 1.0)) {
    throw ConfigError("test_fraction must be in [0, 1]");
  }
  if (c.workers < 1) throw ConfigError("workers must be >= 1");
  if (c.decoding.max_tokens <= 0 || c.decoding.temperature < 0 || c.judge_temperature < 0) {
    throw ConfigError("max_tokens must be positive and temperature non-negative");
  }
  for (const auto& [stage, _] : c.backends) {
    bool ok = stage == "default";
    for (const char* s : kStages) ok = ok || stage == s;
    if (!ok) throw ConfigError("unknown stage in backends: " + stage);
  }
  return c;
}

std::string PipelineConfig::fingerprint() const {
  auto j = to_json();
  j.erase("workers");
  return sha256_hex(j.dump()).substr(0, 16);
}

// ---------------------------------------------------------------------------
// Report

std::size_t RunReport::total_rejections() const {
  std::size_t n = 0;
  for (const auto& [_, v] : rejections) n += v;
  return n;
}

ordered_json RunReport::to_json() const {
  ordered_json rej = ordered_json::object();
  for (const auto& [k, v] : rejections) rej[k] = v;
  ordered_json st = ordered_json::object();
  for (const char* s : kStages) {
    auto it = stages.find(s);
    const StageCounter c = it == stages.end() ? StageCounter{} : it->second;
    st[s] = {{"calls", c.calls}, {"failures", c.failures}};
  }
  ordered_json cats = ordered_json::object();
  for (auto cat : kAllCategories) {
    const std::string key(category_key(cat));
    auto it = categories.find(key);
    const CategoryYield y = it == categories.end() ? CategoryYield{} : it->second;
    cats[key] = {{"attempts", y.attempts},
                 {"emitted", y.emitted},
                 {"topics_proposed", y.topics_proposed},
                 {"topics_admitted", y.topics_admitted}};
  }
  return ordered_json{{"fingerprint", fingerprint}, {"attempts", attempts},
                      {"emitted", emitted},         {"rejections", rej},
                      {"stages", st},               {"categories", cats},
                      {"warnings", warnings}};
}

// ---------------------------------------------------------------------------
// Checkpoint

namespace {

class Checkpoint {
 public:
  Checkpoint(fs::path path, std::optional<std::size_t> halt_after)
      : path_(std::move(path)), halt_after_(halt_after) {}

  // Returns the events after the header; throws CheckpointError on corruption
  // or fingerprint mismatch.
  std::vector<json> open(const std::string& fingerprint, bool restart) {
    std::vector<json> events;
    if (restart) fs::remove(path_);
    if (fs::exists(path_)) {
      std::ifstream in(path_);
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        json j;
        try {
          j = json::parse(line);
        } catch (const json::exception&) {
          throw CheckpointError("checkpoint " + path_.string() + " is corrupt at line " +
                                std::to_string(lineno) + "; rerun with --restart");
        }
        if (!j.is_object() || !j.contains("type")) {
          throw CheckpointError("checkpoint " + path_.string() + " has a malformed event at line " +
                                std::to_string(lineno) + "; rerun with --restart");
        }
        if (lineno == 1) {
          if (j.value("type", "") != "header" || j.value("fingerprint", "") != fingerprint) {
            throw CheckpointError("checkpoint " + path_.string() +
                                  " was written for a different configuration; rerun with "
                                  "--restart");
          }
          continue;
        }
        events.push_back(std::move(j));
      }
      if (lineno == 0) write_line(json{{"type", "header"}, {"version", 1}, {"fingerprint", fingerprint}});
    } else {
      fs::create_directories(path_.parent_path());
      write_line(json{{"type", "header"}, {"version", 1}, {"fingerprint", fingerprint}});
    }
    return events;
  }

  void append(const json& event) {
    std::lock_guard lock(mu_);
    if (halted_) throw PipelineHalted();
    write_line(event);
    ++written_;
    if (halt_after_ && written_ >= *halt_after_) {
      halted_ = true;
      throw PipelineHalted();
    }
  }

  bool halted() const {
    std::lock_guard lock(mu_);
    return halted_;
  }

 private:
  void write_line(const json& j) {
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    out << j.dump() << '\n';
    out.flush();
    if (!out) throw IoError("cannot append to checkpoint " + path_.string());
  }

  fs::path path_;
  std::optional<std::size_t> halt_after_;
  mutable std::mutex mu_;
  std::size_t written_ = 0;
  bool halted_ = false;
};

struct AttemptPlan {
  std::string id;
  PlotCategory category;
  std::size_t topic_index;
};

struct AttemptRecord {
  bool done = false;
  bool emitted = false;
  std::string reason;
  std::optional<DataPoint> datapoint;
  std::map<std::string, StageCounter> stages;
};

json record_to_json(const std::string& id, const AttemptRecord& r) {
  json st = json::object();
  for (const auto& [k, v] : r.stages) st[k] = {v.calls, v.failures};
  json j{{"type", "attempt"}, {"id", id}, {"emitted", r.emitted}, {"stages", st}};
  if (r.emitted) {
    j["datapoint"] = json::parse(to_json(*r.datapoint).dump());
  } else {
    j["reason"] = r.reason;
  }
  return j;
}

AttemptRecord record_from_json(const json& j) {
  AttemptRecord r;
  r.done = true;
  r.emitted = j.at("emitted").get<bool>();
  for (const auto& [k, v] : j.at("stages").items()) {
    r.stages[k] = StageCounter{v.at(0).get<std::size_t>(), v.at(1).get<std::size_t>()};
  }
  if (r.emitted) {
    r.datapoint = datapoint_from_json(j.at("datapoint"));
  } else {
    r.reason = j.at("reason").get<std::string>();
  }
  return r;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw IoError("cannot write " + tmp);
  }
  fs::rename(tmp, path);
}

}  // namespace

// ---------------------------------------------------------------------------
// Run

PipelineResult Pipeline::run(const RunOptions& options) {
  if (options.out_dir.empty()) throw ConfigError("pipeline run needs an output directory");
  const fs::path out = options.out_dir;
  fs::create_directories(out / "figures");
  fs::create_directories(out / "tables");
  fs::create_directories(out / "reports");

  const std::string fingerprint =
      options.fingerprint_salt.empty()
          ? config_.fingerprint()
          : sha256_hex(config_.fingerprint() + "|" + options.fingerprint_salt).substr(0, 16);

  Checkpoint checkpoint(options.checkpoint.value_or(out / "checkpoint.jsonl"),
                        options.halt_after_events);
  const auto events = checkpoint.open(fingerprint, options.restart);

  RunReport report;
  report.fingerprint = fingerprint;

  std::map<std::string, json> topic_events;
  std::map<std::string, AttemptRecord> restored;
  try {
    for (const auto& e : events) {
      const auto type = e.at("type").get<std::string>();
      if (type == "topics") {
        topic_events[e.at("category").get<std::string>()] = e;
      } else if (type == "attempt") {
        restored[e.at("id").get<std::string>()] = record_from_json(e);
      }
    }
  } catch (const std::exception& ex) {
    throw CheckpointError(std::string("checkpoint has an invalid event: ") + ex.what() +
                          "; rerun with --restart");
  }

  // Topic pools, sequential per category so admission order is fixed.
  std::map<PlotCategory, std::vector<TopicEntry>> pools;
  for (auto cat : kAllCategories) {
    auto it = config_.counts.find(cat);
    const std::size_t n = it == config_.counts.end() ? 0 : it->second;
    if (n == 0) continue;
    const std::string key(category_key(cat));
    auto& yield = report.categories[key];
    auto& pool = pools[cat];
    if (auto te = topic_events.find(key); te != topic_events.end()) {
      for (const auto& t : te->second.at("topics")) pool.push_back({t.get<std::string>(), cat, false});
      yield.topics_proposed = te->second.at("proposed").get<std::size_t>();
      for (const auto& w : te->second.at("warnings")) report.warnings.push_back(w.get<std::string>());
      report.stages["topic"].calls += te->second.at("calls").get<std::size_t>();
    } else {
      std::vector<std::string> warnings;
      TopicStats stats;
      propose_topics(cat, n, pool, &warnings, &stats);
      json texts = json::array();
      for (const auto& t : pool) texts.push_back(t.text);
      yield.topics_proposed = stats.proposed;
      const auto calls = stats.calls;
      report.stages["topic"].calls += calls;
      for (const auto& w : warnings) report.warnings.push_back(w);
      checkpoint.append(json{{"type", "topics"},
                             {"category", key},
                             {"topics", texts},
                             {"proposed", yield.topics_proposed},
                             {"calls", calls},
                             {"warnings", warnings}});
    }
    yield.topics_admitted = pool.size();
    if (pool.size() < n) {
      report.warnings.push_back(key + ": " + std::to_string(n - pool.size()) +
                                " attempts skipped for lack of topics");
    }
  }

  std::vector<AttemptPlan> plans;
  for (auto& [cat, pool] : pools) {
    const auto n = std::min(config_.counts.at(cat), pool.size());
    for (std::size_t j = 0; j < n; ++j) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%05zu", j);
      plans.push_back({std::string(category_key(cat)) + "-" + buf, cat, j});
    }
  }
  std::sort(plans.begin(), plans.end(), [](const AttemptPlan& a, const AttemptPlan& b) {
    return a.id < b.id;
  });

  std::vector<AttemptRecord> records(plans.size());
  for (std::size_t i = 0; i < plans.size(); ++i) {
    auto it = restored.find(plans[i].id);
    if (it == restored.end()) continue;
    const auto& r = it->second;
    // An emitted entry is only reusable if its artifacts survived.
    if (r.emitted && !(fs::exists(out / *r.datapoint->figure_path) &&
                       fs::exists(out / *r.datapoint->data_table))) {
      continue;
    }
    records[i] = r;
    pools[plans[i].category][plans[i].topic_index].consumed = true;
  }

  auto run_attempt = [&](std::size_t i) {
    const auto& plan = plans[i];
    AttemptRecord rec;
    auto& topic = pools[plan.category][plan.topic_index];
    std::mt19937_64 rng(sha256_u64(std::to_string(config_.seed) + "/" + plan.id));
    const auto candidates = taxonomy_.in_category(plan.category);
    if (candidates.empty()) throw ConfigError("no plot types in category " + plan.id);
    const std::string plot_type = candidates[rng() % candidates.size()]->id;

    auto stage_done = [&](const std::string& stage, std::size_t calls, bool ok) {
      auto& c = rec.stages[stage];
      c.calls += calls;
      if (!ok) ++c.failures;
      checkpoint.append(json{{"type", "stage"}, {"id", plan.id}, {"stage", stage}, {"ok", ok}});
    };
    auto reject = [&](std::string reason) {
      rec.done = true;
      rec.reason = std::move(reason);
      checkpoint.append(record_to_json(plan.id, rec));
      records[i] = std::move(rec);
    };

    try {
      const auto desc = generate_description(topic, plot_type, rng, plan.id);
      stage_done("description", desc.outcome.calls, desc.outcome.ok);
      if (!desc.outcome.ok) return reject(desc.outcome.reason);

      const auto verdict = self_evaluate_description(desc.text, plot_type, plan.id);
      stage_done("self_eval", 1, verdict.pass);
      if (!verdict.pass) return reject("self_eval_reject");

      const auto code = generate_code(desc.text, plan.id);
      stage_done("code", code.outcome.calls, code.outcome.ok);
      if (!code.outcome.ok) return reject(code.outcome.reason);

      const auto table = generate_data_table(desc.text, plan.category, plan.id);
      stage_done("table", table.outcome.calls, table.outcome.ok);
      if (!table.outcome.ok) return reject(table.outcome.reason);

      const auto reasoning = generate_reasoning(table.csv, plan.id);
      stage_done("reasoning", reasoning.outcome.calls, reasoning.outcome.ok);
      if (!reasoning.outcome.ok) return reject(reasoning.outcome.reason);

      std::string regenerated;
      const auto cycle = verify_cycle_consistency(desc.text, code.code, plan.id, &regenerated);
      stage_done("cycle_regen", 1, true);
      stage_done("cycle_judge", 1, cycle.pass);
      if (!cycle.pass) return reject("cycle_reject");

      DataPoint dp;
      dp.id = plan.id;
      dp.plot_type = plot_type;
      dp.description = desc.text;
      dp.code = code.code;
      dp.reasoning = reasoning.text;
      dp.figure_path = "figures/" + plan.id + ".png";
      dp.data_table = "tables/" + plan.id + ".csv";
      dp.split = assign_split(plan.id, config_.seed, config_.test_fraction);
      dp.provenance.topic = topic.text;
      dp.provenance.stage_hashes = {
          {"description", sha256_hex(desc.text)},
          {"self_eval", sha256_hex(verdict.raw_judge_text)},
          {"code", sha256_hex(code.code)},
          {"table", sha256_hex(table.csv)},
          {"reasoning", sha256_hex(reasoning.text)},
          {"cycle_regen", sha256_hex(regenerated)},
          {"cycle_judge", sha256_hex(cycle.raw_judge_text)},
      };
      if (table.generating_code) {
        dp.provenance.stage_hashes["table_code"] = sha256_hex(*table.generating_code);
      }
      fs::copy_file(code.result.figure_paths.front(), out / *dp.figure_path,
                    fs::copy_options::overwrite_existing);
      write_file_atomic(out / *dp.data_table, table.csv);

      rec.done = true;
      rec.emitted = true;
      rec.datapoint = std::move(dp);
      checkpoint.append(record_to_json(plan.id, rec));
      records[i] = std::move(rec);
    } catch (const TransportError&) {
      reject("backend_error");
    }
  };

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    if (!records[i].done) todo.push_back(i);
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  std::atomic<bool> stop{false};
  {
    const auto width = std::max<std::size_t>(1, std::min(config_.workers, todo.size()));
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < width; ++w) {
      workers.emplace_back([&] {
        while (!stop) {
          const auto k = next.fetch_add(1);
          if (k >= todo.size()) return;
          try {
            run_attempt(todo[k]);
          } catch (...) {
            std::lock_guard lock(err_mu);
            if (!first_error) first_error = std::current_exception();
            stop = true;
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  PipelineResult result;
  result.corpus.root = out;
  result.corpus.taxonomy = taxonomy_;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const auto& r = records[i];
    const std::string key(category_key(plans[i].category));
    ++report.attempts;
    ++report.categories[key].attempts;
    for (const auto& [stage, c] : r.stages) {
      report.stages[stage].calls += c.calls;
      report.stages[stage].failures += c.failures;
    }
    if (r.emitted) {
      ++report.emitted;
      ++report.categories[key].emitted;
      result.corpus.entries.push_back(*r.datapoint);
    } else {
      ++report.rejections[r.reason];
    }
  }
  result.report = std::move(report);

  save_corpus(result.corpus, out / "corpus.jsonl");
  write_file_atomic(out / "reports" / "run_report.json", result.report.to_json().dump(2) + "\n");
  return result;
}

}  // namespace chartforge::pipeline
