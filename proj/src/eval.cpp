#include "chartforge/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "chartforge/error.hpp"
#include "chartforge/pipeline.hpp"
#include "chartforge/text.hpp"

namespace chartforge::eval {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view task_name(Task t) {
  switch (t) {
    case Task::DescToChart: return "description_to_chart";
    case Task::RawDataToChart: return "rawdata_to_chart";
    case Task::CodeToDesc: return "code_to_description";
  }
  return "";
}

Task task_from_number(int n) {
  if (n < 1 || n > 3) throw ConfigError("task must be 1, 2 or 3, got " + std::to_string(n));
  return static_cast<Task>(n);
}

Prediction split_task2_text(const std::string& text) {
  Prediction p;
  p.text = text;
  const auto lines = split_lines(text);
  std::size_t cut = lines.size();
  for (std::size_t i = lines.size(); i-- > 0;) {
    if (to_lower(trim(lines[i])).rfind("description:", 0) == 0) {
      cut = i;
      break;
    }
  }
  for (std::size_t i = 0; i < cut; ++i) p.reasoning += lines[i] + "\n";
  if (cut < lines.size()) {
    std::string desc = trim(lines[cut]).substr(std::string("description:").size());
    for (std::size_t i = cut + 1; i < lines.size(); ++i) desc += "\n" + lines[i];
    p.description = trim(desc);
  }
  p.reasoning = trim(p.reasoning);
  return p;
}

PredictionSet load_predictions(const fs::path& jsonl, Task task, std::string generator_tag) {
  std::ifstream in(jsonl);
  if (!in) throw IoError("cannot read predictions: " + jsonl.string());
  PredictionSet set;
  set.task = task;
  set.generator_tag = std::move(generator_tag);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(jsonl.string() + ": " + e.what(), lineno);
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
      throw SchemaError(jsonl.string() + ":" + std::to_string(lineno) + ": prediction needs a string id");
    }
    const auto id = j["id"].get<std::string>();
    Prediction p;
    auto str = [&](const char* key) -> std::string {
      auto it = j.find(key);
      if (it == j.end() || it->is_null()) return "";
      if (!it->is_string()) {
        throw SchemaError(jsonl.string() + ":" + std::to_string(lineno) + ": field " + key +
                          " must be a string");
      }
      return it->get<std::string>();
    };
    if (task == Task::RawDataToChart && (j.contains("reasoning") || j.contains("description"))) {
      p.reasoning = str("reasoning");
      p.description = str("description");
      p.text = p.reasoning + "\nDescription: " + p.description;
    } else if (task == Task::RawDataToChart) {
      p = split_task2_text(str("text"));
    } else {
      p.text = str("text");
    }
    if (!set.items.emplace(id, std::move(p)).second) {
      throw SchemaError(jsonl.string() + ":" + std::to_string(lineno) + ": duplicate id " + id);
    }
  }
  return set;
}

void check_prediction_ids(const PredictionSet& predictions, const Corpus& corpus) {
  for (const auto& [id, _] : predictions.items) {
    if (!corpus.find(id)) throw SchemaError("prediction id not in corpus: " + id);
  }
}

// ---------------------------------------------------------------------------

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string squash_spaces(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

}  // namespace

AliasTable AliasTable::load(const fs::path& tsv, const Taxonomy& taxonomy) {
  std::ifstream in(tsv);
  if (!in) throw IoError("cannot read alias table: " + tsv.string());
  AliasTable table;
  for (const auto& t : taxonomy.types()) {
    table.add(t.display_name, t.id);
    auto spaced = t.id;
    std::replace(spaced.begin(), spaced.end(), '_', ' ');
    table.add(spaced, t.id);
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("alias line without tab", lineno);
    const auto id = trim(line.substr(tab + 1));
    if (!taxonomy.contains(id)) {
      throw ConfigError(tsv.string() + ":" + std::to_string(lineno) + ": unknown plot type " + id);
    }
    table.add(line.substr(0, tab), id);
  }
  return table;
}

AliasTable AliasTable::builtin(const Taxonomy& taxonomy) {
  return load(fs::path(asset_dir()) / "aliases.tsv", taxonomy);
}

void AliasTable::add(const std::string& alias, const std::string& plot_type) {
  auto a = squash_spaces(to_lower(trim(alias)));
  if (a.empty()) return;
  for (const auto& [existing, id] : aliases_) {
    if (existing == a) {
      if (id != plot_type) {
        throw ConfigError("alias '" + a + "' maps to both " + id + " and " + plot_type);
      }
      return;
    }
  }
  aliases_.emplace_back(std::move(a), plot_type);
  std::stable_sort(aliases_.begin(), aliases_.end(), [](const auto& x, const auto& y) {
    if (x.first.size() != y.first.size()) return x.first.size() > y.first.size();
    return x.first < y.first;
  });
}

std::set<std::string> AliasTable::match(std::string_view text) const {
  const auto hay = squash_spaces(to_lower(text));
  std::vector<bool> used(hay.size(), false);
  std::set<std::string> out;
  for (const auto& [alias, id] : aliases_) {
    for (std::size_t pos = hay.find(alias); pos != std::string::npos;
         pos = hay.find(alias, pos + 1)) {
      std::size_t end = pos + alias.size();
      if (pos > 0 && is_word_char(hay[pos - 1])) continue;
      if (end < hay.size() && hay[end] == 's' && (end + 1 == hay.size() || !is_word_char(hay[end + 1]))) {
        ++end;
      }
      if (end < hay.size() && is_word_char(hay[end])) continue;
      if (std::any_of(used.begin() + pos, used.begin() + end, [](bool b) { return b; })) continue;
      std::fill(used.begin() + pos, used.begin() + end, true);
      out.insert(id);
    }
  }
  return out;
}

Recommendations extract_plot_recommendations(std::string_view reasoning, const AliasTable& aliases) {
  Recommendations rec;
  std::string section;
  bool inside = false;
  for (const auto& raw : split_lines(reasoning)) {
    std::string line;
    for (char c : raw) {
      if (c != '*' && c != '#') line += c;
    }
    const auto lower = to_lower(trim(line));
    const bool numbered = lower.size() >= 2 && std::isdigit(static_cast<unsigned char>(lower[0])) &&
                          (lower[1] == '.' || lower[1] == ')');
    const bool header = lower.find("possible plot type") != std::string::npos &&
                        (numbered || lower.rfind("possible plot type", 0) == 0);
    if (header) {
      inside = true;
      rec.section_found = true;
      const auto colon = line.find(':');
      if (colon != std::string::npos) section += line.substr(colon + 1) + "\n";
      continue;
    }
    if (inside && numbered) inside = false;
    if (inside) section += line + "\n";
  }
  if (rec.section_found) rec.types = aliases.match(section);
  return rec;
}

// ---------------------------------------------------------------------------

ordered_json EvalReport::to_json() const {
  ordered_json cats = ordered_json::object();
  for (auto c : kAllCategories) {
    auto it = buckets.find(c);
    const Bucket b = it == buckets.end() ? Bucket{} : it->second;
    cats[std::string(category_key(c))] = {
        {"executions", b.executions}, {"failures", b.failures}, {"error_ratio", b.ratio()}};
  }
  ordered_json agg = ordered_json::object();
  for (const auto& [k, v] : aggregates) agg[k] = v;
  ordered_json items_json = ordered_json::array();
  for (const auto& it : items) {
    ordered_json m = ordered_json::object();
    for (const auto& [k, v] : it.metrics) m[k] = v;
    items_json.push_back({{"id", it.id},
                          {"plot_type", it.plot_type},
                          {"category", std::string(category_key(it.category))},
                          {"flags", it.flags},
                          {"executed", it.executed},
                          {"failed", it.failed},
                          {"error_class", it.error_class},
                          {"metrics", m}});
  }
  return ordered_json{{"task", std::string(task_name(task))},
                      {"generator_tag", generator_tag},
                      {"fingerprint", fingerprint},
                      {"error_ratio",
                       {{"total",
                         {{"executions", total.executions},
                          {"failures", total.failures},
                          {"error_ratio", total.ratio()}}},
                        {"categories", cats}}},
                      {"aggregates", agg},
                      {"items", items_json}};
}

std::string EvalReport::summary_table() const {
  std::ostringstream os;
  char buf[160];
  os << "task: " << task_name(task) << "  items: " << items.size() << "\n";
  std::snprintf(buf, sizeof buf, "%-26s %10s %9s %10s\n", "category", "executions", "failures",
                "error (%)");
  os << buf;
  for (auto c : kAllCategories) {
    auto it = buckets.find(c);
    const Bucket b = it == buckets.end() ? Bucket{} : it->second;
    std::snprintf(buf, sizeof buf, "%-26s %10zu %9zu %10.2f\n",
                  std::string(category_name(c)).c_str(), b.executions, b.failures, b.ratio());
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "%-26s %10zu %9zu %10.2f\n", "Total", total.executions,
                total.failures, total.ratio());
  os << buf;
  for (const auto& [k, v] : aggregates) {
    std::snprintf(buf, sizeof buf, "%-26s %10.4f\n", k.c_str(), v);
    os << buf;
  }
  return os.str();
}

// ---------------------------------------------------------------------------

namespace {

void run_parallel(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr err;
  {
    std::vector<std::jthread> pool;
    const auto width = std::max<std::size_t>(1, std::min(workers, n));
    for (std::size_t w = 0; w < width; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          {
            std::lock_guard lock(mu);
            if (err) return;
          }
          const auto i = next.fetch_add(1);
          if (i >= n) return;
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(mu);
            if (!err) err = std::current_exception();
          }
        }
      });
    }
  }
  if (err) std::rethrow_exception(err);
}

ordered_json base_fingerprint(Task task, const EvalContext& ctx, const Corpus& corpus,
                              const PredictionSet& preds) {
  const auto& w = ctx.codebleu_weights;
  return ordered_json{
      {"task", std::string(task_name(task))},
      {"generator_tag", preds.generator_tag},
      {"corpus_entries", corpus.entries.size()},
      {"predictions", preds.items.size()},
      {"embedding_backend", ctx.embedding ? ctx.embedding->name() : "none"},
      {"codegen_backend", ctx.codegen ? ctx.codegen_tag : "none"},
      {"ast_facts", ctx.ast_facts ? "runner" : "none"},
      {"codebleu_weights", {w.ngram, w.weighted_ngram, w.syntax, w.dataflow}},
      {"bertscore_baseline",
       ctx.bertscore_baseline ? ordered_json(*ctx.bertscore_baseline) : ordered_json()},
      {"toolkit_version", "0.1.0"}};
}

void execute_into(ItemRecord& rec, const std::string& code, const EvalContext& ctx) {
  const auto result = ctx.executor->execute(code, sandbox::Mode::Plot);
  rec.executed = true;
  rec.failed = !result.ok();
  rec.error_class = std::string(sandbox::error_class_name(result.error_class));
}

// Generates code from a predicted description and runs it.
void downstream(ItemRecord& rec, const std::string& description, const EvalContext& ctx) {
  if (!ctx.codegen || !ctx.executor) return;
  if (trim(description).empty()) {
    rec.executed = true;
    rec.failed = true;
    rec.error_class = "NoCode";
    rec.flags.push_back("empty_description");
    return;
  }
  llm::ChatRequest req;
  req.template_id = "task1";
  req.bindings = {{"description", description}};
  req.backend_tag = ctx.codegen_tag;
  std::string code;
  try {
    code = pipeline::extract_code(ctx.codegen->complete(req).text);
  } catch (const TransportError&) {
    rec.executed = true;
    rec.failed = true;
    rec.error_class = "CodegenError";
    rec.flags.push_back("codegen_error");
    return;
  }
  execute_into(rec, code, ctx);
}

double bert_f_or_zero(const EvalContext& ctx, const std::string& cand, const std::string& ref,
                      ItemRecord& rec) {
  const auto c = ctx.embedding->embed(cand);
  const auto r = ctx.embedding->embed(ref);
  if (c.rows() == 0 || r.rows() == 0) {
    rec.flags.push_back("empty_embedding");
    return 0.0;
  }
  const auto prf = metrics::bert_score(c, r);
  return ctx.bertscore_baseline ? metrics::rescale_with_baseline(prf, *ctx.bertscore_baseline).f
                                : prf.f;
}

EvalReport assemble(Task task, const Corpus& corpus, const PredictionSet& preds,
                    const EvalContext& ctx, std::vector<ItemRecord> items) {
  EvalReport report;
  report.task = task;
  report.generator_tag = preds.generator_tag;
  report.fingerprint = base_fingerprint(task, ctx, corpus, preds);
  std::map<std::string, std::pair<double, std::size_t>> sums;
  for (const auto& it : items) {
    if (it.executed) {
      auto& b = report.buckets[it.category];
      ++b.executions;
      ++report.total.executions;
      if (it.failed) {
        ++b.failures;
        ++report.total.failures;
      }
    }
    for (const auto& [k, v] : it.metrics) {
      sums[k].first += v;
      ++sums[k].second;
    }
  }
  for (const auto& [k, s] : sums) report.aggregates[k] = s.first / static_cast<double>(s.second);
  report.items = std::move(items);
  return report;
}

std::vector<ItemRecord> seed_items(const Corpus& corpus) {
  std::vector<ItemRecord> items(corpus.entries.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& e = corpus.entries[i];
    items[i].id = e.id;
    items[i].plot_type = e.plot_type;
    items[i].category = corpus.taxonomy.categorize(e.plot_type);
  }
  return items;
}

void require(bool cond, const char* what) {
  if (!cond) throw ConfigError(what);
}

}  // namespace

EvalReport eval_description_to_chart(const Corpus& corpus, const PredictionSet& preds,
                                     const EvalContext& ctx) {
  require(preds.task == Task::DescToChart, "predictions are not for task 1");
  require(ctx.executor != nullptr, "task 1 needs a code executor");
  check_prediction_ids(preds, corpus);
  auto items = seed_items(corpus);
  run_parallel(items.size(), ctx.workers, [&](std::size_t i) {
    auto& rec = items[i];
    const auto& gt = corpus.entries[i];
    auto it = preds.items.find(gt.id);
    if (it == preds.items.end()) {
      rec.flags.push_back("missing_prediction");
      rec.executed = true;
      rec.failed = true;
      rec.error_class = "MissingPrediction";
      rec.metrics = {{"meteor", 0.0}, {"codebleu", 0.0}};
      return;
    }
    const auto code = pipeline::extract_code(it->second.text);
    execute_into(rec, code, ctx);
    rec.metrics["meteor"] = metrics::meteor(code_tokens(code), code_tokens(gt.code));
    const auto cb = codebleu_with(ctx.ast_facts, code, gt.code, ctx.codebleu_weights);
    rec.metrics["codebleu"] = cb.score;
    rec.metrics["codebleu_ngram"] = cb.ngram;
    rec.metrics["codebleu_weighted_ngram"] = cb.weighted_ngram;
    rec.metrics["codebleu_syntax"] = cb.syntax;
    rec.metrics["codebleu_dataflow"] = cb.dataflow;
    if (cb.parse_failed) rec.flags.push_back("ast_unavailable");
  });
  return assemble(Task::DescToChart, corpus, preds, ctx, std::move(items));
}

EvalReport eval_rawdata_to_chart(const Corpus& corpus, const PredictionSet& preds,
                                 const EvalContext& ctx) {
  require(preds.task == Task::RawDataToChart, "predictions are not for task 2");
  require(ctx.aliases != nullptr, "task 2 needs an alias table");
  check_prediction_ids(preds, corpus);
  auto items = seed_items(corpus);
  run_parallel(items.size(), ctx.workers, [&](std::size_t i) {
    auto& rec = items[i];
    const auto& gt = corpus.entries[i];
    auto it = preds.items.find(gt.id);
    Prediction pred;
    if (it == preds.items.end()) {
      rec.flags.push_back("missing_prediction");
    } else {
      pred = it->second;
    }
    const auto predicted = extract_plot_recommendations(pred.reasoning, *ctx.aliases);
    if (!predicted.section_found) rec.flags.push_back("no_plot_type_section");
    rec.metrics["hit_rate"] = predicted.types.count(gt.plot_type) ? 100.0 : 0.0;
    if (gt.reasoning) {
      const auto reference = extract_plot_recommendations(*gt.reasoning, *ctx.aliases);
      rec.metrics["jaccard"] = metrics::jaccard(predicted.types, reference.types);
    } else {
      rec.flags.push_back("no_reference_reasoning");
    }
    if (trim(pred.description).empty()) {
      rec.flags.push_back("empty_prediction");
      rec.metrics["rougeL_f"] = 0.0;
      if (ctx.embedding) rec.metrics["bertscore_f"] = 0.0;
    } else {
      rec.metrics["rougeL_f"] = metrics::rouge_l(pred.description, gt.description).f;
      if (ctx.embedding) {
        rec.metrics["bertscore_f"] = bert_f_or_zero(ctx, pred.description, gt.description, rec);
      }
    }
    downstream(rec, pred.description, ctx);
  });
  return assemble(Task::RawDataToChart, corpus, preds, ctx, std::move(items));
}

EvalReport eval_code_to_description(const Corpus& corpus, const PredictionSet& preds,
                                    const EvalContext& ctx) {
  require(preds.task == Task::CodeToDesc, "predictions are not for task 3");
  check_prediction_ids(preds, corpus);
  auto items = seed_items(corpus);
  run_parallel(items.size(), ctx.workers, [&](std::size_t i) {
    auto& rec = items[i];
    const auto& gt = corpus.entries[i];
    auto it = preds.items.find(gt.id);
    std::string text;
    if (it == preds.items.end()) {
      rec.flags.push_back("missing_prediction");
    } else {
      text = trim(it->second.text);
    }
    if (text.empty()) {
      if (it != preds.items.end()) rec.flags.push_back("empty_prediction");
      rec.metrics = {{"rouge1_f", 0.0}, {"rouge2_f", 0.0}, {"rougeL_f", 0.0}};
      if (ctx.embedding) rec.metrics["bertscore_f"] = 0.0;
    } else {
      rec.metrics["rouge1_f"] = metrics::rouge_n(text, gt.description, 1).f;
      rec.metrics["rouge2_f"] = metrics::rouge_n(text, gt.description, 2).f;
      rec.metrics["rougeL_f"] = metrics::rouge_l(text, gt.description).f;
      if (ctx.embedding) rec.metrics["bertscore_f"] = bert_f_or_zero(ctx, text, gt.description, rec);
    }
    downstream(rec, text, ctx);
  });
  return assemble(Task::CodeToDesc, corpus, preds, ctx, std::move(items));
}

EvalReport evaluate(const Corpus& corpus, const PredictionSet& predictions, const EvalContext& ctx) {
  switch (predictions.task) {
    case Task::DescToChart: return eval_description_to_chart(corpus, predictions, ctx);
    case Task::RawDataToChart: return eval_rawdata_to_chart(corpus, predictions, ctx);
    case Task::CodeToDesc: return eval_code_to_description(corpus, predictions, ctx);
  }
  throw ConfigError("unknown task");
}

}  // namespace chartforge::eval
