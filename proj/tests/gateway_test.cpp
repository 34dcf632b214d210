#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "chartforge/error.hpp"
#include "chartforge/gateway.hpp"
#include "httplib.h"
#include "test_util.hpp"

using namespace chartforge;
using namespace chartforge::llm;

namespace {

ChatRequest make_request(std::string template_id, Bindings b, std::uint64_t seed = 0) {
  ChatRequest r;
  r.template_id = std::move(template_id);
  r.bindings = std::move(b);
  r.decoding.seed = seed;
  r.backend_tag = "mock";
  return r;
}

// Fails with a transport error the first `failures` times.
class FlakyBackend : public Backend {
 public:
  explicit FlakyBackend(int failures) : failures_(failures) {}
  BackendReply generate(const ChatRequest&, const std::string&) override {
    if (calls_++ < failures_) throw TransportError("connection reset");
    return {"ok", "stop", {}};
  }
  int calls() const { return calls_; }

 private:
  int failures_;
  std::atomic<int> calls_{0};
};

}  // namespace

TEST(Prompt, BuiltinLibraryHasEveryTemplate) {
  const auto lib = PromptLibrary::builtin();
  for (const char* id : kTemplateIds) EXPECT_TRUE(lib.contains(id)) << id;
  EXPECT_EQ(lib.get("task2").required_bindings, (std::set<std::string>{"data_table"}));
}

TEST(Prompt, DescriptionTemplateContainsBothSeeds) {
  const auto lib = PromptLibrary::builtin();
  const std::string seed1 = "Draw a line plot of the daily closing price in stocks.csv.";
  const std::string seed2 = "Create a line chart of monthly rainfall: Jan 40, Feb 35, Mar 50.";
  const auto text = lib.render("description_gen", {{"plot_type", "Line Plot"},
                                                   {"seed_1", seed1},
                                                   {"seed_2", seed2},
                                                   {"topic", "glacier retreat"}});
  EXPECT_NE(text.find(seed1), std::string::npos);
  EXPECT_NE(text.find(seed2), std::string::npos);
  EXPECT_NE(text.find("glacier retreat"), std::string::npos);
  EXPECT_EQ(text.find("{{"), std::string::npos);
}

TEST(Prompt, NoPlaceholdersIsIdentity) {
  const auto t = PromptTemplate::from_body("plain", "No slots here.\n");
  EXPECT_EQ(t.render({}), "No slots here.\n");
}

TEST(Prompt, MissingBindingListsNames) {
  const auto lib = PromptLibrary::builtin();
  try {
    lib.render("task2", {{"description", "x"}});
    FAIL() << "expected TemplateError";
  } catch (const TemplateError& e) {
    EXPECT_EQ(e.missing(), (std::vector<std::string>{"data_table"}));
  }
  EXPECT_THROW(lib.render("no_such_template", {}), TemplateError);
}

TEST(Prompt, ValuesAreNotRescanned) {
  const auto t = PromptTemplate::from_body("t", "A {{x}} B");
  EXPECT_EQ(t.render({{"x", "{{y}}"}}), "A {{y}} B");
  EXPECT_THROW(PromptTemplate::from_body("bad", "{{not valid}}"), TemplateError);
}

TEST(RequestHash, StableAndSensitive) {
  const auto a = make_request("task3", {{"code", "x"}});
  EXPECT_EQ(request_hash(a), request_hash(a));
  EXPECT_EQ(request_hash(a).size(), 64u);
  auto b = a;
  b.decoding.seed = 1;
  EXPECT_NE(request_hash(a), request_hash(b));
  auto c = a;
  c.backend_tag = "other";
  EXPECT_NE(request_hash(a), request_hash(c));
  auto d = a;
  d.bindings["code"] = "y";
  EXPECT_NE(request_hash(a), request_hash(d));
}

TEST(Gateway, ScriptedMockReturnsFixedText) {
  Gateway gw(PromptLibrary::builtin(), ScriptedBackend::fixed("hello"), nullptr, {});
  const auto r = gw.complete(make_request("task3", {{"code", "print(1)"}}));
  EXPECT_EQ(r.text, "hello");
  EXPECT_FALSE(r.cache_hit);
}

TEST(Gateway, RequestContractIsChecked) {
  Gateway gw(PromptLibrary::builtin(), ScriptedBackend::fixed("x"), nullptr, {});
  auto r = make_request("task3", {{"code", "c"}});
  r.decoding.max_tokens = 0;
  EXPECT_THROW(gw.complete(r), ContractError);
  r.decoding.max_tokens = 10;
  r.decoding.temperature = -0.1;
  EXPECT_THROW(gw.complete(r), ContractError);
}

TEST(Gateway, RecordThenReplayIsDeterministic) {
  test::TempDir dir;
  auto cache = std::make_shared<ResponseCache>(dir.path());
  auto backend = std::make_shared<ScriptedBackend>(
      [](const ChatRequest& r, const std::string&) { return "desc of " + r.bindings.at("code"); });
  Gateway live(PromptLibrary::builtin(), backend, cache, {});
  const auto req = make_request("task3", {{"code", "plt.bar()"}});
  const auto first = live.complete(req);
  EXPECT_FALSE(first.cache_hit);
  const auto second = live.complete(req);
  EXPECT_TRUE(second.cache_hit);
  EXPECT_EQ(backend->calls(), 1u);

  GatewayOptions replay_opts;
  replay_opts.mode = GatewayMode::Replay;
  Gateway replay(PromptLibrary::builtin(), nullptr, cache, replay_opts);
  const auto a = replay.complete(req);
  const auto b = replay.complete(req);
  EXPECT_EQ(a.text, first.text);
  EXPECT_EQ(b.text, first.text);
  EXPECT_TRUE(b.cache_hit);
  EXPECT_EQ(a.request_hash, first.request_hash);

  const auto novel = make_request("task3", {{"code", "plt.pie()"}});
  try {
    replay.complete(novel);
    FAIL() << "expected CacheMissError";
  } catch (const CacheMissError& e) {
    EXPECT_EQ(e.request_hash(), request_hash(novel));
    EXPECT_NE(std::string(e.what()).find(request_hash(novel)), std::string::npos);
  }
}

TEST(Gateway, RetriesTransportErrorsWithCappedBackoff) {
  VirtualClock clock;
  auto flaky = std::make_shared<FlakyBackend>(3);
  GatewayOptions opts;
  opts.max_retries = 3;
  opts.backoff_base_seconds = 1.0;
  opts.backoff_cap_seconds = 3.0;
  Gateway gw(PromptLibrary::builtin(), flaky, nullptr, opts, clock);
  const auto start = clock.now();
  EXPECT_EQ(gw.complete(make_request("task3", {{"code", "c"}})).text, "ok");
  EXPECT_EQ(flaky->calls(), 4);
  // 1 + 2 + min(4, 3) seconds of backoff.
  EXPECT_EQ(clock.now() - start, std::chrono::seconds(6));

  auto hopeless = std::make_shared<FlakyBackend>(100);
  Gateway gw2(PromptLibrary::builtin(), hopeless, nullptr, opts, clock);
  EXPECT_THROW(gw2.complete(make_request("task3", {{"code", "c"}})), TransportError);
  EXPECT_EQ(hopeless->calls(), 4);
}

TEST(Gateway, RetriesNeverDuplicateCacheEntries) {
  test::TempDir dir;
  VirtualClock clock;
  auto cache = std::make_shared<ResponseCache>(dir.path());
  Gateway gw(PromptLibrary::builtin(), std::make_shared<FlakyBackend>(2), cache, {}, clock);
  gw.complete(make_request("task3", {{"code", "c"}}));
  EXPECT_EQ(cache->size(), 1u);
}

TEST(RateLimiter, NeverExceedsBudgetInAnyWindow) {
  VirtualClock clock;
  RateLimiter limiter(3, std::chrono::seconds(10), clock);
  std::vector<Clock::time_point> grants;
  for (int i = 0; i < 20; ++i) {
    limiter.acquire();
    grants.push_back(clock.now());
    clock.advance(std::chrono::milliseconds(700));
  }
  for (std::size_t i = 0; i < grants.size(); ++i) {
    std::size_t in_window = 0;
    for (std::size_t j = i; j < grants.size(); ++j) {
      if (grants[j] - grants[i] < std::chrono::seconds(10)) ++in_window;
    }
    EXPECT_LE(in_window, 3u) << i;
  }
}

TEST(Gateway, InFlightBoundUnderConcurrency) {
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
  auto backend = std::make_shared<ScriptedBackend>([&](const ChatRequest&, const std::string&) {
    const int now = ++active;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --active;
    return std::string("x");
  });
  GatewayOptions opts;
  opts.max_in_flight = 2;
  Gateway gw(PromptLibrary::builtin(), backend, nullptr, opts);
  std::vector<std::jthread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 5; ++i) gw.complete(make_request("task3", {{"code", std::to_string(t * 10 + i)}}));
    });
  }
  threads.clear();
  EXPECT_LE(peak.load(), 2);
  EXPECT_LE(gw.peak_in_flight(), 2u);
  EXPECT_EQ(backend->calls(), 40u);
}

TEST(HttpChatBackend, SpeaksChatCompletionJson) {
  httplib::Server server;
  nlohmann::json seen;
  std::string auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    nlohmann::json reply{{"choices", {{{"message", {{"role", "assistant"}, {"content", "a chart"}}},
                                       {"finish_reason", "stop"}}}},
                         {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 3}}}};
    res.set_content(reply.dump(), "application/json");
  });
  server.Post("/fail", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("CHARTFORGE_TEST_KEY", "sekrit", 1);
  HttpBackendOptions opts;
  opts.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  opts.api_key_env = "CHARTFORGE_TEST_KEY";
  opts.timeout_seconds = 5;
  HttpChatBackend backend(opts);
  auto req = make_request("task3", {{"code", "c"}});
  req.backend_tag = "gpt-4";
  const auto reply = backend.generate(req, "PROMPT");
  EXPECT_EQ(reply.text, "a chart");
  EXPECT_EQ(reply.usage.prompt_tokens, 12u);
  EXPECT_EQ(seen["model"], "gpt-4");
  EXPECT_EQ(seen["messages"][0]["role"], "user");
  EXPECT_EQ(seen["messages"][0]["content"], "PROMPT");
  EXPECT_EQ(auth, "Bearer sekrit");

  opts.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/fail";
  HttpChatBackend failing(opts);
  EXPECT_THROW(failing.generate(req, "P"), TransportError);

  server.stop();
  t.join();
}
