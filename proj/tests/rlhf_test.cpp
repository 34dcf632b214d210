#include <gtest/gtest.h>

#include <random>

#include "chartforge/error.hpp"
#include "chartforge/rlhf.hpp"
#include "fakes.hpp"
#include "test_util.hpp"

namespace chartforge {
namespace {

TEST(Preference, FiftyWithTwoIdenticalGivesFortyEightPairs) {
  const auto f = test::preference_fixture(50, {7, 31});
  const auto b = rlhf::build_preference_dataset(f.corpus, f.outputs, "mock");
  EXPECT_EQ(b.pairs.size(), 48u);
  ASSERT_EQ(b.skips.size(), 2u);
  EXPECT_EQ(b.skipped(rlhf::SkipReason::IdenticalToReference), 2u);
  EXPECT_EQ(b.skips[0].datapoint_id, "gt-007");
  EXPECT_EQ(b.skips[1].datapoint_id, "gt-031");
  for (const auto& p : b.pairs) {
    const auto* gt = f.corpus.find(p.datapoint_id);
    ASSERT_NE(gt, nullptr);
    EXPECT_EQ(p.preferred_code, gt->code);
    EXPECT_EQ(p.description, gt->description);
    EXPECT_NE(p.preferred_code, p.rejected_code);
    EXPECT_EQ(p.rejected_source_tag, "mock");
  }
}

TEST(Preference, AccountingProperty) {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 50; ++round) {
    const std::size_t n = 1 + rng() % 30;
    std::set<std::size_t> same;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng() % 4 == 0) same.insert(i);
    }
    auto f = test::preference_fixture(n, same);
    std::size_t in_corpus = 0;
    for (auto it = f.outputs.begin(); it != f.outputs.end();) {
      const auto r = rng() % 6;
      if (r == 0) {
        it = f.outputs.erase(it);
        continue;
      }
      if (r == 1) it->second = "  ";
      ++it;
    }
    in_corpus = f.outputs.size();
    f.outputs["stranger"] = "x = 1";
    const auto b = rlhf::build_preference_dataset(f.corpus, f.outputs, "m");
    EXPECT_EQ(b.pairs.size() + b.skips.size(), in_corpus);
    EXPECT_EQ(b.unknown_ids, std::vector<std::string>{"stranger"});
    for (const auto& p : b.pairs) {
      EXPECT_EQ(p.preferred_code, f.corpus.find(p.datapoint_id)->code);
      EXPECT_NE(trim(p.preferred_code), trim(p.rejected_code));
    }
  }
}

TEST(Preference, EmptyOutputIsMissing) {
  auto f = test::preference_fixture(3, {});
  f.outputs["gt-001"] = "";
  const auto b = rlhf::build_preference_dataset(f.corpus, f.outputs, "m");
  EXPECT_EQ(b.pairs.size(), 2u);
  EXPECT_EQ(b.skipped(rlhf::SkipReason::MissingOutput), 1u);
  EXPECT_EQ(rlhf::skip_reason_name(rlhf::SkipReason::MissingOutput), "missing_output");
}

TEST(Preference, WhitespaceOnlyDifferenceIsIdentical) {
  auto f = test::preference_fixture(1, {});
  f.outputs["gt-000"] = "\n" + f.corpus.entries[0].code + "\n\n";
  const auto b = rlhf::build_preference_dataset(f.corpus, f.outputs, "m");
  EXPECT_TRUE(b.pairs.empty());
  EXPECT_EQ(b.skipped(rlhf::SkipReason::IdenticalToReference), 1u);
}

TEST(Preference, LoadModelOutputsExtractsCode) {
  test::TempDir d;
  test::write_file(d.path() / "o.jsonl",
                   "{\"id\": \"a\", \"text\": \"Sure:\\n```python\\nprint(1)\\n```\"}\n"
                   "{\"id\": \"b\", \"text\": null}\n");
  const auto o = rlhf::load_model_outputs(d.path() / "o.jsonl");
  EXPECT_EQ(o.at("a"), "print(1)\n");
  EXPECT_EQ(o.at("b"), "");
  test::write_file(d.path() / "bad.jsonl", "{\"text\": \"x\"}\n");
  EXPECT_THROW(rlhf::load_model_outputs(d.path() / "bad.jsonl"), SchemaError);
}

// ---------------------------------------------------------------------------

TEST(Sampling, SeededSubsetInOrder) {
  const auto f = test::preference_fixture(200, {});
  const auto pairs = rlhf::build_preference_dataset(f.corpus, f.outputs, "m").pairs;
  const auto a = rlhf::sample_pairs(pairs, 0.1, 42);
  const auto b = rlhf::sample_pairs(pairs, 0.1, 42);
  const auto c = rlhf::sample_pairs(pairs, 0.1, 43);
  EXPECT_EQ(a.size(), 20u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end(), [](const auto& x, const auto& y) {
    return x.datapoint_id < y.datapoint_id;
  }));
  std::set<std::string> ids;
  for (const auto& p : a) ids.insert(p.datapoint_id);
  EXPECT_EQ(ids.size(), a.size());
}

TEST(Sampling, HalfThousandOfTenPointFourThousand) {
  const double frac = 500.0 / 10400.0;
  EXPECT_EQ(rlhf::sample_size(10400, frac), 500u);
  EXPECT_NEAR(100.0 * rlhf::sample_size(10400, frac) / 10400.0, 4.8, 0.05);
  EXPECT_EQ(rlhf::sample_size(10, 0.0), 0u);
  EXPECT_EQ(rlhf::sample_size(10, 1.0), 10u);
  EXPECT_THROW(rlhf::sample_size(10, 1.5), ConfigError);
  EXPECT_THROW(rlhf::sample_size(10, -0.1), ConfigError);
}

// ---------------------------------------------------------------------------

TEST(Reward, IdenticalTextsScoreOne) {
  HashEmbeddingBackend emb;
  const std::string x = "Draw a red bar chart of quarterly revenue with labeled axes.";
  EXPECT_DOUBLE_EQ(rlhf::alignment_reward(x, x, emb).score, 1.0);
  HashEmbeddingBackend salted(16, "other");
  EXPECT_DOUBLE_EQ(rlhf::alignment_reward(x, x, salted).score, 1.0);
}

TEST(Reward, OrthogonalEmbeddingsScoreZero) {
  HashEmbeddingBackend emb(4);
  emb.pin("alpha", {1, 0, 0, 0});
  emb.pin("beta", {0, 1, 0, 0});
  emb.pin("gamma", {0, 0, 1, 0});
  emb.pin("delta", {0, 0, 0, 1});
  EXPECT_DOUBLE_EQ(rlhf::alignment_reward("alpha beta", "gamma delta", emb).score, 0.0);
}

TEST(Reward, DelegatesToBertScore) {
  HashEmbeddingBackend emb(8, "s");
  std::mt19937_64 rng(3);
  const char* words[] = {"plot", "red", "line", "axis", "title", "sales", "grid", "bar", "mean"};
  for (int i = 0; i < 100; ++i) {
    std::string x, y;
    for (int k = 0; k < 1 + static_cast<int>(rng() % 7); ++k) x += std::string(words[rng() % 9]) + " ";
    for (int k = 0; k < 1 + static_cast<int>(rng() % 7); ++k) y += std::string(words[rng() % 9]) + " ";
    const auto s = rlhf::alignment_reward(x, y, emb, "id");
    EXPECT_EQ(s.score, metrics::bert_score(emb.embed(y), emb.embed(x)).f);
    EXPECT_GE(s.score, -1.0);
    EXPECT_LE(s.score, 1.0);
  }
}

TEST(Reward, EmptyTextIsContractError) {
  HashEmbeddingBackend emb;
  EXPECT_THROW(rlhf::alignment_reward("", "x", emb), ContractError);
  EXPECT_THROW(rlhf::alignment_reward("x", " ", emb), ContractError);
}

TEST(Reward, RegenerateAndScoreThroughGateway) {
  const auto f = test::preference_fixture(4, {});
  test::TempDir cache;
  const auto* corpus = &f.corpus;
  auto g = test::make_gateway(
      [corpus](const llm::ChatRequest& req, const std::string&) {
        // Echo the original description for the first item only.
        if (req.bindings.at("code").find(corpus->entries[0].code) != std::string::npos) {
          return corpus->entries[0].description;
        }
        return std::string("A chart of something else entirely.");
      },
      cache.path());
  const auto regen = rlhf::regenerate_descriptions(*g.gateway, f.outputs, "default");
  EXPECT_EQ(regen.size(), 4u);
  HashEmbeddingBackend emb;
  const auto scores = rlhf::score_outputs(f.corpus, f.outputs, regen, emb);
  ASSERT_EQ(scores.size(), 4u);
  EXPECT_DOUBLE_EQ(scores[0].score, 1.0);
  EXPECT_LT(scores[1].score, 1.0);
  EXPECT_EQ(scores[2].response, f.outputs.at("gt-002"));
}

// ---------------------------------------------------------------------------

TEST(Export, RoundTripAndRejoin) {
  const auto f = test::preference_fixture(50, {7, 31});
  const auto b = rlhf::build_preference_dataset(f.corpus, f.outputs, "mock");
  HashEmbeddingBackend emb;
  std::vector<rlhf::AlignmentScore> rewards;
  for (const auto& p : b.pairs) {
    auto s = rlhf::alignment_reward(p.description, "A chart " + p.datapoint_id, emb, p.datapoint_id);
    s.response = p.rejected_code;
    rewards.push_back(s);
  }
  test::TempDir d;
  const auto summary = rlhf::export_rl_bundle(b.pairs, rewards, d.path() / "rl");
  EXPECT_TRUE(summary.warnings.empty());
  const auto pairs = rlhf::read_pairs(summary.pairs_path);
  ASSERT_EQ(pairs.size(), 48u);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_EQ(pairs[i], (rlhf::ExportedPair{b.pairs[i].description, b.pairs[i].preferred_code,
                                            b.pairs[i].rejected_code}));
    // Re-join on the prompt: chosen must be that entry's ground truth.
    std::size_t matches = 0;
    for (const auto& e : f.corpus.entries) {
      if (e.description == pairs[i].prompt) {
        ++matches;
        EXPECT_EQ(e.code, pairs[i].chosen);
      }
    }
    EXPECT_EQ(matches, 1u);
  }
  const auto back = rlhf::read_rewards(summary.rewards_path);
  ASSERT_EQ(back.size(), rewards.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].reward, rewards[i].score);
    EXPECT_EQ(back[i].response, rewards[i].response);
  }
}

TEST(Export, ThreePairsGiveThreeLines) {
  const auto f = test::preference_fixture(3, {});
  const auto b = rlhf::build_preference_dataset(f.corpus, f.outputs, "m");
  test::TempDir d;
  const auto s = rlhf::export_rl_bundle(b.pairs, {}, d.path());
  const auto text = test::read_file(s.pairs_path);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  for (const auto& line : split_lines(text)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.size(), 3u);
    EXPECT_TRUE(j.at("prompt").is_string());
    EXPECT_TRUE(j.at("chosen").is_string());
    EXPECT_TRUE(j.at("rejected").is_string());
  }
}

TEST(Export, EmptyListWritesEmptyFileWithWarning) {
  test::TempDir d;
  const auto s = rlhf::export_rl_bundle({}, {}, d.path());
  EXPECT_TRUE(std::filesystem::exists(s.pairs_path));
  EXPECT_EQ(std::filesystem::file_size(s.pairs_path), 0u);
  EXPECT_FALSE(s.warnings.empty());
  EXPECT_TRUE(rlhf::read_pairs(s.pairs_path).empty());
}

TEST(Export, UnknownFormatAndUnwritablePath) {
  test::TempDir d;
  EXPECT_THROW(rlhf::export_rl_bundle({}, {}, d.path(), "parquet"), ConfigError);
  test::write_file(d.path() / "file", "x");
  EXPECT_THROW(rlhf::export_rl_bundle({}, {}, d.path() / "file" / "sub"), IoError);
}

}  // namespace
}  // namespace chartforge
