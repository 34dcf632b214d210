#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "chartforge/corpus.hpp"
#include "chartforge/embedding.hpp"
#include "chartforge/gateway.hpp"

namespace chartforge::rlhf {

struct PreferencePair {
  std::string datapoint_id;
  std::string description;     // prompt
  std::string preferred_code;  // corpus ground truth
  std::string rejected_code;   // model output
  std::string rejected_source_tag;

  bool operator==(const PreferencePair&) const = default;
};

enum class SkipReason { MissingOutput, IdenticalToReference };
std::string_view skip_reason_name(SkipReason r);

struct Skip {
  std::string datapoint_id;
  SkipReason reason;
};

struct PreferenceBuild {
  std::vector<PreferencePair> pairs;  // corpus order
  std::vector<Skip> skips;
  // Output ids that are not in the corpus; ignored.
  std::vector<std::string> unknown_ids;

  std::size_t skipped(SkipReason r) const;
};

// Model outputs: id -> generated code. An empty output counts as missing; an
// output equal to the reference (after trimming) is skipped. Corpus entries
// without an output are not considered.
PreferenceBuild build_preference_dataset(const Corpus& corpus,
                                         const std::map<std::string, std::string>& outputs,
                                         const std::string& source_tag);

// JSONL {id, text}; code is taken from the first fenced block when present.
std::map<std::string, std::string> load_model_outputs(const std::filesystem::path& jsonl,
                                                      bool extract_code = true);

// Seeded subset of round(fraction * n) items, kept in input order.
std::vector<PreferencePair> sample_pairs(const std::vector<PreferencePair>& pairs, double fraction,
                                         std::uint64_t seed);
std::size_t sample_size(std::size_t n, double fraction);

struct AlignmentScore {
  std::string datapoint_id;
  std::string original;     // x
  std::string regenerated;  // x_hat
  double score = 0.0;       // BERTScore F
  std::string response;     // code x_hat was regenerated from, if known
};

// Throws ContractError on empty text; backend errors propagate.
AlignmentScore alignment_reward(const std::string& x, const std::string& x_hat,
                                EmbeddingBackend& backend, const std::string& datapoint_id = "");

// x_hat for each output via the code-to-description template.
std::map<std::string, std::string> regenerate_descriptions(
    llm::Gateway& gateway, const std::map<std::string, std::string>& outputs,
    const std::string& backend_tag, const llm::Decoding& decoding = {});

// Rewards for every id present in corpus, outputs and regenerated.
std::vector<AlignmentScore> score_outputs(const Corpus& corpus,
                                          const std::map<std::string, std::string>& outputs,
                                          const std::map<std::string, std::string>& regenerated,
                                          EmbeddingBackend& backend);

struct ExportSummary {
  std::filesystem::path pairs_path;
  std::filesystem::path rewards_path;
  std::size_t pairs_written = 0;
  std::size_t rewards_written = 0;
  std::vector<std::string> warnings;
};

// Writes <dir>/pairs.jsonl {prompt, chosen, rejected} and <dir>/rewards.jsonl
// {prompt, response, reward}. Only "jsonl" is supported.
ExportSummary export_rl_bundle(const std::vector<PreferencePair>& pairs,
                               const std::vector<AlignmentScore>& rewards,
                               const std::filesystem::path& dir,
                               const std::string& format = "jsonl");

struct ExportedPair {
  std::string prompt, chosen, rejected;
  bool operator==(const ExportedPair&) const = default;
};
struct ExportedReward {
  std::string prompt, response;
  double reward = 0.0;
  bool operator==(const ExportedReward&) const = default;
};
std::vector<ExportedPair> read_pairs(const std::filesystem::path& jsonl);
std::vector<ExportedReward> read_rewards(const std::filesystem::path& jsonl);

}  // namespace chartforge::rlhf
