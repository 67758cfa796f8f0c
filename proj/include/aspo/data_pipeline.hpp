#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aspo/embedder.hpp"
#include "aspo/tokens.hpp"
#include "aspo/toy_model.hpp"

namespace aspo {

// One (prompt, chosen, rejected) training example. After filtering,
// chosen.text != rejected.text always holds.
struct PreferencePair {
  std::string pair_id;
  std::string prompt_text;
  FeatureVector image_features;
  TokenizedText chosen;
  TokenizedText rejected;

  bool operator==(const PreferencePair&) const = default;
};

inline constexpr int kMaxNoiseStep = 1000;

struct NoiseConfig {
  int noise_step = 500;
  uint64_t seed = 0;
};

// Cumulative noise retention after t steps: the product of (1 - beta_k) for
// k = 1..t with beta linear from 1e-4 to 0.02 over kMaxNoiseStep steps.
// alpha_bar(0) == 1 (empty product).
double alpha_bar(int noise_step);

// Variance-preserving Gaussian corruption of the feature vector:
// sqrt(alpha_bar) * x + sqrt(1 - alpha_bar) * eps with seeded standard
// normal eps. Step 0 returns the input exactly.
FeatureVector perturb_features(const FeatureVector& features,
                               const NoiseConfig& cfg);

// Word list shared by the corpus generator and the decode pipeline. Token
// ids in datasets index into it.
struct Vocabulary {
  std::vector<std::string> words;

  std::size_t size() const { return words.size(); }
  const std::string& word(int id) const;
  int id_of(std::string_view word) const;
};

// The fixed toy vocabulary: topic word pools, a shared noise pool, and
// glue words. Sentence-ending words carry their terminator.
const Vocabulary& synthetic_vocabulary();

// Joins words with single spaces and records per-token character offsets.
TokenizedText detokenize(const std::vector<int>& ids, const Vocabulary& vocab);

struct DecodeConfig {
  int max_tokens = 12;
  double temperature = 0.0;  // 0 = greedy, ties break to the lowest id
  uint64_t seed = 0;
};

std::vector<int> decode_ids(const ToyLMParams& params,
                            const FeatureVector& context,
                            const DecodeConfig& cfg);

// Decodes the chosen response from the clean features and the rejected one
// from the noised features, with identical decode seed and temperature.
// Returns nullopt when the two texts come out identical (the pair would be
// filtered anyway). Throws std::runtime_error if decoding yields no tokens.
std::optional<PreferencePair> generate_pair(const std::string& pair_id,
                                            const std::string& prompt_text,
                                            const FeatureVector& features,
                                            const ToyLMParams& params,
                                            const Vocabulary& vocab,
                                            const NoiseConfig& noise,
                                            const DecodeConfig& decode);

struct FilterResult {
  std::vector<PreferencePair> kept;
  std::size_t removed = 0;
};

// Drops pairs whose chosen and rejected texts are byte-equal, preserving
// order.
FilterResult filter_identical(std::vector<PreferencePair> pairs);

// Bundled self-contained corpus: templated prompts over the toy vocabulary.
// Chosen responses mix on-topic sentences with one planted noisy sentence;
// rejected responses use an off-topic pool, so preferences are consistent
// and learnable.
struct CorpusConfig {
  std::size_t num_pairs = 600;
  uint64_t seed = 0;
  std::size_t min_factual_sentences = 2;
  std::size_t max_factual_sentences = 3;
  double feature_jitter = 0.05;
};

std::vector<PreferencePair> generate_template_corpus(const CorpusConfig& cfg,
                                                     const Embedder& embedder);

// Prompts plus clean image features for the decode pipeline, one per topic
// template.
struct PromptSet {
  std::vector<std::string> prompts;
  std::vector<FeatureVector> features;
};

PromptSet template_prompts(std::size_t count, uint64_t seed,
                           const Embedder& embedder, double feature_jitter);

// JSONL serialization. One pair per line; keys are sorted, doubles round-trip
// exactly, so identical inputs produce identical bytes.
std::string pair_to_json_line(const PreferencePair& pair);
PreferencePair pair_from_json_line(const std::string& line);

void write_pairs_jsonl(const std::string& path,
                       const std::vector<PreferencePair>& pairs);

// Throws std::runtime_error naming the 1-based line number on a malformed
// line.
std::vector<PreferencePair> read_pairs_jsonl(const std::string& path);

}  // namespace aspo
