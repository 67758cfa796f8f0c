#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aspo/embedder.hpp"
#include "aspo/tokens.hpp"

namespace aspo {

// Parameters of the small conditional language model. The hidden state at
// position j is the mean of the embeddings of tokens before j plus the
// projected context vector; logits are a linear readout. Everything is
// double precision, row-major.
struct ToyLMParams {
  std::size_t vocab_size = 0;
  std::size_t hidden_dim = 0;
  std::size_t context_dim = 0;
  std::vector<double> token_embeddings;    // vocab_size x hidden_dim
  std::vector<double> context_projection;  // context_dim x hidden_dim
  std::vector<double> output_weights;      // hidden_dim x vocab_size

  bool operator==(const ToyLMParams&) const = default;
};

// Gradient accumulator with the same shapes as ToyLMParams.
struct ToyLMGrads {
  std::vector<double> token_embeddings;
  std::vector<double> context_projection;
  std::vector<double> output_weights;

  void add_scaled(const ToyLMGrads& other, double factor);
  void scale(double factor);
};

ToyLMParams init_params(std::size_t vocab_size, std::size_t hidden_dim,
                        std::size_t context_dim, uint64_t seed);

ToyLMGrads zero_grads(const ToyLMParams& params);

// Per-token conditional log-probabilities of the given token sequence under
// the model. Throws std::invalid_argument on an out-of-vocabulary id or a
// context dimension mismatch.
LogProbSeq forward_logprobs(const ToyLMParams& params,
                            const FeatureVector& context,
                            const std::vector<Token>& tokens);

// Full log-distribution over the vocabulary for the position following
// prefix_ids.
std::vector<double> log_distribution_at(const ToyLMParams& params,
                                        const FeatureVector& context,
                                        std::span<const int> prefix_ids);

// Exact gradient of sum_j per_token_grad[j] * logprob[j] with respect to
// every parameter block. per_token_grad must align with tokens.
ToyLMGrads backward(const ToyLMParams& params, const FeatureVector& context,
                    const std::vector<Token>& tokens,
                    const std::vector<double>& per_token_grad);

// Deep frozen copy; later policy updates leave it untouched.
ToyLMParams snapshot_reference(const ToyLMParams& params);

void apply_update(ToyLMParams& params, const ToyLMGrads& grads,
                  double learning_rate);

// Versioned JSON checkpoint with dims, seed, and row-major matrices.
void save_checkpoint(const ToyLMParams& params, uint64_t seed,
                     const std::string& path);

struct Checkpoint {
  ToyLMParams params;
  uint64_t seed = 0;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace aspo
