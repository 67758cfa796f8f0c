#pragma once

#include <vector>

#include "aspo/embedder.hpp"
#include "aspo/tokens.hpp"

namespace aspo {

// Per-sentence reward signals for one response. All lists share the sentence
// count; weight[i] = alpha * similarity_norm[i] + (1 - alpha) *
// perplexity_norm[i]. A single-sentence response always gets weight {0}.
struct SentenceWeights {
  std::vector<double> similarity;
  std::vector<double> similarity_norm;
  std::vector<double> perplexity;
  std::vector<double> perplexity_norm;
  std::vector<double> weight;
  double alpha = 0.5;
};

// dot(a,b) / (|a|*|b|), clamped to [-1,1] against rounding. Throws
// std::invalid_argument on dimension mismatch or a zero-norm input.
double cosine_similarity(const FeatureVector& a, const FeatureVector& b);

// exp(-(1/N) * sum of logprobs) per span. Log-probabilities must be finite
// and <= 0; every span must be non-empty. Valid inputs always yield >= 1.
std::vector<double> sentence_perplexity(const std::vector<double>& token_logprobs,
                                        const std::vector<SentenceSpan>& spans);

// (v - min) / (max - min) per element. A single element or an all-equal list
// maps to all zeros, so responses with no discriminating signal degenerate to
// the unweighted case. Throws on an empty list.
std::vector<double> minmax_normalize(const std::vector<double>& values);

// Min-max normalization of the negated perplexities: the most confident
// sentence maps to 1, the least confident to 0.
std::vector<double> normalized_perplexity(const std::vector<double>& ppl);

// Elementwise alpha * sim + (1 - alpha) * ppl. Lists must have equal length;
// alpha must lie in [0,1].
std::vector<double> combine_weights(const std::vector<double>& sim_norm,
                                    const std::vector<double>& ppl_norm,
                                    double alpha);

// Full per-sentence weight computation for one response: embeds each
// sentence's raw substring (terminators included), scores it against the
// image features, folds in span perplexities, and combines.
SentenceWeights compute_sentence_weights(const TokenizedText& response,
                                         const std::vector<SentenceSpan>& spans,
                                         const std::vector<double>& token_logprobs,
                                         const FeatureVector& image_features,
                                         const Embedder& embedder,
                                         double alpha);

}  // namespace aspo
