#include "aspo/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aspo {

double cosine_similarity(const FeatureVector& a, const FeatureVector& b) {
  if (a.dimension() != b.dimension()) {
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  }
  double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    norm_a += a.values[i] * a.values[i];
    norm_b += b.values[i] * b.values[i];
  }
  if (norm_a == 0.0 || norm_b == 0.0) {
    throw std::invalid_argument("cosine_similarity: zero-norm vector");
  }
  const double value = dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
  return std::clamp(value, -1.0, 1.0);
}

std::vector<double> sentence_perplexity(
    const std::vector<double>& token_logprobs,
    const std::vector<SentenceSpan>& spans) {
  for (double lp : token_logprobs) {
    if (!(lp <= 0.0) || !std::isfinite(lp)) {
      throw std::invalid_argument(
          "sentence_perplexity: log-probabilities must be finite and <= 0");
    }
  }
  std::vector<double> out;
  out.reserve(spans.size());
  for (const SentenceSpan& span : spans) {
    if (span.num_tokens() == 0) {
      throw std::invalid_argument("sentence_perplexity: empty sentence span");
    }
    if (span.token_end > token_logprobs.size()) {
      throw std::invalid_argument(
          "sentence_perplexity: span exceeds logprob list");
    }
    double sum = 0.0;
    for (std::size_t j = span.token_start; j < span.token_end; ++j) {
      sum += token_logprobs[j];
    }
    out.push_back(std::exp(-sum / static_cast<double>(span.num_tokens())));
  }
  return out;
}

std::vector<double> minmax_normalize(const std::vector<double>& values) {
  if (values.empty()) {
    throw std::invalid_argument("minmax_normalize: empty list");
  }
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *min_it, hi = *max_it;
  std::vector<double> out(values.size(), 0.0);
  if (hi == lo) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = (values[i] - lo) / (hi - lo);
  }
  return out;
}

std::vector<double> normalized_perplexity(const std::vector<double>& ppl) {
  std::vector<double> negated(ppl.size());
  for (std::size_t i = 0; i < ppl.size(); ++i) negated[i] = -ppl[i];
  return minmax_normalize(negated);
}

std::vector<double> combine_weights(const std::vector<double>& sim_norm,
                                    const std::vector<double>& ppl_norm,
                                    double alpha) {
  if (sim_norm.size() != ppl_norm.size()) {
    throw std::invalid_argument("combine_weights: length mismatch");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("combine_weights: alpha outside [0,1]");
  }
  std::vector<double> out(sim_norm.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = alpha * sim_norm[i] + (1.0 - alpha) * ppl_norm[i];
  }
  return out;
}

SentenceWeights compute_sentence_weights(
    const TokenizedText& response, const std::vector<SentenceSpan>& spans,
    const std::vector<double>& token_logprobs,
    const FeatureVector& image_features, const Embedder& embedder,
    double alpha) {
  SentenceWeights weights;
  weights.alpha = alpha;
  const FeatureVector image = embedder.embed_image(image_features);
  weights.similarity.reserve(spans.size());
  for (const SentenceSpan& span : spans) {
    const std::string_view sentence =
        std::string_view(response.text)
            .substr(span.char_start, span.char_end - span.char_start);
    weights.similarity.push_back(
        cosine_similarity(embedder.embed(sentence), image));
  }
  weights.similarity_norm = minmax_normalize(weights.similarity);
  weights.perplexity = sentence_perplexity(token_logprobs, spans);
  weights.perplexity_norm = normalized_perplexity(weights.perplexity);
  weights.weight =
      combine_weights(weights.similarity_norm, weights.perplexity_norm, alpha);
  return weights;
}

}  // namespace aspo
