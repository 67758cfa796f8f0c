#include "aspo/margin.hpp"

#include <cmath>
#include <stdexcept>

namespace aspo {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double sum(const std::vector<double>& values) {
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

void check_partition(const std::vector<SentenceSpan>& spans,
                     std::size_t num_tokens) {
  std::size_t expected_start = 0;
  for (const SentenceSpan& span : spans) {
    if (span.token_start != expected_start || span.token_end < span.token_start) {
      throw std::invalid_argument("margin: spans do not partition the tokens");
    }
    expected_start = span.token_end;
  }
  if (expected_start != num_tokens) {
    throw std::invalid_argument("margin: spans do not cover the token list");
  }
}

double response_reward(const LogProbSeq& policy_lp, const LogProbSeq& ref_lp,
                       double beta) {
  if (policy_lp.size() != ref_lp.size()) {
    throw std::invalid_argument("margin: policy/ref logprob length mismatch");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < policy_lp.size(); ++j) {
    total += policy_lp[j] - ref_lp[j];
  }
  return beta * total;
}

// Shared core: given per-unit rewards and per-unit weights for the chosen
// response, apply the reweight-and-rescale construction.
MarginBreakdown build_breakdown(std::vector<double> sentence_rewards,
                                const std::vector<double>& unit_rewards,
                                const std::vector<double>& unit_weights,
                                double rejected_reward, double beta,
                                double eps_scale) {
  MarginBreakdown result;
  result.beta = beta;
  result.chosen_sentence_rewards = std::move(sentence_rewards);
  result.rejected_reward = rejected_reward;
  result.r_c_original = sum(unit_rewards);
  double reweighted = 0.0;
  for (std::size_t i = 0; i < unit_rewards.size(); ++i) {
    reweighted += (1.0 + unit_weights[i]) * unit_rewards[i];
  }
  result.r_c_reweighted = reweighted;
  result.margin_dpo = result.r_c_original - rejected_reward;
  if (std::abs(reweighted) <= eps_scale) {
    result.scale = 1.0;
    result.scale_fallback = true;
    result.margin_aspo = result.margin_dpo;
  } else {
    result.scale = result.r_c_original / reweighted;
    result.margin_aspo = result.scale * reweighted - rejected_reward;
  }
  return result;
}

}  // namespace

std::string to_string(RewardLevel level) {
  switch (level) {
    case RewardLevel::kResponse:
      return "response";
    case RewardLevel::kSentence:
      return "sentence";
    case RewardLevel::kToken:
      return "token";
  }
  return "sentence";
}

RewardLevel reward_level_from_string(const std::string& name) {
  if (name == "response") return RewardLevel::kResponse;
  if (name == "sentence") return RewardLevel::kSentence;
  if (name == "token") return RewardLevel::kToken;
  throw std::invalid_argument("unknown reward level: " + name);
}

double bt_preference_probability(double reward_chosen, double reward_rejected) {
  return stable_sigmoid(reward_chosen - reward_rejected);
}

std::vector<double> implicit_rewards(const LogProbSeq& policy_lp,
                                     const LogProbSeq& ref_lp,
                                     const std::vector<SentenceSpan>& spans,
                                     double beta) {
  if (policy_lp.size() != ref_lp.size()) {
    throw std::invalid_argument(
        "implicit_rewards: policy/ref logprob length mismatch");
  }
  check_partition(spans, policy_lp.size());
  std::vector<double> rewards;
  rewards.reserve(spans.size());
  for (const SentenceSpan& span : spans) {
    double total = 0.0;
    for (std::size_t j = span.token_start; j < span.token_end; ++j) {
      total += policy_lp[j] - ref_lp[j];
    }
    rewards.push_back(beta * total);
  }
  return rewards;
}

MarginBreakdown dpo_margin(const PairLogProbs& pair,
                           const std::vector<SentenceSpan>& chosen_spans,
                           double beta) {
  const std::vector<double> rewards =
      implicit_rewards(pair.chosen_policy, pair.chosen_ref, chosen_spans, beta);
  const double rejected =
      response_reward(pair.rejected_policy, pair.rejected_ref, beta);
  const std::vector<double> zero_weights(rewards.size(), 0.0);
  MarginBreakdown result = build_breakdown(rewards, rewards, zero_weights,
                                           rejected, beta, kDefaultScaleEpsilon);
  // The unweighted margin never rescales.
  result.scale = 1.0;
  result.scale_fallback = false;
  result.margin_aspo = result.margin_dpo;
  result.r_c_reweighted = result.r_c_original;
  return result;
}

MarginBreakdown aspo_margin(const PairLogProbs& pair,
                            const std::vector<SentenceSpan>& chosen_spans,
                            const std::vector<double>& sentence_weights,
                            double beta, double eps_scale) {
  return margin_at_level(pair, chosen_spans, sentence_weights, beta,
                         RewardLevel::kSentence, eps_scale);
}

MarginBreakdown aspo_margin(const PairLogProbs& pair,
                            const std::vector<SentenceSpan>& chosen_spans,
                            const SentenceWeights& weights, double beta,
                            double eps_scale) {
  return aspo_margin(pair, chosen_spans, weights.weight, beta, eps_scale);
}

double preference_loss(double margin) {
  if (!std::isfinite(margin)) {
    throw std::invalid_argument("preference_loss: margin must be finite");
  }
  // softplus(-margin)
  return std::max(-margin, 0.0) + std::log1p(std::exp(-std::abs(margin)));
}

MarginBreakdown margin_at_level(const PairLogProbs& pair,
                                const std::vector<SentenceSpan>& chosen_spans,
                                const std::vector<double>& sentence_weights,
                                double beta, RewardLevel level,
                                double eps_scale) {
  if (sentence_weights.size() != chosen_spans.size()) {
    throw std::invalid_argument("margin: weight/sentence count mismatch");
  }
  const std::vector<double> sentence_rewards =
      implicit_rewards(pair.chosen_policy, pair.chosen_ref, chosen_spans, beta);
  const double rejected =
      response_reward(pair.rejected_policy, pair.rejected_ref, beta);

  switch (level) {
    case RewardLevel::kSentence:
      return build_breakdown(sentence_rewards, sentence_rewards,
                             sentence_weights, rejected, beta, eps_scale);
    case RewardLevel::kResponse: {
      double mean_weight = 0.0;
      if (!sentence_weights.empty()) {
        mean_weight = sum(sentence_weights) /
                      static_cast<double>(sentence_weights.size());
      }
      const std::vector<double> unit_rewards = {sum(sentence_rewards)};
      const std::vector<double> unit_weights = {mean_weight};
      return build_breakdown(sentence_rewards, unit_rewards, unit_weights,
                             rejected, beta, eps_scale);
    }
    case RewardLevel::kToken: {
      std::vector<double> token_rewards(pair.chosen_policy.size());
      std::vector<double> token_weights(pair.chosen_policy.size(), 0.0);
      for (std::size_t j = 0; j < token_rewards.size(); ++j) {
        token_rewards[j] = beta * (pair.chosen_policy[j] - pair.chosen_ref[j]);
      }
      for (const SentenceSpan& span : chosen_spans) {
        for (std::size_t j = span.token_start; j < span.token_end; ++j) {
          token_weights[j] = sentence_weights[span.index];
        }
      }
      return build_breakdown(sentence_rewards, token_rewards, token_weights,
                             rejected, beta, eps_scale);
    }
  }
  throw std::invalid_argument("margin: invalid reward level");
}

TokenGradients loss_gradient_wrt_logprobs(
    const PairLogProbs& pair, const std::vector<SentenceSpan>& chosen_spans,
    const std::vector<double>& sentence_weights, double beta, RewardLevel level,
    double eps_scale) {
  TokenGradients grads;
  grads.breakdown = margin_at_level(pair, chosen_spans, sentence_weights, beta,
                                    level, eps_scale);
  const MarginBreakdown& b = grads.breakdown;
  const double sig = stable_sigmoid(-b.margin_aspo);

  grads.chosen.assign(pair.chosen_policy.size(), 0.0);
  grads.rejected.assign(pair.rejected_policy.size(), sig * beta);

  if (b.scale_fallback) {
    // Fallback margin is the unweighted one; so is its gradient.
    for (double& g : grads.chosen) g = -sig * beta;
    return grads;
  }

  double mean_weight = 0.0;
  if (level == RewardLevel::kResponse && !sentence_weights.empty()) {
    mean_weight =
        sum(sentence_weights) / static_cast<double>(sentence_weights.size());
  }
  for (const SentenceSpan& span : chosen_spans) {
    const double w = level == RewardLevel::kResponse
                         ? mean_weight
                         : sentence_weights[span.index];
    const double coefficient = -sig * b.scale * (1.0 + w) * beta;
    for (std::size_t j = span.token_start; j < span.token_end; ++j) {
      grads.chosen[j] = coefficient;
    }
  }
  return grads;
}

}  // namespace aspo
