#pragma once

#include <string>
#include <vector>

#include "aspo/scoring.hpp"
#include "aspo/tokens.hpp"

namespace aspo {

// Granularity at which adaptive weights are applied to the chosen response.
enum class RewardLevel { kResponse, kSentence, kToken };

std::string to_string(RewardLevel level);
RewardLevel reward_level_from_string(const std::string& name);

// Policy and reference log-probabilities for one preference pair.
struct PairLogProbs {
  LogProbSeq chosen_policy;
  LogProbSeq chosen_ref;
  LogProbSeq rejected_policy;
  LogProbSeq rejected_ref;
};

// Everything the adaptive margin computation produces for one pair. The
// scale factor and the weights are constants with respect to model
// parameters: no gradient flows through them. When |r_c_reweighted| falls
// below eps_scale the margin falls back to the unweighted form and
// scale_fallback is set.
struct MarginBreakdown {
  std::vector<double> chosen_sentence_rewards;
  double rejected_reward = 0.0;
  double r_c_original = 0.0;    // sum of chosen sentence rewards
  double r_c_reweighted = 0.0;  // sum of (1 + w)-scaled unit rewards
  double scale = 1.0;           // r_c_original / r_c_reweighted, detached
  double margin_dpo = 0.0;
  double margin_aspo = 0.0;
  double beta = 0.0;
  bool scale_fallback = false;
};

inline constexpr double kDefaultScaleEpsilon = 1e-8;

// Bradley-Terry probability that the first reward wins; equals
// sigmoid(reward_chosen - reward_rejected), overflow-safe.
double bt_preference_probability(double reward_chosen, double reward_rejected);

// beta * sum(policy - ref) per span. Sentence rewards sum exactly to the
// response-level implicit reward.
std::vector<double> implicit_rewards(const LogProbSeq& policy_lp,
                                     const LogProbSeq& ref_lp,
                                     const std::vector<SentenceSpan>& spans,
                                     double beta);

// Unweighted margin: beta * log-ratio(chosen) - beta * log-ratio(rejected),
// with the chosen side decomposed per sentence.
MarginBreakdown dpo_margin(const PairLogProbs& pair,
                           const std::vector<SentenceSpan>& chosen_spans,
                           double beta);

// Adaptive margin: (R_c / R_c*) * sum_i beta * (1 + w_i) * log-ratio of
// chosen sentence i, minus the rejected aggregate. With all-zero weights
// this reduces bit-for-bit to the unweighted margin.
MarginBreakdown aspo_margin(const PairLogProbs& pair,
                            const std::vector<SentenceSpan>& chosen_spans,
                            const std::vector<double>& sentence_weights,
                            double beta,
                            double eps_scale = kDefaultScaleEpsilon);

MarginBreakdown aspo_margin(const PairLogProbs& pair,
                            const std::vector<SentenceSpan>& chosen_spans,
                            const SentenceWeights& weights, double beta,
                            double eps_scale = kDefaultScaleEpsilon);

// -log(sigmoid(margin)) in softplus form; stable for |margin| up to 1e3 and
// beyond.
double preference_loss(double margin);

// The adaptive construction at the requested granularity. Response level
// reweights the whole chosen response by the mean sentence weight (a single
// unit, so the normalizer forces the unweighted margin back out); token
// level broadcasts each sentence's weight to its tokens.
MarginBreakdown margin_at_level(const PairLogProbs& pair,
                                const std::vector<SentenceSpan>& chosen_spans,
                                const std::vector<double>& sentence_weights,
                                double beta, RewardLevel level,
                                double eps_scale = kDefaultScaleEpsilon);

// Analytic gradient of the preference loss with respect to every policy
// log-probability. For chosen token j in unit u:
//   dL/dlp[j] = -sigmoid(-M*) * scale * (1 + w_u) * beta
// and for every rejected token:
//   dL/dlp[j] = +sigmoid(-M*) * beta.
// Weights and scale are treated as constants.
struct TokenGradients {
  std::vector<double> chosen;
  std::vector<double> rejected;
  MarginBreakdown breakdown;
};

TokenGradients loss_gradient_wrt_logprobs(
    const PairLogProbs& pair, const std::vector<SentenceSpan>& chosen_spans,
    const std::vector<double>& sentence_weights, double beta, RewardLevel level,
    double eps_scale = kDefaultScaleEpsilon);

}  // namespace aspo
