#include "aspo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "aspo/rng.hpp"
#include "aspo/scoring.hpp"
#include "aspo/segmentation.hpp"

namespace aspo {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct PairContext {
  std::vector<SentenceSpan> chosen_spans;
  LogProbSeq chosen_ref;
  LogProbSeq rejected_ref;
  std::vector<double> similarity_norm;
  std::vector<double> fixed_weights;  // set when weights do not move in training
};

struct IntervalStats {
  double loss_sum = 0.0;
  double margin_sum = 0.0;
  int pairs = 0;
  int wins = 0;
  int fallbacks = 0;
  std::array<int, 10> histogram = {};

  void reset() { *this = IntervalStats{}; }
};

void validate_config(const TrainingConfig& config) {
  if (config.beta <= 0.0) {
    throw std::invalid_argument("train: beta must be > 0");
  }
  if (config.alpha < 0.0 || config.alpha > 1.0) {
    throw std::invalid_argument("train: alpha must lie in [0,1]");
  }
  if (config.batch_size < 1) {
    throw std::invalid_argument("train: batch_size must be >= 1");
  }
  if (config.epochs < 1) {
    throw std::invalid_argument("train: epochs must be >= 1");
  }
  if (config.log_interval < 1) {
    throw std::invalid_argument("train: log_interval must be >= 1");
  }
}

std::size_t weight_bin(double w) {
  const double clamped = std::clamp(w, 0.0, 1.0);
  return std::min<std::size_t>(9, static_cast<std::size_t>(clamped * 10.0));
}

}  // namespace

std::string to_string(LossMode mode) {
  return mode == LossMode::kDpo ? "dpo" : "aspo";
}

LossMode loss_mode_from_string(const std::string& name) {
  if (name == "dpo") return LossMode::kDpo;
  if (name == "aspo") return LossMode::kAspo;
  throw std::invalid_argument("unknown loss mode: " + name);
}

std::string to_string(PplSource source) {
  return source == PplSource::kReference ? "reference" : "policy";
}

PplSource ppl_source_from_string(const std::string& name) {
  if (name == "reference") return PplSource::kReference;
  if (name == "policy") return PplSource::kPolicy;
  throw std::invalid_argument("unknown perplexity source: " + name);
}

std::string to_string(LrSchedule schedule) {
  return schedule == LrSchedule::kConstant ? "constant" : "cosine";
}

LrSchedule lr_schedule_from_string(const std::string& name) {
  if (name == "constant") return LrSchedule::kConstant;
  if (name == "cosine") return LrSchedule::kCosine;
  throw std::invalid_argument("unknown lr schedule: " + name);
}

double cosine_lr(int step, int total_steps, double base_lr) {
  if (total_steps < 1 || step < 0 || step > total_steps) {
    throw std::invalid_argument("cosine_lr: step outside [0, total_steps]");
  }
  return base_lr * 0.5 *
         (1.0 + std::cos(kPi * static_cast<double>(step) /
                         static_cast<double>(total_steps)));
}

TrainResult train(const std::vector<PreferencePair>& dataset,
                  const ToyLMParams& initial_params, const Embedder& embedder,
                  const TrainingConfig& config, const StepObserver& observer) {
  if (dataset.empty()) {
    throw std::invalid_argument("train: empty dataset");
  }
  validate_config(config);

  TrainResult result;
  result.policy = initial_params;
  result.reference = snapshot_reference(initial_params);
  const ToyLMParams& reference = result.reference;

  // Everything that does not depend on the moving policy is computed once.
  std::vector<PairContext> contexts(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const PreferencePair& pair = dataset[i];
    PairContext& ctx = contexts[i];
    ctx.chosen_spans = segment_response(pair.chosen);
    ctx.chosen_ref =
        forward_logprobs(reference, pair.image_features, pair.chosen.tokens);
    ctx.rejected_ref =
        forward_logprobs(reference, pair.image_features, pair.rejected.tokens);
    if (config.loss_mode == LossMode::kDpo || ctx.chosen_spans.empty()) {
      ctx.fixed_weights.assign(ctx.chosen_spans.size(), 0.0);
      continue;
    }
    std::vector<double> similarity;
    similarity.reserve(ctx.chosen_spans.size());
    const FeatureVector image = embedder.embed_image(pair.image_features);
    for (const SentenceSpan& span : ctx.chosen_spans) {
      const std::string_view sentence =
          std::string_view(pair.chosen.text)
              .substr(span.char_start, span.char_end - span.char_start);
      similarity.push_back(cosine_similarity(embedder.embed(sentence), image));
    }
    ctx.similarity_norm = minmax_normalize(similarity);
    if (config.ppl_source == PplSource::kReference) {
      const std::vector<double> ppl_norm = normalized_perplexity(
          sentence_perplexity(ctx.chosen_ref, ctx.chosen_spans));
      ctx.fixed_weights =
          combine_weights(ctx.similarity_norm, ppl_norm, config.alpha);
    }
  }

  const int batches_per_epoch =
      static_cast<int>((dataset.size() + config.batch_size - 1) /
                       static_cast<std::size_t>(config.batch_size));
  const int total_steps = config.epochs * batches_per_epoch;

  Rng rng(config.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  double min_weight = std::numeric_limits<double>::infinity();
  double max_weight = -std::numeric_limits<double>::infinity();
  IntervalStats interval;
  int step = 0;
  double previous_epoch_loss = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;

  for (int epoch = 0; epoch < config.epochs && !converged; ++epoch) {
    // Fisher-Yates with the shared stream keeps runs reproducible.
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = rng.below(i);
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss_sum = 0.0;
    int epoch_pairs = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(
          order.size(), begin + static_cast<std::size_t>(config.batch_size));
      const double lr =
          config.lr_schedule == LrSchedule::kCosine
              ? cosine_lr(step, total_steps, config.learning_rate)
              : config.learning_rate;
      if (observer) observer(step, result.policy);

      ToyLMGrads grads = zero_grads(result.policy);
      const int batch_n = static_cast<int>(end - begin);
      for (std::size_t k = begin; k < end; ++k) {
        const PreferencePair& pair = dataset[order[k]];
        const PairContext& ctx = contexts[order[k]];

        PairLogProbs lp;
        lp.chosen_policy = forward_logprobs(result.policy, pair.image_features,
                                            pair.chosen.tokens);
        lp.chosen_ref = ctx.chosen_ref;
        lp.rejected_policy = forward_logprobs(
            result.policy, pair.image_features, pair.rejected.tokens);
        lp.rejected_ref = ctx.rejected_ref;

        std::vector<double> weights;
        if (!ctx.fixed_weights.empty() || ctx.chosen_spans.empty()) {
          weights = ctx.fixed_weights;
        } else {
          const std::vector<double> ppl_norm = normalized_perplexity(
              sentence_perplexity(lp.chosen_policy, ctx.chosen_spans));
          weights =
              combine_weights(ctx.similarity_norm, ppl_norm, config.alpha);
        }

        const RewardLevel level = config.loss_mode == LossMode::kDpo
                                      ? RewardLevel::kSentence
                                      : config.reward_level;
        const TokenGradients token_grads = loss_gradient_wrt_logprobs(
            lp, ctx.chosen_spans, weights, config.beta, level,
            config.eps_scale);
        const double margin = token_grads.breakdown.margin_aspo;
        const double loss = preference_loss(margin);
        if (!std::isfinite(loss)) {
          std::ostringstream diag;
          diag << "train: non-finite loss at step " << step << " on pair "
               << pair.pair_id << " (margin " << margin << ")";
          throw std::runtime_error(diag.str());
        }

        const ToyLMGrads chosen_grads =
            backward(result.policy, pair.image_features, pair.chosen.tokens,
                     token_grads.chosen);
        const ToyLMGrads rejected_grads =
            backward(result.policy, pair.image_features, pair.rejected.tokens,
                     token_grads.rejected);
        grads.add_scaled(chosen_grads, 1.0);
        grads.add_scaled(rejected_grads, 1.0);

        interval.loss_sum += loss;
        interval.margin_sum += margin;
        interval.pairs += 1;
        interval.wins += margin > 0.0 ? 1 : 0;
        if (config.loss_mode == LossMode::kAspo &&
            token_grads.breakdown.scale_fallback) {
          interval.fallbacks += 1;
        }
        for (double w : weights) {
          interval.histogram[weight_bin(w)] += 1;
          min_weight = std::min(min_weight, w);
          max_weight = std::max(max_weight, w);
        }
        epoch_loss_sum += loss;
        epoch_pairs += 1;
      }

      grads.scale(1.0 / static_cast<double>(batch_n));
      apply_update(result.policy, grads, lr);
      ++step;

      if (step % config.log_interval == 0) {
        MetricsRecord record;
        record.step = step;
        record.mean_loss = interval.loss_sum / interval.pairs;
        record.mean_margin = interval.margin_sum / interval.pairs;
        record.reward_accuracy =
            static_cast<double>(interval.wins) / interval.pairs;
        record.scale_fallback_count = interval.fallbacks;
        record.weight_histogram = interval.histogram;
        result.metrics.push_back(record);
        result.total_scale_fallbacks += interval.fallbacks;
        interval.reset();
      }
    }

    const double epoch_loss = epoch_loss_sum / epoch_pairs;
    if (config.loss_delta_threshold > 0.0 && epoch > 0 &&
        std::abs(epoch_loss - previous_epoch_loss) <
            config.loss_delta_threshold) {
      converged = true;
    }
    previous_epoch_loss = epoch_loss;
  }

  if (interval.pairs > 0) {
    MetricsRecord record;
    record.step = step;
    record.mean_loss = interval.loss_sum / interval.pairs;
    record.mean_margin = interval.margin_sum / interval.pairs;
    record.reward_accuracy =
        static_cast<double>(interval.wins) / interval.pairs;
    record.scale_fallback_count = interval.fallbacks;
    record.weight_histogram = interval.histogram;
    result.metrics.push_back(record);
    result.total_scale_fallbacks += interval.fallbacks;
  }

  result.steps_run = step;
  if (std::isinf(min_weight)) {
    min_weight = 0.0;
    max_weight = 0.0;
  }
  result.min_weight_seen = min_weight;
  result.max_weight_seen = max_weight;
  return result;
}

MetricsRecord evaluate(const std::vector<PreferencePair>& dataset,
                       const ToyLMParams& policy, const ToyLMParams& reference,
                       double beta) {
  if (dataset.empty()) {
    throw std::invalid_argument("evaluate: empty dataset");
  }
  MetricsRecord record;
  double loss_sum = 0.0;
  double margin_sum = 0.0;
  int wins = 0;
  for (const PreferencePair& pair : dataset) {
    PairLogProbs lp;
    lp.chosen_policy =
        forward_logprobs(policy, pair.image_features, pair.chosen.tokens);
    lp.chosen_ref =
        forward_logprobs(reference, pair.image_features, pair.chosen.tokens);
    lp.rejected_policy =
        forward_logprobs(policy, pair.image_features, pair.rejected.tokens);
    lp.rejected_ref =
        forward_logprobs(reference, pair.image_features, pair.rejected.tokens);
    const MarginBreakdown breakdown =
        dpo_margin(lp, segment_response(pair.chosen), beta);
    loss_sum += preference_loss(breakdown.margin_dpo);
    margin_sum += breakdown.margin_dpo;
    wins += breakdown.margin_dpo > 0.0 ? 1 : 0;
  }
  const double n = static_cast<double>(dataset.size());
  record.mean_loss = loss_sum / n;
  record.mean_margin = margin_sum / n;
  record.reward_accuracy = static_cast<double>(wins) / n;
  return record;
}

}  // namespace aspo
