#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aspo/data_pipeline.hpp"
#include "aspo/margin.hpp"
#include "aspo/toy_model.hpp"

namespace aspo {

enum class LossMode { kDpo, kAspo };
enum class PplSource { kReference, kPolicy };
enum class LrSchedule { kConstant, kCosine };

std::string to_string(LossMode mode);
LossMode loss_mode_from_string(const std::string& name);
std::string to_string(PplSource source);
PplSource ppl_source_from_string(const std::string& name);
std::string to_string(LrSchedule schedule);
LrSchedule lr_schedule_from_string(const std::string& name);

struct TrainingConfig {
  double beta = 0.1;
  double alpha = 0.5;
  // Toy-scale step size; far larger than what billion-parameter models use.
  double learning_rate = 0.5;
  int epochs = 1;
  int batch_size = 10;
  LrSchedule lr_schedule = LrSchedule::kCosine;
  RewardLevel reward_level = RewardLevel::kSentence;
  LossMode loss_mode = LossMode::kAspo;
  PplSource ppl_source = PplSource::kReference;
  uint64_t seed = 0;
  int log_interval = 1;  // batches per metrics record
  // Optional convergence check on the change in mean batch loss; <= 0
  // disables it and the epoch bound governs.
  double loss_delta_threshold = 0.0;
  double eps_scale = kDefaultScaleEpsilon;
};

struct MetricsRecord {
  int step = 0;
  double mean_loss = 0.0;
  double mean_margin = 0.0;
  double reward_accuracy = 0.0;  // fraction of pairs with margin > 0
  int scale_fallback_count = 0;
  std::array<int, 10> weight_histogram = {};  // w in [0,0.1), ..., [0.9,1.0]
};

struct TrainResult {
  ToyLMParams policy;
  ToyLMParams reference;
  std::vector<MetricsRecord> metrics;
  int total_scale_fallbacks = 0;
  double min_weight_seen = 0.0;
  double max_weight_seen = 0.0;
  int steps_run = 0;
};

// Observes the parameters at the start of each optimizer step, before the
// update; used by tests and reporting.
using StepObserver = std::function<void(int step, const ToyLMParams& params)>;

// Runs the training loop: per pair, segment the chosen response, score
// sentence weights, form the adaptive margin at the configured level, and
// apply the batch-mean gradient with the scheduled learning rate. The
// reference model is snapshotted from the incoming parameters before the
// first step. Deterministic for a fixed seed. Throws std::invalid_argument
// on an empty dataset and std::runtime_error carrying diagnostics if a loss
// goes non-finite.
TrainResult train(const std::vector<PreferencePair>& dataset,
                  const ToyLMParams& initial_params, const Embedder& embedder,
                  const TrainingConfig& config,
                  const StepObserver& observer = {});

// Margin statistics of policy vs reference on a held-out set: accuracy is
// the fraction of pairs with a strictly positive margin (ties fail).
MetricsRecord evaluate(const std::vector<PreferencePair>& dataset,
                       const ToyLMParams& policy, const ToyLMParams& reference,
                       double beta);

// base_lr * 0.5 * (1 + cos(pi * step / total_steps)).
double cosine_lr(int step, int total_steps, double base_lr);

}  // namespace aspo
