#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "aspo/trainer.hpp"

namespace aspo {

struct EmbedderConfig {
  std::size_t dimension = 64;
  uint64_t seed = 7;
};

struct ModelConfig {
  std::size_t hidden_dim = 32;
  uint64_t init_seed = 1234;
};

enum class DataMode { kTemplate, kDecode };

std::string to_string(DataMode mode);
DataMode data_mode_from_string(const std::string& name);

struct DataConfig {
  DataMode mode = DataMode::kTemplate;
  std::size_t num_pairs = 600;
  uint64_t seed = 99;
  int noise_step = 500;
  int decode_len = 12;
  double temperature = 0.0;
  std::size_t min_factual_sentences = 2;
  std::size_t max_factual_sentences = 3;
  double feature_jitter = 0.05;
};

struct ReportConfig {
  std::vector<double> alpha_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
};

// One declarative file drives every command; flags override config keys,
// config keys override the defaults above.
struct RunConfig {
  EmbedderConfig embedder;
  ModelConfig model;
  DataConfig data;
  TrainingConfig training;
  ReportConfig report;
};

RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const RunConfig& config);

// Empty path yields the defaults. Throws std::runtime_error on unreadable
// or unparsable files.
RunConfig load_config(const std::string& path);

// Command-line values that take precedence over config keys.
struct ConfigOverrides {
  std::optional<uint64_t> seed;  // applies to the seed of the invoked stage
  std::optional<std::string> reward_level;
  std::optional<std::string> loss_mode;
  std::optional<double> alpha;
  std::optional<int> noise_step;
};

void apply_overrides(RunConfig& config, const ConfigOverrides& overrides);

}  // namespace aspo
