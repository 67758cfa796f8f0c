#include "aspo/config.hpp"

#include <fstream>
#include <stdexcept>

namespace aspo {

namespace {

template <typename T>
void read_key(const nlohmann::json& doc, const char* key, T& value) {
  if (doc.contains(key)) value = doc.at(key).get<T>();
}

void read_string_key(const nlohmann::json& doc, const char* key,
                     const std::function<void(const std::string&)>& apply) {
  if (doc.contains(key)) apply(doc.at(key).get<std::string>());
}

}  // namespace

std::string to_string(DataMode mode) {
  return mode == DataMode::kTemplate ? "template" : "decode";
}

DataMode data_mode_from_string(const std::string& name) {
  if (name == "template") return DataMode::kTemplate;
  if (name == "decode") return DataMode::kDecode;
  throw std::invalid_argument("unknown data mode: " + name);
}

RunConfig config_from_json(const nlohmann::json& doc) {
  RunConfig config;
  if (doc.contains("embedder")) {
    const auto& section = doc.at("embedder");
    read_key(section, "dimension", config.embedder.dimension);
    read_key(section, "seed", config.embedder.seed);
  }
  if (doc.contains("model")) {
    const auto& section = doc.at("model");
    read_key(section, "hidden_dim", config.model.hidden_dim);
    read_key(section, "init_seed", config.model.init_seed);
  }
  if (doc.contains("data")) {
    const auto& section = doc.at("data");
    read_string_key(section, "mode", [&](const std::string& s) {
      config.data.mode = data_mode_from_string(s);
    });
    read_key(section, "num_pairs", config.data.num_pairs);
    read_key(section, "seed", config.data.seed);
    read_key(section, "noise_step", config.data.noise_step);
    read_key(section, "decode_len", config.data.decode_len);
    read_key(section, "temperature", config.data.temperature);
    read_key(section, "min_factual_sentences",
             config.data.min_factual_sentences);
    read_key(section, "max_factual_sentences",
             config.data.max_factual_sentences);
    read_key(section, "feature_jitter", config.data.feature_jitter);
  }
  if (doc.contains("training")) {
    const auto& section = doc.at("training");
    read_key(section, "beta", config.training.beta);
    read_key(section, "alpha", config.training.alpha);
    read_key(section, "learning_rate", config.training.learning_rate);
    read_key(section, "epochs", config.training.epochs);
    read_key(section, "batch_size", config.training.batch_size);
    read_string_key(section, "lr_schedule", [&](const std::string& s) {
      config.training.lr_schedule = lr_schedule_from_string(s);
    });
    read_string_key(section, "reward_level", [&](const std::string& s) {
      config.training.reward_level = reward_level_from_string(s);
    });
    read_string_key(section, "loss_mode", [&](const std::string& s) {
      config.training.loss_mode = loss_mode_from_string(s);
    });
    read_string_key(section, "ppl_source", [&](const std::string& s) {
      config.training.ppl_source = ppl_source_from_string(s);
    });
    read_key(section, "seed", config.training.seed);
    read_key(section, "log_interval", config.training.log_interval);
    read_key(section, "loss_delta_threshold",
             config.training.loss_delta_threshold);
    read_key(section, "eps_scale", config.training.eps_scale);
  }
  if (doc.contains("report")) {
    const auto& section = doc.at("report");
    read_key(section, "alpha_grid", config.report.alpha_grid);
  }
  return config;
}

nlohmann::json config_to_json(const RunConfig& config) {
  nlohmann::json doc;
  doc["embedder"] = {{"dimension", config.embedder.dimension},
                     {"seed", config.embedder.seed}};
  doc["model"] = {{"hidden_dim", config.model.hidden_dim},
                  {"init_seed", config.model.init_seed}};
  doc["data"] = {{"mode", to_string(config.data.mode)},
                 {"num_pairs", config.data.num_pairs},
                 {"seed", config.data.seed},
                 {"noise_step", config.data.noise_step},
                 {"decode_len", config.data.decode_len},
                 {"temperature", config.data.temperature},
                 {"min_factual_sentences", config.data.min_factual_sentences},
                 {"max_factual_sentences", config.data.max_factual_sentences},
                 {"feature_jitter", config.data.feature_jitter}};
  doc["training"] = {
      {"beta", config.training.beta},
      {"alpha", config.training.alpha},
      {"learning_rate", config.training.learning_rate},
      {"epochs", config.training.epochs},
      {"batch_size", config.training.batch_size},
      {"lr_schedule", to_string(config.training.lr_schedule)},
      {"reward_level", to_string(config.training.reward_level)},
      {"loss_mode", to_string(config.training.loss_mode)},
      {"ppl_source", to_string(config.training.ppl_source)},
      {"seed", config.training.seed},
      {"log_interval", config.training.log_interval},
      {"loss_delta_threshold", config.training.loss_delta_threshold},
      {"eps_scale", config.training.eps_scale}};
  doc["report"] = {{"alpha_grid", config.report.alpha_grid}};
  return doc;
}

RunConfig load_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_config: cannot open " + path);
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw std::runtime_error("load_config: failed to parse " + path + ": " +
                             e.what());
  }
  return config_from_json(doc);
}

void apply_overrides(RunConfig& config, const ConfigOverrides& overrides) {
  if (overrides.seed) {
    config.data.seed = *overrides.seed;
    config.training.seed = *overrides.seed;
  }
  if (overrides.reward_level) {
    config.training.reward_level =
        reward_level_from_string(*overrides.reward_level);
  }
  if (overrides.loss_mode) {
    config.training.loss_mode = loss_mode_from_string(*overrides.loss_mode);
  }
  if (overrides.alpha) {
    config.training.alpha = *overrides.alpha;
  }
  if (overrides.noise_step) {
    config.data.noise_step = *overrides.noise_step;
  }
}

}  // namespace aspo
