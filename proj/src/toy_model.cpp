#include "aspo/toy_model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "aspo/rng.hpp"

namespace aspo {

namespace {

// Projected context vector, length hidden_dim.
std::vector<double> project_context(const ToyLMParams& params,
                                    const FeatureVector& context) {
  if (context.dimension() != params.context_dim) {
    throw std::invalid_argument("toy model: context dimension mismatch");
  }
  std::vector<double> projected(params.hidden_dim, 0.0);
  for (std::size_t c = 0; c < params.context_dim; ++c) {
    const double x = context.values[c];
    const double* row = &params.context_projection[c * params.hidden_dim];
    for (std::size_t d = 0; d < params.hidden_dim; ++d) {
      projected[d] += x * row[d];
    }
  }
  return projected;
}

void check_token_id(const ToyLMParams& params, int id) {
  if (id < 0 || static_cast<std::size_t>(id) >= params.vocab_size) {
    throw std::invalid_argument("toy model: token id outside vocabulary");
  }
}

std::vector<double> logits_for_hidden(const ToyLMParams& params,
                                      const std::vector<double>& hidden) {
  std::vector<double> logits(params.vocab_size, 0.0);
  for (std::size_t d = 0; d < params.hidden_dim; ++d) {
    const double h = hidden[d];
    if (h == 0.0) continue;
    const double* row = &params.output_weights[d * params.vocab_size];
    for (std::size_t v = 0; v < params.vocab_size; ++v) {
      logits[v] += h * row[v];
    }
  }
  return logits;
}

double log_sum_exp(const std::vector<double>& logits) {
  double max_logit = logits[0];
  for (double l : logits) max_logit = std::max(max_logit, l);
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - max_logit);
  return max_logit + std::log(sum);
}

}  // namespace

void ToyLMGrads::add_scaled(const ToyLMGrads& other, double factor) {
  for (std::size_t i = 0; i < token_embeddings.size(); ++i) {
    token_embeddings[i] += factor * other.token_embeddings[i];
  }
  for (std::size_t i = 0; i < context_projection.size(); ++i) {
    context_projection[i] += factor * other.context_projection[i];
  }
  for (std::size_t i = 0; i < output_weights.size(); ++i) {
    output_weights[i] += factor * other.output_weights[i];
  }
}

void ToyLMGrads::scale(double factor) {
  for (double& g : token_embeddings) g *= factor;
  for (double& g : context_projection) g *= factor;
  for (double& g : output_weights) g *= factor;
}

ToyLMParams init_params(std::size_t vocab_size, std::size_t hidden_dim,
                        std::size_t context_dim, uint64_t seed) {
  if (vocab_size == 0 || hidden_dim == 0 || context_dim == 0) {
    throw std::invalid_argument("init_params: dimensions must be > 0");
  }
  ToyLMParams params;
  params.vocab_size = vocab_size;
  params.hidden_dim = hidden_dim;
  params.context_dim = context_dim;
  Rng rng(seed);
  auto fill = [&rng](std::vector<double>& block, std::size_t count) {
    block.resize(count);
    for (double& v : block) v = rng.uniform(-0.1, 0.1);
  };
  fill(params.token_embeddings, vocab_size * hidden_dim);
  fill(params.context_projection, context_dim * hidden_dim);
  fill(params.output_weights, hidden_dim * vocab_size);
  return params;
}

ToyLMGrads zero_grads(const ToyLMParams& params) {
  ToyLMGrads grads;
  grads.token_embeddings.assign(params.token_embeddings.size(), 0.0);
  grads.context_projection.assign(params.context_projection.size(), 0.0);
  grads.output_weights.assign(params.output_weights.size(), 0.0);
  return grads;
}

LogProbSeq forward_logprobs(const ToyLMParams& params,
                            const FeatureVector& context,
                            const std::vector<Token>& tokens) {
  const std::vector<double> projected = project_context(params, context);
  LogProbSeq logprobs;
  logprobs.reserve(tokens.size());

  std::vector<double> embedding_sum(params.hidden_dim, 0.0);
  std::vector<double> hidden(params.hidden_dim);
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    check_token_id(params, tokens[j].id);
    for (std::size_t d = 0; d < params.hidden_dim; ++d) {
      hidden[d] = projected[d] +
                  (j == 0 ? 0.0 : embedding_sum[d] / static_cast<double>(j));
    }
    const std::vector<double> logits = logits_for_hidden(params, hidden);
    const double lse = log_sum_exp(logits);
    logprobs.push_back(logits[tokens[j].id] - lse);

    const double* row =
        &params.token_embeddings[static_cast<std::size_t>(tokens[j].id) *
                                 params.hidden_dim];
    for (std::size_t d = 0; d < params.hidden_dim; ++d) {
      embedding_sum[d] += row[d];
    }
  }
  return logprobs;
}

std::vector<double> log_distribution_at(const ToyLMParams& params,
                                        const FeatureVector& context,
                                        std::span<const int> prefix_ids) {
  const std::vector<double> projected = project_context(params, context);
  std::vector<double> hidden = projected;
  if (!prefix_ids.empty()) {
    std::vector<double> embedding_sum(params.hidden_dim, 0.0);
    for (int id : prefix_ids) {
      check_token_id(params, id);
      const double* row =
          &params.token_embeddings[static_cast<std::size_t>(id) *
                                   params.hidden_dim];
      for (std::size_t d = 0; d < params.hidden_dim; ++d) {
        embedding_sum[d] += row[d];
      }
    }
    for (std::size_t d = 0; d < params.hidden_dim; ++d) {
      hidden[d] += embedding_sum[d] / static_cast<double>(prefix_ids.size());
    }
  }
  std::vector<double> logits = logits_for_hidden(params, hidden);
  const double lse = log_sum_exp(logits);
  for (double& l : logits) l -= lse;
  return logits;
}

ToyLMGrads backward(const ToyLMParams& params, const FeatureVector& context,
                    const std::vector<Token>& tokens,
                    const std::vector<double>& per_token_grad) {
  if (per_token_grad.size() != tokens.size()) {
    throw std::invalid_argument("backward: gradient/token shape mismatch");
  }
  const std::vector<double> projected = project_context(params, context);
  ToyLMGrads grads = zero_grads(params);

  const std::size_t n = tokens.size();
  std::vector<double> embedding_sum(params.hidden_dim, 0.0);
  // d(objective)/d(hidden_j) for every position, needed for the pooled
  // embedding chain below.
  std::vector<std::vector<double>> hidden_grads(
      n, std::vector<double>(params.hidden_dim, 0.0));
  std::vector<double> hidden(params.hidden_dim);
  std::vector<double> probs(params.vocab_size);

  for (std::size_t j = 0; j < n; ++j) {
    check_token_id(params, tokens[j].id);
    for (std::size_t d = 0; d < params.hidden_dim; ++d) {
      hidden[d] = projected[d] +
                  (j == 0 ? 0.0 : embedding_sum[d] / static_cast<double>(j));
    }
    const std::vector<double> logits = logits_for_hidden(params, hidden);
    const double lse = log_sum_exp(logits);
    for (std::size_t v = 0; v < params.vocab_size; ++v) {
      probs[v] = std::exp(logits[v] - lse);
    }

    // dlogprob_j / dlogits = one_hot(token) - softmax, scaled by the
    // incoming per-token gradient.
    const double g = per_token_grad[j];
    const std::size_t target = static_cast<std::size_t>(tokens[j].id);
    for (std::size_t v = 0; v < params.vocab_size; ++v) {
      const double dlogit = g * ((v == target ? 1.0 : 0.0) - probs[v]);
      for (std::size_t d = 0; d < params.hidden_dim; ++d) {
        grads.output_weights[d * params.vocab_size + v] += hidden[d] * dlogit;
        hidden_grads[j][d] += params.output_weights[d * params.vocab_size + v] * dlogit;
      }
    }

    const double* row =
        &params.token_embeddings[target * params.hidden_dim];
    for (std::size_t d = 0; d < params.hidden_dim; ++d) {
      embedding_sum[d] += row[d];
    }
  }

  // Context projection sees every position.
  std::vector<double> projected_grad(params.hidden_dim, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t d = 0; d < params.hidden_dim; ++d) {
      projected_grad[d] += hidden_grads[j][d];
    }
  }
  for (std::size_t c = 0; c < params.context_dim; ++c) {
    const double x = context.values[c];
    for (std::size_t d = 0; d < params.hidden_dim; ++d) {
      grads.context_projection[c * params.hidden_dim + d] +=
          x * projected_grad[d];
    }
  }

  // Token k contributes 1/j of hidden_j for every later position j; walk the
  // suffix sum backwards.
  std::vector<double> suffix(params.hidden_dim, 0.0);
  for (std::size_t k = n; k-- > 1;) {
    for (std::size_t d = 0; d < params.hidden_dim; ++d) {
      suffix[d] += hidden_grads[k][d] / static_cast<double>(k);
    }
    const std::size_t id = static_cast<std::size_t>(tokens[k - 1].id);
    for (std::size_t d = 0; d < params.hidden_dim; ++d) {
      grads.token_embeddings[id * params.hidden_dim + d] += suffix[d];
    }
  }
  return grads;
}

ToyLMParams snapshot_reference(const ToyLMParams& params) { return params; }

void apply_update(ToyLMParams& params, const ToyLMGrads& grads,
                  double learning_rate) {
  for (std::size_t i = 0; i < params.token_embeddings.size(); ++i) {
    params.token_embeddings[i] -= learning_rate * grads.token_embeddings[i];
  }
  for (std::size_t i = 0; i < params.context_projection.size(); ++i) {
    params.context_projection[i] -= learning_rate * grads.context_projection[i];
  }
  for (std::size_t i = 0; i < params.output_weights.size(); ++i) {
    params.output_weights[i] -= learning_rate * grads.output_weights[i];
  }
}

void save_checkpoint(const ToyLMParams& params, uint64_t seed,
                     const std::string& path) {
  nlohmann::json doc;
  doc["format"] = "toy-lm-checkpoint";
  doc["version"] = 1;
  doc["vocab_size"] = params.vocab_size;
  doc["hidden_dim"] = params.hidden_dim;
  doc["context_dim"] = params.context_dim;
  doc["seed"] = seed;
  doc["token_embeddings"] = params.token_embeddings;
  doc["context_projection"] = params.context_projection;
  doc["output_weights"] = params.output_weights;
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("save_checkpoint: cannot open " + path);
  }
  out << doc.dump() << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_checkpoint: cannot open " + path);
  }
  nlohmann::json doc;
  in >> doc;
  if (doc.value("format", "") != "toy-lm-checkpoint" ||
      doc.value("version", 0) != 1) {
    throw std::runtime_error("load_checkpoint: unsupported format in " + path);
  }
  Checkpoint ckpt;
  ckpt.seed = doc.at("seed").get<uint64_t>();
  ckpt.params.vocab_size = doc.at("vocab_size").get<std::size_t>();
  ckpt.params.hidden_dim = doc.at("hidden_dim").get<std::size_t>();
  ckpt.params.context_dim = doc.at("context_dim").get<std::size_t>();
  ckpt.params.token_embeddings =
      doc.at("token_embeddings").get<std::vector<double>>();
  ckpt.params.context_projection =
      doc.at("context_projection").get<std::vector<double>>();
  ckpt.params.output_weights =
      doc.at("output_weights").get<std::vector<double>>();
  const auto expect = [&](std::size_t actual, std::size_t wanted,
                          const char* block) {
    if (actual != wanted) {
      throw std::runtime_error(std::string("load_checkpoint: bad size for ") +
                               block + " in " + path);
    }
  };
  expect(ckpt.params.token_embeddings.size(),
         ckpt.params.vocab_size * ckpt.params.hidden_dim, "token_embeddings");
  expect(ckpt.params.context_projection.size(),
         ckpt.params.context_dim * ckpt.params.hidden_dim,
         "context_projection");
  expect(ckpt.params.output_weights.size(),
         ckpt.params.hidden_dim * ckpt.params.vocab_size, "output_weights");
  return ckpt;
}

}  // namespace aspo
