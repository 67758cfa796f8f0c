#include "aspo/data_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "aspo/rng.hpp"

namespace aspo {

namespace {

constexpr double kBetaMin = 1e-4;
constexpr double kBetaMax = 0.02;

struct Topic {
  const char* name;
  std::vector<const char*> nouns;
  std::vector<const char*> adjectives;
  std::vector<const char*> enders;
};

const std::vector<Topic>& topics() {
  static const std::vector<Topic> kTopics = {
      {"cat",
       {"cat", "kitten", "whiskers", "tail"},
       {"sleek", "striped", "quiet"},
       {"purrs.", "naps.", "pounces!"}},
      {"harbor",
       {"harbor", "boat", "gull", "pier"},
       {"foggy", "salty", "calm"},
       {"drifts.", "docks.", "sways!"}},
      {"garden",
       {"garden", "rose", "bee", "trellis"},
       {"lush", "sunny", "fragrant"},
       {"blooms.", "grows.", "hums!"}},
      {"train",
       {"train", "rail", "whistle", "carriage"},
       {"swift", "iron", "crowded"},
       {"rolls.", "brakes.", "clatters!"}},
      {"desert",
       {"desert", "dune", "lizard", "cactus"},
       {"arid", "golden", "vast"},
       {"shimmers.", "bakes.", "waits!"}},
      {"market",
       {"market", "stall", "vendor", "crate"},
       {"busy", "loud", "colorful"},
       {"bustles.", "trades.", "opens!"}},
  };
  return kTopics;
}

const Topic& noise_pool() {
  static const Topic kNoise = {"noise",
                               {"blur", "smudge", "echo", "glare"},
                               {"vague", "odd", "random", "stray"},
                               {"wobbles.", "flickers.", "fades!"}};
  return kNoise;
}

std::string topic_signature(const Topic& topic) {
  std::string signature;
  for (const char* w : topic.nouns) {
    signature += w;
    signature += ' ';
  }
  for (const char* w : topic.adjectives) {
    signature += w;
    signature += ' ';
  }
  for (const char* w : topic.enders) {
    signature += w;
    signature += ' ';
  }
  if (!signature.empty()) signature.pop_back();
  return signature;
}

// "the <adjective> <noun> <ender>" with seeded choices.
void append_sentence_ids(const Topic& topic, const Vocabulary& vocab, Rng& rng,
                         std::vector<int>& ids) {
  ids.push_back(vocab.id_of("the"));
  ids.push_back(vocab.id_of(
      topic.adjectives[rng.below(topic.adjectives.size())]));
  ids.push_back(vocab.id_of(topic.nouns[rng.below(topic.nouns.size())]));
  ids.push_back(vocab.id_of(topic.enders[rng.below(topic.enders.size())]));
}

FeatureVector jittered_topic_features(const Topic& topic,
                                      const Embedder& embedder, Rng& rng,
                                      double jitter) {
  FeatureVector features = embedder.embed(topic_signature(topic));
  for (double& v : features.values) v += jitter * rng.gaussian();
  return features;
}

nlohmann::json tokens_to_json(const std::vector<Token>& tokens) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Token& t : tokens) {
    arr.push_back({{"id", t.id},
                   {"start", t.char_start},
                   {"end", t.char_end}});
  }
  return arr;
}

std::vector<Token> tokens_from_json(const nlohmann::json& arr) {
  std::vector<Token> tokens;
  tokens.reserve(arr.size());
  for (const auto& item : arr) {
    Token t;
    t.id = item.at("id").get<int>();
    t.char_start = item.at("start").get<std::size_t>();
    t.char_end = item.at("end").get<std::size_t>();
    tokens.push_back(t);
  }
  return tokens;
}

}  // namespace

double alpha_bar(int noise_step) {
  if (noise_step < 0 || noise_step > kMaxNoiseStep) {
    throw std::invalid_argument("alpha_bar: noise step outside [0, 1000]");
  }
  double product = 1.0;
  for (int k = 1; k <= noise_step; ++k) {
    const double beta =
        kBetaMin + (kBetaMax - kBetaMin) * static_cast<double>(k - 1) /
                       static_cast<double>(kMaxNoiseStep - 1);
    product *= 1.0 - beta;
  }
  return product;
}

FeatureVector perturb_features(const FeatureVector& features,
                               const NoiseConfig& cfg) {
  const double retained = alpha_bar(cfg.noise_step);
  if (cfg.noise_step == 0) return features;
  const double signal = std::sqrt(retained);
  const double noise = std::sqrt(1.0 - retained);
  Rng rng(cfg.seed);
  FeatureVector out;
  out.values.reserve(features.values.size());
  for (double v : features.values) {
    out.values.push_back(signal * v + noise * rng.gaussian());
  }
  return out;
}

const std::string& Vocabulary::word(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= words.size()) {
    throw std::invalid_argument("Vocabulary::word: id outside vocabulary");
  }
  return words[static_cast<std::size_t>(id)];
}

int Vocabulary::id_of(std::string_view word) const {
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i] == word) return static_cast<int>(i);
  }
  return -1;
}

const Vocabulary& synthetic_vocabulary() {
  static const Vocabulary kVocab = [] {
    Vocabulary vocab;
    vocab.words.push_back("the");
    auto add_pool = [&vocab](const Topic& topic) {
      for (const char* w : topic.nouns) vocab.words.push_back(w);
      for (const char* w : topic.adjectives) vocab.words.push_back(w);
      for (const char* w : topic.enders) vocab.words.push_back(w);
    };
    for (const Topic& topic : topics()) add_pool(topic);
    add_pool(noise_pool());
    return vocab;
  }();
  return kVocab;
}

TokenizedText detokenize(const std::vector<int>& ids, const Vocabulary& vocab) {
  TokenizedText out;
  out.tokens.reserve(ids.size());
  for (int id : ids) {
    const std::string& word = vocab.word(id);
    if (!out.text.empty()) out.text += ' ';
    Token token;
    token.id = id;
    token.char_start = out.text.size();
    out.text += word;
    token.char_end = out.text.size();
    out.tokens.push_back(token);
  }
  return out;
}

std::vector<int> decode_ids(const ToyLMParams& params,
                            const FeatureVector& context,
                            const DecodeConfig& cfg) {
  std::vector<int> ids;
  Rng rng(cfg.seed);
  for (int step = 0; step < cfg.max_tokens; ++step) {
    const std::vector<double> log_dist =
        log_distribution_at(params, context, ids);
    int next = 0;
    if (cfg.temperature <= 0.0) {
      for (std::size_t v = 1; v < log_dist.size(); ++v) {
        if (log_dist[v] > log_dist[next]) next = static_cast<int>(v);
      }
    } else {
      // Softmax sample at the given temperature.
      std::vector<double> probs(log_dist.size());
      double max_scaled = log_dist[0] / cfg.temperature;
      for (std::size_t v = 0; v < log_dist.size(); ++v) {
        probs[v] = log_dist[v] / cfg.temperature;
        max_scaled = std::max(max_scaled, probs[v]);
      }
      double total = 0.0;
      for (double& p : probs) {
        p = std::exp(p - max_scaled);
        total += p;
      }
      double mark = rng.uniform() * total;
      next = static_cast<int>(probs.size()) - 1;
      for (std::size_t v = 0; v < probs.size(); ++v) {
        mark -= probs[v];
        if (mark < 0.0) {
          next = static_cast<int>(v);
          break;
        }
      }
    }
    ids.push_back(next);
  }
  return ids;
}

std::optional<PreferencePair> generate_pair(const std::string& pair_id,
                                            const std::string& prompt_text,
                                            const FeatureVector& features,
                                            const ToyLMParams& params,
                                            const Vocabulary& vocab,
                                            const NoiseConfig& noise,
                                            const DecodeConfig& decode) {
  const std::vector<int> chosen_ids = decode_ids(params, features, decode);
  const FeatureVector noised = perturb_features(features, noise);
  const std::vector<int> rejected_ids = decode_ids(params, noised, decode);
  if (chosen_ids.empty() || rejected_ids.empty()) {
    throw std::runtime_error("generate_pair: decoding produced no tokens");
  }
  PreferencePair pair;
  pair.pair_id = pair_id;
  pair.prompt_text = prompt_text;
  pair.image_features = features;
  pair.chosen = detokenize(chosen_ids, vocab);
  pair.rejected = detokenize(rejected_ids, vocab);
  if (pair.chosen.text == pair.rejected.text) return std::nullopt;
  return pair;
}

FilterResult filter_identical(std::vector<PreferencePair> pairs) {
  FilterResult result;
  result.kept.reserve(pairs.size());
  for (PreferencePair& pair : pairs) {
    if (pair.chosen.text == pair.rejected.text) {
      ++result.removed;
    } else {
      result.kept.push_back(std::move(pair));
    }
  }
  return result;
}

std::vector<PreferencePair> generate_template_corpus(const CorpusConfig& cfg,
                                                     const Embedder& embedder) {
  const Vocabulary& vocab = synthetic_vocabulary();
  Rng rng(cfg.seed);
  std::vector<PreferencePair> pairs;
  pairs.reserve(cfg.num_pairs);
  const std::size_t num_topics = topics().size();
  for (std::size_t n = 0; n < cfg.num_pairs; ++n) {
    const std::size_t topic_idx = rng.below(num_topics);
    std::size_t wrong_idx = rng.below(num_topics - 1);
    if (wrong_idx >= topic_idx) ++wrong_idx;
    const Topic& topic = topics()[topic_idx];
    const Topic& wrong = topics()[wrong_idx];

    const std::size_t span = cfg.max_factual_sentences -
                             cfg.min_factual_sentences + 1;
    const std::size_t factual = cfg.min_factual_sentences + rng.below(span);
    const std::size_t noisy_at = rng.below(factual + 1);

    auto build_ids = [&](const Topic& pool) {
      std::vector<int> ids;
      for (std::size_t s = 0; s <= factual; ++s) {
        if (s == noisy_at) {
          append_sentence_ids(noise_pool(), vocab, rng, ids);
        } else {
          append_sentence_ids(pool, vocab, rng, ids);
        }
      }
      return ids;
    };
    const std::vector<int> chosen_ids = build_ids(topic);
    const std::vector<int> rejected_ids = build_ids(wrong);

    PreferencePair pair;
    pair.pair_id = "tmpl-" + std::to_string(cfg.seed) + "-" + std::to_string(n);
    pair.prompt_text = std::string("describe the ") + topic.name + " scene";
    pair.image_features =
        jittered_topic_features(topic, embedder, rng, cfg.feature_jitter);
    pair.chosen = detokenize(chosen_ids, vocab);
    pair.rejected = detokenize(rejected_ids, vocab);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

PromptSet template_prompts(std::size_t count, uint64_t seed,
                           const Embedder& embedder, double feature_jitter) {
  PromptSet set;
  Rng rng(seed);
  for (std::size_t n = 0; n < count; ++n) {
    const Topic& topic = topics()[rng.below(topics().size())];
    set.prompts.push_back(std::string("describe the ") + topic.name +
                          " scene");
    set.features.push_back(
        jittered_topic_features(topic, embedder, rng, feature_jitter));
  }
  return set;
}

std::string pair_to_json_line(const PreferencePair& pair) {
  nlohmann::json doc;
  doc["pair_id"] = pair.pair_id;
  doc["prompt_text"] = pair.prompt_text;
  doc["image_features"] = pair.image_features.values;
  doc["chosen_text"] = pair.chosen.text;
  doc["chosen_tokens"] = tokens_to_json(pair.chosen.tokens);
  doc["rejected_text"] = pair.rejected.text;
  doc["rejected_tokens"] = tokens_to_json(pair.rejected.tokens);
  return doc.dump();
}

PreferencePair pair_from_json_line(const std::string& line) {
  const nlohmann::json doc = nlohmann::json::parse(line);
  PreferencePair pair;
  pair.pair_id = doc.at("pair_id").get<std::string>();
  pair.prompt_text = doc.at("prompt_text").get<std::string>();
  pair.image_features.values =
      doc.at("image_features").get<std::vector<double>>();
  pair.chosen.text = doc.at("chosen_text").get<std::string>();
  pair.chosen.tokens = tokens_from_json(doc.at("chosen_tokens"));
  pair.rejected.text = doc.at("rejected_text").get<std::string>();
  pair.rejected.tokens = tokens_from_json(doc.at("rejected_tokens"));
  return pair;
}

void write_pairs_jsonl(const std::string& path,
                       const std::vector<PreferencePair>& pairs) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_pairs_jsonl: cannot open " + path);
  }
  for (const PreferencePair& pair : pairs) {
    out << pair_to_json_line(pair) << "\n";
  }
}

std::vector<PreferencePair> read_pairs_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("read_pairs_jsonl: cannot open " + path);
  }
  std::vector<PreferencePair> pairs;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    try {
      pairs.push_back(pair_from_json_line(line));
    } catch (const std::exception& e) {
      std::ostringstream message;
      message << "read_pairs_jsonl: malformed line " << line_number << " in "
              << path << ": " << e.what();
      throw std::runtime_error(message.str());
    }
  }
  return pairs;
}

}  // namespace aspo
