#include "aspo/embedder.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace aspo {

uint64_t fnv1a64(std::string_view bytes, uint64_t seed) {
  uint64_t hash = 14695981039346656037ull ^ seed;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

HashedBagEmbedder::HashedBagEmbedder(std::size_t dimension, uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension == 0) {
    throw std::invalid_argument("HashedBagEmbedder: dimension must be > 0");
  }
}

std::size_t HashedBagEmbedder::bucket(std::string_view word) const {
  return static_cast<std::size_t>(fnv1a64(word, seed_) % dimension_);
}

FeatureVector HashedBagEmbedder::embed(std::string_view text) const {
  FeatureVector out;
  out.values.assign(dimension_, 0.0);
  bool saw_word = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() &&
           std::isspace(static_cast<unsigned char>(text[pos]))) {
      ++pos;
    }
    const std::size_t start = pos;
    while (pos < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[pos]))) {
      ++pos;
    }
    if (pos > start) {
      out.values[bucket(text.substr(start, pos - start))] += 1.0;
      saw_word = true;
    }
  }
  if (!saw_word) {
    throw std::invalid_argument("HashedBagEmbedder::embed: empty sentence");
  }
  double norm_sq = 0.0;
  for (double v : out.values) norm_sq += v * v;
  const double norm = std::sqrt(norm_sq);
  for (double& v : out.values) v /= norm;
  return out;
}

FeatureVector HashedBagEmbedder::embed_image(
    const FeatureVector& features) const {
  if (features.dimension() != dimension_) {
    throw std::invalid_argument(
        "HashedBagEmbedder::embed_image: dimension mismatch");
  }
  double norm_sq = 0.0;
  for (double v : features.values) norm_sq += v * v;
  if (norm_sq == 0.0) {
    throw std::invalid_argument(
        "HashedBagEmbedder::embed_image: zero feature vector");
  }
  const double norm = std::sqrt(norm_sq);
  FeatureVector out = features;
  for (double& v : out.values) v /= norm;
  return out;
}

}  // namespace aspo
