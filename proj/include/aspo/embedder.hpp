#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace aspo {

// Fixed-dimension feature vector; stands in for the image/text embedding
// space. A zero vector is not a valid similarity input.
struct FeatureVector {
  std::vector<double> values;

  std::size_t dimension() const { return values.size(); }
  bool operator==(const FeatureVector&) const = default;
};

// Seeded FNV-1a, platform-stable. Feature bucketing and file checksums both
// go through this.
uint64_t fnv1a64(std::string_view bytes, uint64_t seed = 0);

// Pluggable text/image scorer. Implementations must be stateless or
// internally synchronized; both methods are called concurrently.
class Embedder {
 public:
  virtual ~Embedder() = default;

  // Deterministic embedding of a sentence. Throws std::invalid_argument on
  // empty text.
  virtual FeatureVector embed(std::string_view text) const = 0;

  // Projects raw image features into the scorer's space.
  virtual FeatureVector embed_image(const FeatureVector& features) const = 0;

  virtual std::size_t dimension() const = 0;
};

// Bundled toy scorer: each whitespace-delimited token hashes to a coordinate
// bucket, counts accumulate, and the result is L2-normalized. Image features
// pass through an L2 normalization so both sides live on the unit sphere.
class HashedBagEmbedder final : public Embedder {
 public:
  HashedBagEmbedder(std::size_t dimension, uint64_t seed);

  FeatureVector embed(std::string_view text) const override;
  FeatureVector embed_image(const FeatureVector& features) const override;
  std::size_t dimension() const override { return dimension_; }

  // Bucket index a single token hashes to.
  std::size_t bucket(std::string_view word) const;

 private:
  std::size_t dimension_;
  uint64_t seed_;
};

}  // namespace aspo
