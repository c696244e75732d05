#pragma once

#include <cstdint>

#include "das/encoder.hpp"

namespace das {

// Fully specified built-in reference encoder. Deterministic pipeline:
//   1. area-mean downsample to 32 x 32 x 3
//   2. flatten to 3072, row-major (y, x, channel)
//   3. multiply by fixed W in R^{512 x 3072}, entries N(0, 1/3072) drawn from
//      a splitmix64 stream seeded with `seed` (default 0x0DA5), Box-Muller
//      pairs, filling W row-major
//   4. elementwise tanh
//   5. L2-normalize
// The tanh keeps inversion from being a linear least-squares problem. Feature
// maps for Gram losses: the 32x32x3 stage plus an 8x8x3 area-pooled stage.
class ToyEncoder : public Encoder {
 public:
  static constexpr int kDim = 512;
  static constexpr int kGridSize = 32;
  static constexpr int kPooledSize = 8;
  static constexpr int kInputDim = kGridSize * kGridSize * 3;
  static constexpr uint64_t kDefaultSeed = 0x0DA5;

  explicit ToyEncoder(int input_size = 224, uint64_t seed = kDefaultSeed);

  std::string name() const override { return name_; }
  int dim() const override { return kDim; }
  int input_size() const override { return input_size_; }
  uint64_t seed() const { return seed_; }

  Embedding embed_image(const Image& image) const override;
  double objective_gradient(const Image& image, const TargetSet& targets,
                            Image* grad) const override;

  bool has_feature_maps() const override { return true; }
  std::vector<Image> feature_maps(const Image& image) const override;
  Image feature_backward(const Image& image,
                         const std::vector<Image>& stage_grads) const override;

 private:
  std::vector<double> raw_features(const Image& image) const;  // tanh(W x)

  int input_size_;
  uint64_t seed_;
  std::string name_;
  std::vector<double> weights_;  // kDim x kInputDim, row-major
};

}  // namespace das
