#include "das/toy_encoder.hpp"

#include <cmath>
#include <cstdio>

#include "das/error.hpp"
#include "das/prng.hpp"

namespace das {

namespace {

std::string hex64(uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

ToyEncoder::ToyEncoder(int input_size, uint64_t seed)
    : input_size_(input_size), seed_(seed) {
  require(input_size_ >= 1, "toy encoder: input_size must be positive");
  name_ = seed == kDefaultSeed ? "toy" : "toy:" + hex64(seed);
  weights_.resize(static_cast<size_t>(kDim) * kInputDim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(kInputDim));
  SplitMix64 g(seed_);
  for (double& w : weights_) w = scale * g.next_gaussian();
}

std::vector<double> ToyEncoder::raw_features(const Image& image) const {
  require(image.square() && image.width == input_size_ && image.channels == 3,
          "toy encoder: expected " + std::to_string(input_size_) + "x" +
              std::to_string(input_size_) + "x3 input");
  require(all_finite(image), "toy encoder: non-finite input values");
  const Image grid = area_resample(image, kGridSize);
  std::vector<double> h(kDim);
  for (int i = 0; i < kDim; ++i) {
    const double* row = &weights_[static_cast<size_t>(i) * kInputDim];
    double z = 0.0;
    for (int j = 0; j < kInputDim; ++j) z += row[j] * grid.data[j];
    h[i] = std::tanh(z);
  }
  return h;
}

Embedding ToyEncoder::embed_image(const Image& image) const {
  return normalize_embedding(raw_features(image));
}

double ToyEncoder::objective_gradient(const Image& image,
                                      const TargetSet& targets,
                                      Image* grad) const {
  require(!targets.empty(), "toy encoder: empty target set");
  const Image grid = area_resample(image, kGridSize);
  std::vector<double> h(kDim);
  for (int i = 0; i < kDim; ++i) {
    const double* row = &weights_[static_cast<size_t>(i) * kInputDim];
    double z = 0.0;
    for (int j = 0; j < kInputDim; ++j) z += row[j] * grid.data[j];
    h[i] = std::tanh(z);
  }
  double norm_sq = 0.0;
  for (double v : h) norm_sq += v * v;
  const double norm = std::sqrt(norm_sq);
  require(norm > 0.0, "toy encoder: zero-norm features");

  // J = sum_k w_k * (h . u_k) / |h| with unit targets u_k.
  std::vector<double> target_sum(kDim, 0.0);
  for (const Target& t : targets) {
    require(t.embedding.dim() == kDim, "toy encoder: target dim mismatch");
    for (int i = 0; i < kDim; ++i) {
      target_sum[i] += t.weight * t.embedding.values[i];
    }
  }
  double dot = 0.0;
  for (int i = 0; i < kDim; ++i) dot += h[i] * target_sum[i];
  const double objective = dot / norm;

  if (grad != nullptr) {
    // dJ/dh = (g - (v.g) v) / |h|, v = h/|h|; then tanh and W transpose.
    std::vector<double> dh(kDim);
    for (int i = 0; i < kDim; ++i) {
      const double v_i = h[i] / norm;
      dh[i] = (target_sum[i] - objective * v_i) / norm;
    }
    Image grid_grad(kGridSize, kGridSize, 3);
    for (int i = 0; i < kDim; ++i) {
      const double dz = dh[i] * (1.0 - h[i] * h[i]);
      if (dz == 0.0) continue;
      const double* row = &weights_[static_cast<size_t>(i) * kInputDim];
      for (int j = 0; j < kInputDim; ++j) {
        grid_grad.data[j] += dz * row[j];
      }
    }
    *grad = area_resample_adjoint(grid_grad, input_size_);
  }
  return objective;
}

std::vector<Image> ToyEncoder::feature_maps(const Image& image) const {
  require(image.square() && image.width == input_size_ && image.channels == 3,
          "toy encoder: wrong input size for feature maps");
  std::vector<Image> stages;
  stages.push_back(area_resample(image, kGridSize));
  stages.push_back(area_resample(stages[0], kPooledSize));
  return stages;
}

Image ToyEncoder::feature_backward(const Image& image,
                                   const std::vector<Image>& stage_grads) const {
  require(stage_grads.size() == 2, "toy encoder: expected two stage gradients");
  require(stage_grads[0].width == kGridSize &&
              stage_grads[1].width == kPooledSize,
          "toy encoder: stage gradient shape mismatch");
  // Both stages are linear in the input, so the input is not consulted.
  (void)image;
  Image fine = stage_grads[0];
  const Image pooled_back = area_resample_adjoint(stage_grads[1], kGridSize);
  for (size_t i = 0; i < fine.data.size(); ++i) {
    fine.data[i] += pooled_back.data[i];
  }
  return area_resample_adjoint(fine, input_size_);
}

}  // namespace das
