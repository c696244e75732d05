#pragma once

#include <cstdint>
#include <vector>

#include "das/image.hpp"

namespace das {

// Random x-y shifts realized as crops from an oversized canvas, plus per-view
// pixel noise. Canvas side must equal out_size + 2*shift_max so every crop
// window stays inside the canvas and no padding is ever needed.
struct AugmentConfig {
  int shift_max = 56;
  double noise_std = 0.2;
  int batch = 32;
  int out_size = 224;

  int canvas_size() const { return out_size + 2 * shift_max; }
  void validate() const;
};

struct AugmentedView {
  Image image;  // out_size x out_size, noise already added, not clamped
  int dx = 0;
  int dy = 0;
  uint64_t noise_seed = 0;  // substream identifier for this view's noise
};

struct ViewGrad {
  Image grad;  // out_size x out_size
  int dx = 0;
  int dy = 0;
};

// Crop of the out_size window at center offset (dx, dy); |dx|,|dy| <= s.
Image crop_view(const Image& canvas, int out_size, int dx, int dy);

// Draws cfg.batch views. Shifts are uniform integers in [-s, s] from
// per-view substreams of shift_stream; noise is i.i.d. Gaussian per view from
// substreams of noise_stream. Noise is a smoothing perturbation for the
// encoder, so views are not clamped back to [0,1].
std::vector<AugmentedView> sample_views(const Image& canvas,
                                        const AugmentConfig& cfg,
                                        uint64_t shift_stream,
                                        uint64_t noise_stream);

// Adjoint of the crop: scatters each per-view gradient back to its window,
// sums, and divides by the number of views (mean reduction). Noise addition
// has identity adjoint, so it does not appear here.
Image scatter_adjoint(const std::vector<ViewGrad>& view_grads,
                      int canvas_size);

}  // namespace das
