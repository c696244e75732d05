#pragma once

#include <cstddef>
#include <vector>

namespace das {

// Dense H x W x C grid of doubles, row-major (y, x, c). Composed images keep
// channel values in (0,1); intermediate grids (gradients, pyramid components,
// noisy views) are unbounded.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int height_, int width_, int channels_, double fill = 0.0)
      : height(height_),
        width(width_),
        channels(channels_),
        data(static_cast<size_t>(height_) * width_ * channels_, fill) {}

  double& at(int y, int x, int c) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  size_t size() const { return data.size(); }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
  bool square() const { return width == height; }
};

bool all_finite(const Image& img);
double l2_norm(const Image& img);

// Mean over channels, yielding a single-channel grid.
Image luminance(const Image& img);

// Extracts the centered size x size window. Requires size <= min(w, h).
Image center_crop(const Image& img, int size);

// Grows the grid by `pad` on every side, replicating edge values.
Image replicate_pad(const Image& img, int pad);

// Exact box-overlap area resampling of a square grid to out_size x out_size.
// Each output cell averages input cells weighted by geometric overlap; the
// identity when sizes match. Linear in the input.
Image area_resample(const Image& src, int out_size);

// Adjoint (transpose) of area_resample for gradient routing.
Image area_resample_adjoint(const Image& grad_out, int in_size);

}  // namespace das
