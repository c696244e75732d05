#pragma once

#include <cstdint>
#include <vector>

#include "das/image.hpp"

namespace das {

// Multi-resolution parameterization of an image: a set of unbounded r x r x 3
// component grids at strictly increasing resolutions. The displayed image is
//   I = 1/2 + 1/2 * tanh(sum_r upsample(P_r))
// on a canvas_size x canvas_size canvas, so pixel values stay in (0,1) for
// any finite components.
struct PyramidImage {
  int canvas_size = 0;
  std::vector<Image> components;  // ascending resolution, square, 3 channels

  std::vector<int> resolutions() const {
    std::vector<int> r;
    r.reserve(components.size());
    for (const Image& c : components) r.push_back(c.width);
    return r;
  }
};

struct PyramidInit {
  enum class Kind { Zeros, Gaussian };
  Kind kind = Kind::Gaussian;
  double sigma = 0.01;
};

// Powers of two up to canvas_size, plus canvas_size itself.
std::vector<int> default_schedule(int canvas_size);

// Dense schedule 1..canvas_size (every integer resolution).
std::vector<int> dense_schedule(int canvas_size);

// Allocates components per the init policy. Gaussian init draws from the
// "init" stream of `seed`, one substream per component, filling row-major.
PyramidImage new_pyramid(const std::vector<int>& resolutions, int canvas_size,
                         const PyramidInit& init, uint64_t seed);

// Bilinear resampling of a square grid with half-pixel centers:
//   x_src = (x_dst + 0.5) * in/out - 0.5, clamped to [0, in-1],
// linear weights from the fractional part. Linear in the input.
Image resize_bilinear(const Image& src, int out_size);

// Adjoint (transpose) of resize_bilinear: routes a gradient at out-size back
// to in_size x in_size.
Image resize_adjoint(const Image& grad_out, int in_size);

// Pre-tanh sum of upsampled components; linear in the components.
Image compose_linear(const PyramidImage& p);

// Full composition onto (0,1) pixels.
Image compose(const PyramidImage& p);

// Inverse of compose up to clamping: pixels are clamped to
// [clamp_eps, 1-clamp_eps], mapped through atanh, and the resulting field is
// assigned to components coarse-to-fine by area-mean downsampling of the
// residual. Exact round trip when the finest resolution equals the canvas.
PyramidImage decompose(const Image& image, const std::vector<int>& resolutions,
                       double clamp_eps = 1.0 / 512.0);

// Chain rule from a canvas-sized upstream gradient dJ/dI to per-component
// gradients: tanh factor first, then the resize adjoint per component.
std::vector<Image> backprop_to_components(const Image& dJ_dI,
                                          const PyramidImage& p);

}  // namespace das
