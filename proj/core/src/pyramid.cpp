#include "das/pyramid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "das/error.hpp"
#include "das/prng.hpp"

namespace das {

namespace {

void validate_resolutions(const std::vector<int>& resolutions,
                          int canvas_size) {
  require(canvas_size >= 1, "pyramid: canvas_size must be positive");
  require(!resolutions.empty(), "pyramid: resolution list is empty");
  int prev = 0;
  for (int r : resolutions) {
    require(r >= 1, "pyramid: resolutions must be positive");
    require(r > prev, "pyramid: resolutions must be strictly ascending");
    prev = r;
  }
  require(resolutions.back() <= canvas_size,
          "pyramid: resolution " + std::to_string(resolutions.back()) +
              " exceeds canvas_size " + std::to_string(canvas_size));
}

struct BilinearTap {
  int i0, i1;
  double w0, w1;
};

std::vector<BilinearTap> bilinear_taps(int in_size, int out_size) {
  std::vector<BilinearTap> taps(out_size);
  const double scale = static_cast<double>(in_size) / out_size;
  for (int k = 0; k < out_size; ++k) {
    double s = (k + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in_size - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const double frac = s - i0;
    taps[k] = {i0, std::min(i0 + 1, in_size - 1), 1.0 - frac, frac};
  }
  return taps;
}

}  // namespace

std::vector<int> default_schedule(int canvas_size) {
  require(canvas_size >= 1, "default_schedule: canvas_size must be positive");
  std::vector<int> rs;
  for (int r = 1; r <= canvas_size; r *= 2) rs.push_back(r);
  if (rs.back() != canvas_size) rs.push_back(canvas_size);
  return rs;
}

std::vector<int> dense_schedule(int canvas_size) {
  require(canvas_size >= 1, "dense_schedule: canvas_size must be positive");
  std::vector<int> rs(canvas_size);
  for (int r = 1; r <= canvas_size; ++r) rs[r - 1] = r;
  return rs;
}

PyramidImage new_pyramid(const std::vector<int>& resolutions, int canvas_size,
                         const PyramidInit& init, uint64_t seed) {
  validate_resolutions(resolutions, canvas_size);
  PyramidImage p;
  p.canvas_size = canvas_size;
  p.components.reserve(resolutions.size());
  const uint64_t init_stream = derive_stream(seed, "init");
  for (size_t k = 0; k < resolutions.size(); ++k) {
    Image comp(resolutions[k], resolutions[k], 3);
    if (init.kind == PyramidInit::Kind::Gaussian) {
      SplitMix64 g(derive_index(init_stream, k));
      for (double& v : comp.data) v = init.sigma * g.next_gaussian();
    }
    p.components.push_back(std::move(comp));
  }
  return p;
}

Image resize_bilinear(const Image& src, int out_size) {
  require(src.square(), "resize_bilinear: source must be square");
  require(out_size >= 1, "resize_bilinear: out_size must be positive");
  const auto taps = bilinear_taps(src.width, out_size);
  Image out(out_size, out_size, src.channels);
  for (int y = 0; y < out_size; ++y) {
    const BilinearTap& ty = taps[y];
    for (int x = 0; x < out_size; ++x) {
      const BilinearTap& tx = taps[x];
      for (int c = 0; c < src.channels; ++c) {
        out.at(y, x, c) = ty.w0 * (tx.w0 * src.at(ty.i0, tx.i0, c) +
                                   tx.w1 * src.at(ty.i0, tx.i1, c)) +
                          ty.w1 * (tx.w0 * src.at(ty.i1, tx.i0, c) +
                                   tx.w1 * src.at(ty.i1, tx.i1, c));
      }
    }
  }
  return out;
}

Image resize_adjoint(const Image& grad_out, int in_size) {
  require(grad_out.square(), "resize_adjoint: gradient must be square");
  require(in_size >= 1, "resize_adjoint: in_size must be positive");
  const auto taps = bilinear_taps(in_size, grad_out.width);
  Image out(in_size, in_size, grad_out.channels);
  for (int y = 0; y < grad_out.height; ++y) {
    const BilinearTap& ty = taps[y];
    for (int x = 0; x < grad_out.width; ++x) {
      const BilinearTap& tx = taps[x];
      for (int c = 0; c < grad_out.channels; ++c) {
        const double g = grad_out.at(y, x, c);
        out.at(ty.i0, tx.i0, c) += ty.w0 * tx.w0 * g;
        out.at(ty.i0, tx.i1, c) += ty.w0 * tx.w1 * g;
        out.at(ty.i1, tx.i0, c) += ty.w1 * tx.w0 * g;
        out.at(ty.i1, tx.i1, c) += ty.w1 * tx.w1 * g;
      }
    }
  }
  return out;
}

Image compose_linear(const PyramidImage& p) {
  validate_resolutions(p.resolutions(), p.canvas_size);
  Image sum(p.canvas_size, p.canvas_size, 3);
  for (const Image& comp : p.components) {
    require(all_finite(comp), "compose: non-finite component values");
    const Image up = resize_bilinear(comp, p.canvas_size);
    for (size_t i = 0; i < sum.data.size(); ++i) sum.data[i] += up.data[i];
  }
  return sum;
}

Image compose(const PyramidImage& p) {
  Image img = compose_linear(p);
  for (double& v : img.data) v = 0.5 + 0.5 * std::tanh(v);
  return img;
}

PyramidImage decompose(const Image& image, const std::vector<int>& resolutions,
                       double clamp_eps) {
  require(image.square() && image.channels == 3,
          "decompose: image must be square with 3 channels");
  require(clamp_eps > 0.0 && clamp_eps < 0.5,
          "decompose: clamp_eps must lie in (0, 0.5)");
  validate_resolutions(resolutions, image.width);
  require(resolutions.back() == image.width,
          "decompose: finest resolution must equal the canvas size");
  for (double v : image.data) {
    require(v >= 0.0 && v <= 1.0, "decompose: pixel values outside [0,1]");
  }

  // Target pre-tanh field.
  Image target(image.height, image.width, 3);
  for (size_t i = 0; i < image.data.size(); ++i) {
    const double v = std::clamp(image.data[i], clamp_eps, 1.0 - clamp_eps);
    target.data[i] = std::atanh(2.0 * v - 1.0);
  }

  PyramidImage p;
  p.canvas_size = image.width;
  Image partial(image.height, image.width, 3);  // compose_linear so far
  for (int r : resolutions) {
    Image residual(image.height, image.width, 3);
    for (size_t i = 0; i < residual.data.size(); ++i) {
      residual.data[i] = target.data[i] - partial.data[i];
    }
    Image comp = area_resample(residual, r);
    const Image up = resize_bilinear(comp, p.canvas_size);
    for (size_t i = 0; i < partial.data.size(); ++i) {
      partial.data[i] += up.data[i];
    }
    p.components.push_back(std::move(comp));
  }
  return p;
}

std::vector<Image> backprop_to_components(const Image& dJ_dI,
                                          const PyramidImage& p) {
  require(dJ_dI.height == p.canvas_size && dJ_dI.width == p.canvas_size &&
              dJ_dI.channels == 3,
          "backprop_to_components: gradient shape mismatch with canvas");
  const Image sum = compose_linear(p);
  Image g(p.canvas_size, p.canvas_size, 3);
  for (size_t i = 0; i < g.data.size(); ++i) {
    const double t = std::tanh(sum.data[i]);
    g.data[i] = dJ_dI.data[i] * 0.5 * (1.0 - t * t);
  }
  std::vector<Image> grads;
  grads.reserve(p.components.size());
  for (const Image& comp : p.components) {
    grads.push_back(resize_adjoint(g, comp.width));
  }
  return grads;
}

}  // namespace das
