#include "das/image.hpp"

#include <algorithm>
#include <cmath>

#include "das/error.hpp"

namespace das {

bool all_finite(const Image& img) {
  for (double v : img.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double l2_norm(const Image& img) {
  double s = 0.0;
  for (double v : img.data) s += v * v;
  return std::sqrt(s);
}

Image luminance(const Image& img) {
  Image out(img.height, img.width, 1);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double s = 0.0;
      for (int c = 0; c < img.channels; ++c) s += img.at(y, x, c);
      out.at(y, x, 0) = s / img.channels;
    }
  }
  return out;
}

Image center_crop(const Image& img, int size) {
  require(size >= 1 && size <= img.width && size <= img.height,
          "center_crop: size out of range");
  const int oy = (img.height - size) / 2;
  const int ox = (img.width - size) / 2;
  Image out(size, size, img.channels);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        out.at(y, x, c) = img.at(oy + y, ox + x, c);
      }
    }
  }
  return out;
}

Image replicate_pad(const Image& img, int pad) {
  require(pad >= 0, "replicate_pad: negative pad");
  if (pad == 0) return img;
  Image out(img.height + 2 * pad, img.width + 2 * pad, img.channels);
  for (int y = 0; y < out.height; ++y) {
    const int sy = std::clamp(y - pad, 0, img.height - 1);
    for (int x = 0; x < out.width; ++x) {
      const int sx = std::clamp(x - pad, 0, img.width - 1);
      for (int c = 0; c < img.channels; ++c) {
        out.at(y, x, c) = img.at(sy, sx, c);
      }
    }
  }
  return out;
}

namespace {

struct AreaTap {
  int index;
  double weight;  // normalized; weights of one output cell sum to 1
};

// Per-axis overlap weights for area resampling in_size -> out_size.
std::vector<std::vector<AreaTap>> area_taps(int in_size, int out_size) {
  std::vector<std::vector<AreaTap>> taps(out_size);
  const double scale = static_cast<double>(in_size) / out_size;
  for (int k = 0; k < out_size; ++k) {
    const double lo = k * scale;
    const double hi = (k + 1) * scale;
    const int j0 = static_cast<int>(std::floor(lo));
    const int j1 = std::min(static_cast<int>(std::ceil(hi)), in_size);
    for (int j = j0; j < j1; ++j) {
      const double overlap =
          std::min<double>(hi, j + 1) - std::max<double>(lo, j);
      if (overlap > 0.0) {
        taps[k].push_back({j, overlap / scale});
      }
    }
  }
  return taps;
}

}  // namespace

Image area_resample(const Image& src, int out_size) {
  require(src.square(), "area_resample: source must be square");
  require(out_size >= 1, "area_resample: out_size must be positive");
  if (out_size == src.width) return src;
  const auto taps = area_taps(src.width, out_size);
  Image out(out_size, out_size, src.channels);
  for (int y = 0; y < out_size; ++y) {
    for (const AreaTap& ty : taps[y]) {
      for (int x = 0; x < out_size; ++x) {
        for (const AreaTap& tx : taps[x]) {
          const double w = ty.weight * tx.weight;
          for (int c = 0; c < src.channels; ++c) {
            out.at(y, x, c) += w * src.at(ty.index, tx.index, c);
          }
        }
      }
    }
  }
  return out;
}

Image area_resample_adjoint(const Image& grad_out, int in_size) {
  require(grad_out.square(), "area_resample_adjoint: gradient must be square");
  require(in_size >= 1, "area_resample_adjoint: in_size must be positive");
  if (in_size == grad_out.width) return grad_out;
  const auto taps = area_taps(in_size, grad_out.width);
  Image out(in_size, in_size, grad_out.channels);
  for (int y = 0; y < grad_out.height; ++y) {
    for (const AreaTap& ty : taps[y]) {
      for (int x = 0; x < grad_out.width; ++x) {
        for (const AreaTap& tx : taps[x]) {
          const double w = ty.weight * tx.weight;
          for (int c = 0; c < grad_out.channels; ++c) {
            out.at(ty.index, tx.index, c) += w * grad_out.at(y, x, c);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace das
