#include "das/augment.hpp"

#include <cstdlib>
#include <string>

#include "das/error.hpp"
#include "das/prng.hpp"

namespace das {

void AugmentConfig::validate() const {
  require(out_size >= 1, "augment: out_size must be positive");
  require(shift_max >= 0, "augment: shift_max must be non-negative");
  require(noise_std >= 0.0, "augment: noise_std must be non-negative");
  require(batch >= 1, "augment: batch must be >= 1");
}

Image crop_view(const Image& canvas, int out_size, int dx, int dy) {
  const int s = (canvas.width - out_size) / 2;
  require(canvas.square() && canvas.width >= out_size,
          "crop_view: canvas smaller than crop window");
  require(std::abs(dx) <= s && std::abs(dy) <= s,
          "crop_view: shift out of range");
  const int ox = s + dx;
  const int oy = s + dy;
  Image out(out_size, out_size, canvas.channels);
  for (int y = 0; y < out_size; ++y) {
    for (int x = 0; x < out_size; ++x) {
      for (int c = 0; c < canvas.channels; ++c) {
        out.at(y, x, c) = canvas.at(oy + y, ox + x, c);
      }
    }
  }
  return out;
}

std::vector<AugmentedView> sample_views(const Image& canvas,
                                        const AugmentConfig& cfg,
                                        uint64_t shift_stream,
                                        uint64_t noise_stream) {
  cfg.validate();
  require(canvas.square() && canvas.width == cfg.canvas_size(),
          "sample_views: canvas side must be out_size + 2*shift_max (got " +
              std::to_string(canvas.width) + ", want " +
              std::to_string(cfg.canvas_size()) + ")");
  std::vector<AugmentedView> views;
  views.reserve(cfg.batch);
  const int s = cfg.shift_max;
  for (int v = 0; v < cfg.batch; ++v) {
    SplitMix64 shift_rng(derive_index(shift_stream, v));
    const int dx = static_cast<int>(shift_rng.next_int(-s, s));
    const int dy = static_cast<int>(shift_rng.next_int(-s, s));
    AugmentedView view;
    view.dx = dx;
    view.dy = dy;
    view.noise_seed = derive_index(noise_stream, v);
    view.image = crop_view(canvas, cfg.out_size, dx, dy);
    if (cfg.noise_std > 0.0) {
      SplitMix64 noise_rng(view.noise_seed);
      for (double& p : view.image.data) {
        p += cfg.noise_std * noise_rng.next_gaussian();
      }
    }
    views.push_back(std::move(view));
  }
  return views;
}

Image scatter_adjoint(const std::vector<ViewGrad>& view_grads,
                      int canvas_size) {
  require(!view_grads.empty(), "scatter_adjoint: no view gradients");
  Image canvas_grad(canvas_size, canvas_size, view_grads[0].grad.channels);
  for (const ViewGrad& vg : view_grads) {
    const int out_size = vg.grad.width;
    require(vg.grad.square() && out_size <= canvas_size,
            "scatter_adjoint: gradient larger than canvas");
    const int s = (canvas_size - out_size) / 2;
    require(std::abs(vg.dx) <= s && std::abs(vg.dy) <= s,
            "scatter_adjoint: shift out of range");
    const int ox = s + vg.dx;
    const int oy = s + vg.dy;
    for (int y = 0; y < out_size; ++y) {
      for (int x = 0; x < out_size; ++x) {
        for (int c = 0; c < vg.grad.channels; ++c) {
          canvas_grad.at(oy + y, ox + x, c) += vg.grad.at(y, x, c);
        }
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(view_grads.size());
  for (double& v : canvas_grad.data) v *= inv;
  return canvas_grad;
}

}  // namespace das
