#include "das/optimizer.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "das/error.hpp"
#include "das/prng.hpp"

namespace das {

std::vector<int> RunConfig::schedule() const {
  return resolutions.empty() ? default_schedule(canvas_size()) : resolutions;
}

AugmentConfig RunConfig::augment_config() const {
  AugmentConfig a;
  a.shift_max = shift_max;
  a.noise_std = noise_std;
  a.batch = batch;
  a.out_size = out_size;
  return a;
}

void RunConfig::validate() const {
  require(steps >= 0, "config: steps must be >= 0");
  require(learning_rate > 0.0, "config: learning_rate must be positive");
  require(out_size >= 1, "config: out_size must be positive");
  require(shift_max >= 0, "config: shift_max must be non-negative");
  require(noise_std >= 0.0, "config: noise_std must be non-negative");
  require(batch >= 1, "config: batch must be >= 1");
  require(init.sigma >= 0.0, "config: init sigma must be non-negative");
  if (!resolutions.empty()) {
    int prev = 0;
    for (int r : resolutions) {
      require(r >= 1, "config: resolutions must be positive");
      require(r > prev, "config: resolutions must be strictly ascending");
      prev = r;
    }
    require(resolutions.back() <= canvas_size(),
            "config: resolutions exceed canvas size " +
                std::to_string(canvas_size()));
  }
}

EnsembleObjective::EnsembleObjective(std::vector<const Encoder*> encoders,
                                     std::vector<TargetSet> targets,
                                     GradMode mode)
    : encoders_(std::move(encoders)),
      targets_(std::move(targets)),
      mode_(mode) {
  require(!encoders_.empty(), "ensemble objective: no encoders");
  require(encoders_.size() == targets_.size(),
          "ensemble objective: one target set per encoder required");
  for (size_t e = 0; e < encoders_.size(); ++e) {
    require(!targets_[e].empty(), "ensemble objective: empty target set");
    for (const Target& t : targets_[e]) {
      require(t.embedding.dim() == encoders_[e]->dim(),
              "ensemble objective: target dim does not match encoder '" +
                  encoders_[e]->name() + "'");
    }
  }
}

double EnsembleObjective::eval(const Image& view, Image* grad) const {
  return ensemble_eval(encoders_, targets_, mode_, view, grad);
}

std::vector<double> EnsembleObjective::component_scores(
    const Image& view) const {
  std::vector<double> scores;
  scores.reserve(encoders_.size());
  for (size_t e = 0; e < encoders_.size(); ++e) {
    scores.push_back(
        encoders_[e]->objective_gradient(view, targets_[e], nullptr));
  }
  return scores;
}

namespace {

void composite_inplace(Image& canvas, const Image* mask, const Image* frozen) {
  if (mask == nullptr) return;
  require(frozen != nullptr, "optimizer: mask given without frozen image");
  require(mask->height == canvas.height && mask->width == canvas.width,
          "optimizer: mask size does not match canvas");
  require(frozen->same_shape(canvas),
          "optimizer: frozen image size does not match canvas");
  for (int y = 0; y < canvas.height; ++y) {
    for (int x = 0; x < canvas.width; ++x) {
      const double m = mask->at(y, x, 0);
      for (int c = 0; c < canvas.channels; ++c) {
        canvas.at(y, x, c) =
            m * canvas.at(y, x, c) + (1.0 - m) * frozen->at(y, x, c);
      }
    }
  }
}

}  // namespace

StepRecord das_step(PyramidImage& p, const RunConfig& cfg,
                    const ViewObjective& objective, const Image* mask,
                    const Image* frozen, int step_index) {
  cfg.validate();
  const int S = cfg.canvas_size();
  require(p.canvas_size == S, "das_step: pyramid canvas does not match config");

  Image canvas = compose(p);
  composite_inplace(canvas, mask, frozen);

  StepRecord rec;
  rec.step = step_index;
  {
    const Image eval_crop = center_crop(canvas, cfg.out_size);
    rec.objective = objective.eval(eval_crop, nullptr);
    rec.encoder_scores = objective.component_scores(eval_crop);
  }

  std::vector<AugmentedView> views;
  if (cfg.augment) {
    const uint64_t shift_stream =
        derive_index(derive_stream(cfg.seed, "shifts"), step_index);
    const uint64_t noise_stream =
        derive_index(derive_stream(cfg.seed, "noise"), step_index);
    views = sample_views(canvas, cfg.augment_config(), shift_stream,
                         noise_stream);
  } else {
    AugmentedView center;
    center.image = center_crop(canvas, cfg.out_size);
    views.push_back(std::move(center));
  }

  std::vector<ViewGrad> view_grads;
  view_grads.reserve(views.size());
  for (const AugmentedView& view : views) {
    Image g;
    objective.eval(view.image, &g);
    view_grads.push_back({std::move(g), view.dx, view.dy});
  }

  Image canvas_grad = scatter_adjoint(view_grads, S);
  if (mask != nullptr) {
    for (int y = 0; y < S; ++y) {
      for (int x = 0; x < S; ++x) {
        const double m = mask->at(y, x, 0);
        for (int c = 0; c < canvas_grad.channels; ++c) {
          canvas_grad.at(y, x, c) *= m;
        }
      }
    }
  }
  rec.grad_norm = l2_norm(canvas_grad);

  std::vector<Image> comp_grads = backprop_to_components(canvas_grad, p);
  rec.component_grad_norms.reserve(comp_grads.size());
  for (size_t k = 0; k < comp_grads.size(); ++k) {
    if (!all_finite(comp_grads[k])) {
      throw Error("das_step: non-finite gradient at step " +
                  std::to_string(step_index) + ", component r=" +
                  std::to_string(p.components[k].width));
    }
    rec.component_grad_norms.push_back(l2_norm(comp_grads[k]));
    for (size_t i = 0; i < comp_grads[k].data.size(); ++i) {
      p.components[k].data[i] += cfg.learning_rate * comp_grads[k].data[i];
    }
  }
  return rec;
}

RunTrace das_optimize(const RunConfig& cfg, const ViewObjective& objective,
                      const Image* mask, const Image* frozen,
                      PyramidImage* pyramid) {
  cfg.validate();
  PyramidImage local;
  PyramidImage& p = pyramid != nullptr ? *pyramid : local;
  if (pyramid == nullptr || p.components.empty()) {
    p = new_pyramid(cfg.schedule(), cfg.canvas_size(), cfg.init, cfg.seed);
  }
  require(p.canvas_size == cfg.canvas_size(),
          "das_optimize: pyramid canvas does not match config");

  RunTrace trace;
  trace.steps.reserve(cfg.steps);
  for (int step = 0; step < cfg.steps; ++step) {
    trace.steps.push_back(das_step(p, cfg, objective, mask, frozen, step));
  }
  trace.final_canvas = compose(p);
  composite_inplace(trace.final_canvas, mask, frozen);
  trace.final_image = center_crop(trace.final_canvas, cfg.out_size);
  return trace;
}

RunTrace das_optimize(const RunConfig& cfg,
                      const std::vector<const Encoder*>& encoders,
                      const std::vector<TargetSet>& targets, const Image* mask,
                      const Image* frozen, PyramidImage* pyramid) {
  EnsembleObjective objective(encoders, targets, cfg.grad_mode);
  return das_optimize(cfg, objective, mask, frozen, pyramid);
}

RunTrace pixel_ascent(const RunConfig& cfg, const ViewObjective& objective,
                      const Image* mask, const Image* frozen) {
  RunConfig flat = cfg;
  flat.resolutions = {cfg.canvas_size()};
  return das_optimize(flat, objective, mask, frozen);
}

RunTrace pixel_ascent(const RunConfig& cfg,
                      const std::vector<const Encoder*>& encoders,
                      const std::vector<TargetSet>& targets, const Image* mask,
                      const Image* frozen) {
  EnsembleObjective objective(encoders, targets, cfg.grad_mode);
  return pixel_ascent(cfg, objective, mask, frozen);
}

}  // namespace das
