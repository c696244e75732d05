#pragma once

#include <cstdint>
#include <vector>

#include "das/augment.hpp"
#include "das/encoder.hpp"
#include "das/image.hpp"
#include "das/pyramid.hpp"

namespace das {

// All optimizer and augmentation hyperparameters plus the RNG seed. Defaults
// are the reference configuration: 100 SGD steps at lr 0.2, +/-56 pixel
// jitter, noise std 0.2, 32 views per step, 224 encoder input.
struct RunConfig {
  int steps = 100;
  double learning_rate = 0.2;
  std::vector<int> resolutions;  // empty = powers of two capped at canvas
  int shift_max = 56;
  double noise_std = 0.2;
  int batch = 32;
  int out_size = 224;
  uint64_t seed = 0;
  PyramidInit init;
  GradMode grad_mode = GradMode::RawMean;
  bool augment = true;  // off: one centered, noise-free view per step

  int canvas_size() const { return out_size + 2 * shift_max; }
  std::vector<int> schedule() const;
  AugmentConfig augment_config() const;
  void validate() const;  // throws Error naming the offending field
};

// Scalar objective with gradient for a single augmented view. The optimizer
// ascends, so losses must be negated by the implementation.
class ViewObjective {
 public:
  virtual ~ViewObjective() = default;
  // Returns J(view); when grad is non-null it receives dJ/dview.
  virtual double eval(const Image& view, Image* grad) const = 0;
  // Per-encoder scores for trace records; empty for custom objectives.
  virtual std::vector<double> component_scores(const Image& view) const {
    return {};
  }
};

// The weighted cosine ensemble objective: mean over encoders of
// sum_k w_k cos(f_i(view), u_{i,k}); targets[i] belongs to encoders[i].
class EnsembleObjective : public ViewObjective {
 public:
  EnsembleObjective(std::vector<const Encoder*> encoders,
                    std::vector<TargetSet> targets,
                    GradMode mode = GradMode::RawMean);
  double eval(const Image& view, Image* grad) const override;
  std::vector<double> component_scores(const Image& view) const override;

 private:
  std::vector<const Encoder*> encoders_;
  std::vector<TargetSet> targets_;
  GradMode mode_;
};

struct StepRecord {
  int step = 0;
  double objective = 0.0;  // noise-free center-crop evaluation at step entry
  std::vector<double> encoder_scores;
  double grad_norm = 0.0;  // canvas gradient after mask and mean reduction
  std::vector<double> component_grad_norms;
};

struct RunTrace {
  std::vector<StepRecord> steps;
  Image final_canvas;  // composited canvas after the last update
  Image final_image;   // center crop at out_size
};

// One ascent step: compose, optionally composite with the inpainting mask,
// augment, evaluate per-view gradients, route them back to components, and
// apply P_r += lr * g_r. `mask` and `frozen` are canvas-sized; mask value 1
// marks free pixels. Throws on non-finite gradients, naming step and
// component.
StepRecord das_step(PyramidImage& p, const RunConfig& cfg,
                    const ViewObjective& objective, const Image* mask,
                    const Image* frozen, int step_index);

// Runs cfg.steps steps. When `pyramid` is non-null it supplies the starting
// point and is left at the final state; otherwise components are initialized
// per cfg.init. steps == 0 composes the initial state without updates.
RunTrace das_optimize(const RunConfig& cfg, const ViewObjective& objective,
                      const Image* mask = nullptr, const Image* frozen = nullptr,
                      PyramidImage* pyramid = nullptr);

// Convenience wrapper building the ensemble objective.
RunTrace das_optimize(const RunConfig& cfg,
                      const std::vector<const Encoder*>& encoders,
                      const std::vector<TargetSet>& targets,
                      const Image* mask = nullptr, const Image* frozen = nullptr,
                      PyramidImage* pyramid = nullptr);

// Raw-pixel baseline: the same loop with a single component at the canvas
// resolution (and the same RNG streams, so it is bit-identical to
// das_optimize configured with that schedule).
RunTrace pixel_ascent(const RunConfig& cfg, const ViewObjective& objective,
                      const Image* mask = nullptr,
                      const Image* frozen = nullptr);
RunTrace pixel_ascent(const RunConfig& cfg,
                      const std::vector<const Encoder*>& encoders,
                      const std::vector<TargetSet>& targets,
                      const Image* mask = nullptr,
                      const Image* frozen = nullptr);

}  // namespace das
