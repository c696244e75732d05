#pragma once

#include <memory>
#include <string>
#include <vector>

#include "das/augment.hpp"
#include "das/image.hpp"

namespace das {

// Unit-norm real vector of declared dimension.
struct Embedding {
  std::vector<double> values;

  int dim() const { return static_cast<int>(values.size()); }
};

// Normalizes to unit L2 norm; throws on zero/non-finite norm.
Embedding normalize_embedding(std::vector<double> values);

// dot(v,u)/(|v||u|); u is expected unit-norm already.
double cosine_score(const std::vector<double>& v, const Embedding& u);

struct Target {
  Embedding embedding;
  double weight = 1.0;
  std::string label;
};

// Weighted multi-target objective: sum_k w_k * cos(v, u_k); negative weights
// act as suppression.
using TargetSet = std::vector<Target>;

double weighted_objective(const std::vector<double>& v,
                          const TargetSet& targets);

// Differentiable image encoder. Embedding and gradient calls are pure; the
// encoder is immutable after construction.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual int input_size() const = 0;

  virtual Embedding embed_image(const Image& image) const = 0;

  // J = weighted_objective(f(image), targets). When grad is non-null it
  // receives dJ/dimage at input size.
  virtual double objective_gradient(const Image& image,
                                    const TargetSet& targets,
                                    Image* grad) const = 0;

  virtual bool has_text() const { return false; }
  virtual Embedding embed_text(const std::string& prompt) const;

  // Optional fixed feature stages for Gram-style losses.
  virtual bool has_feature_maps() const { return false; }
  virtual std::vector<Image> feature_maps(const Image& image) const;
  // Routes per-stage gradients dL/dF back to the input.
  virtual Image feature_backward(const Image& image,
                                 const std::vector<Image>& stage_grads) const;
};

enum class GradMode {
  RawMean,         // plain mean of per-model input gradients
  NormalizedMean,  // each model's gradient L2-normalized before the mean
};

struct EnsembleResult {
  std::vector<Image> view_grads;        // dJ/dview per view
  std::vector<double> view_objectives;  // mean-over-encoders J per view
};

// Mean over encoders of J_i(view); when grad is non-null it receives the
// matching mean input gradient (raw or per-model normalized per `mode`).
// targets[i] belongs to encoders[i].
double ensemble_eval(const std::vector<const Encoder*>& encoders,
                     const std::vector<TargetSet>& targets, GradMode mode,
                     const Image& view, Image* grad);

// ensemble_eval mapped over a batch of augmented views.
EnsembleResult ensemble_gradient(const std::vector<const Encoder*>& encoders,
                                 const std::vector<AugmentedView>& views,
                                 const std::vector<TargetSet>& targets,
                                 GradMode mode = GradMode::RawMean);

// Embedding file format: UTF-8 JSON {"dim": int, "data": [floats]}. Values
// are stored unnormalized and normalized on load.
Embedding read_embedding(const std::string& path);
void write_embedding(const std::string& path,
                     const std::vector<double>& values);

}  // namespace das
