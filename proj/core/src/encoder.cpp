#include "das/encoder.hpp"

#include <cmath>
#include <fstream>

#include "das/error.hpp"
#include "json.hpp"

namespace das {

Embedding normalize_embedding(std::vector<double> values) {
  require(!values.empty(), "embedding: empty vector");
  double norm_sq = 0.0;
  for (double v : values) {
    require(std::isfinite(v), "embedding: non-finite value");
    norm_sq += v * v;
  }
  const double norm = std::sqrt(norm_sq);
  require(norm > 0.0, "embedding: zero norm");
  for (double& v : values) v /= norm;
  return Embedding{std::move(values)};
}

double cosine_score(const std::vector<double>& v, const Embedding& u) {
  require(static_cast<int>(v.size()) == u.dim(),
          "cosine_score: dimension mismatch");
  double dot = 0.0, v_sq = 0.0, u_sq = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    dot += v[i] * u.values[i];
    v_sq += v[i] * v[i];
    u_sq += u.values[i] * u.values[i];
  }
  require(v_sq > 0.0, "cosine_score: zero-norm vector");
  return dot / (std::sqrt(v_sq) * std::sqrt(u_sq));
}

double weighted_objective(const std::vector<double>& v,
                          const TargetSet& targets) {
  require(!targets.empty(), "weighted_objective: empty target set");
  double j = 0.0;
  for (const Target& t : targets) {
    j += t.weight * cosine_score(v, t.embedding);
  }
  return j;
}

Embedding Encoder::embed_text(const std::string&) const {
  throw Error("encoder '" + name() + "' has no text tower");
}

std::vector<Image> Encoder::feature_maps(const Image&) const {
  throw Error("encoder '" + name() + "' does not expose feature maps");
}

Image Encoder::feature_backward(const Image&,
                                const std::vector<Image>&) const {
  throw Error("encoder '" + name() + "' does not expose feature maps");
}

double ensemble_eval(const std::vector<const Encoder*>& encoders,
                     const std::vector<TargetSet>& targets, GradMode mode,
                     const Image& view, Image* grad) {
  require(!encoders.empty(), "ensemble: no encoders");
  require(encoders.size() == targets.size(),
          "ensemble: one target set per encoder required");
  const double inv_n = 1.0 / static_cast<double>(encoders.size());
  double mean_obj = 0.0;
  if (grad != nullptr) {
    *grad = Image(view.height, view.width, view.channels);
  }
  for (size_t e = 0; e < encoders.size(); ++e) {
    Image g;
    const double j = encoders[e]->objective_gradient(
        view, targets[e], grad != nullptr ? &g : nullptr);
    mean_obj += j * inv_n;
    if (grad != nullptr) {
      double scale = inv_n;
      if (mode == GradMode::NormalizedMean) {
        const double norm = l2_norm(g);
        scale = norm > 0.0 ? inv_n / norm : 0.0;
      }
      for (size_t i = 0; i < g.data.size(); ++i) {
        grad->data[i] += scale * g.data[i];
      }
    }
  }
  return mean_obj;
}

EnsembleResult ensemble_gradient(const std::vector<const Encoder*>& encoders,
                                 const std::vector<AugmentedView>& views,
                                 const std::vector<TargetSet>& targets,
                                 GradMode mode) {
  EnsembleResult result;
  result.view_grads.reserve(views.size());
  result.view_objectives.reserve(views.size());
  for (const AugmentedView& view : views) {
    Image grad;
    result.view_objectives.push_back(
        ensemble_eval(encoders, targets, mode, view.image, &grad));
    result.view_grads.push_back(std::move(grad));
  }
  return result;
}

Embedding read_embedding(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "embedding: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("embedding: malformed JSON in " + path + ": " + e.what());
  }
  require(j.contains("dim") && j.contains("data"),
          "embedding: missing 'dim' or 'data' in " + path);
  const int dim = j["dim"].get<int>();
  std::vector<double> values = j["data"].get<std::vector<double>>();
  require(static_cast<int>(values.size()) == dim,
          "embedding: 'data' length does not match 'dim' in " + path);
  return normalize_embedding(std::move(values));
}

void write_embedding(const std::string& path,
                     const std::vector<double>& values) {
  nlohmann::json j;
  j["dim"] = values.size();
  j["data"] = values;
  std::ofstream out(path);
  require(out.good(), "embedding: cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace das
