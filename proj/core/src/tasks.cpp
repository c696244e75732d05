#include "das/tasks.hpp"

#include <cmath>
#include <cstdio>

#include "das/error.hpp"

namespace das {

namespace {

// Cosine of an encoder's embedding of `image` (resized to the encoder input
// if needed) against a unit target.
double final_cosine(const Encoder& enc, const Image& image,
                    const Embedding& target) {
  const Image sized = image.width == enc.input_size()
                          ? image
                          : area_resample(image, enc.input_size());
  return cosine_score(enc.embed_image(sized).values, target);
}

}  // namespace

std::vector<TargetSet> targets_from_prompts(
    const std::vector<const Encoder*>& encoders,
    const std::vector<Prompt>& prompts) {
  require(!encoders.empty(), "targets: no encoders");
  require(!prompts.empty(), "targets: no prompts");
  std::vector<TargetSet> out;
  out.reserve(encoders.size());
  for (const Encoder* enc : encoders) {
    require(enc->has_text(),
            "targets: encoder '" + enc->name() + "' has no text tower");
    TargetSet set;
    for (const Prompt& p : prompts) {
      set.push_back({enc->embed_text(p.text), p.weight, p.text});
    }
    out.push_back(std::move(set));
  }
  return out;
}

std::vector<TargetSet> targets_from_embedding(
    const std::vector<const Encoder*>& encoders, const Embedding& embedding,
    double weight, const std::string& label) {
  require(!encoders.empty(), "targets: no encoders");
  std::vector<TargetSet> out;
  out.reserve(encoders.size());
  for (const Encoder* enc : encoders) {
    require(enc->dim() == embedding.dim(),
            "targets: embedding dim " + std::to_string(embedding.dim()) +
                " does not match encoder '" + enc->name() + "' dim " +
                std::to_string(enc->dim()));
    out.push_back({{embedding, weight, label}});
  }
  return out;
}

std::vector<TargetSet> targets_from_image(
    const std::vector<const Encoder*>& encoders, const Image& reference,
    double weight, const std::string& label) {
  require(!encoders.empty(), "targets: no encoders");
  std::vector<TargetSet> out;
  out.reserve(encoders.size());
  for (const Encoder* enc : encoders) {
    const Image sized = reference.width == enc->input_size() &&
                                reference.square()
                            ? reference
                            : area_resample(reference, enc->input_size());
    out.push_back({{enc->embed_image(sized), weight, label}});
  }
  return out;
}

Image source_canvas(const Image& source, const RunConfig& cfg) {
  require(source.channels == 3, "source: expected a 3-channel image");
  require(source.square(), "source: expected a square image");
  Image sized = source.width == cfg.out_size
                    ? source
                    : area_resample(source, cfg.out_size);
  if (cfg.shift_max == 0) return sized;
  return replicate_pad(sized, cfg.shift_max);
}

RunTrace generate(const RunConfig& cfg,
                  const std::vector<const Encoder*>& encoders,
                  const std::vector<TargetSet>& targets) {
  return das_optimize(cfg, encoders, targets);
}

std::string ReconstructResult::ratio() const {
  require(embed_dims > 0, "reconstruct: no embedding dims");
  char buf[48];
  if (input_dims % embed_dims == 0) {
    std::snprintf(buf, sizeof(buf), "%d:1", input_dims / embed_dims);
  } else {
    std::snprintf(buf, sizeof(buf), "%.1f:1",
                  double(input_dims) / double(embed_dims));
  }
  return buf;
}

namespace {

ReconstructResult run_reconstruct(const RunConfig& cfg,
                                  const std::vector<const Encoder*>& encoders,
                                  const std::vector<TargetSet>& targets) {
  ReconstructResult result;
  result.trace = das_optimize(cfg, encoders, targets);
  result.input_dims = cfg.out_size * cfg.out_size * 3;
  for (size_t i = 0; i < encoders.size(); ++i) {
    result.embed_dims += encoders[i]->dim();
    result.final_cosines.push_back(final_cosine(
        *encoders[i], result.trace.final_image, targets[i][0].embedding));
  }
  return result;
}

}  // namespace

ReconstructResult reconstruct(const RunConfig& cfg,
                              const std::vector<const Encoder*>& encoders,
                              const Image& reference) {
  return run_reconstruct(cfg, encoders,
                         targets_from_image(encoders, reference, 1.0,
                                            "reconstruct"));
}

ReconstructResult reconstruct_from_embedding(
    const RunConfig& cfg, const std::vector<const Encoder*>& encoders,
    const Embedding& embedding) {
  return run_reconstruct(
      cfg, encoders,
      targets_from_embedding(encoders, embedding, 1.0, "reconstruct"));
}

RunTrace modify(const RunConfig& cfg,
                const std::vector<const Encoder*>& encoders,
                const std::vector<TargetSet>& targets, const Image& source) {
  PyramidImage pyramid =
      decompose(source_canvas(source, cfg), cfg.schedule());
  return das_optimize(cfg, encoders, targets, nullptr, nullptr, &pyramid);
}

RunTrace style_transfer_embed(const RunConfig& cfg,
                              const std::vector<const Encoder*>& encoders,
                              const Image& content, const Image& style,
                              double style_weight, double content_weight) {
  std::vector<TargetSet> targets =
      targets_from_image(encoders, style, style_weight, "style");
  if (content_weight != 0.0) {
    std::vector<TargetSet> keep =
        targets_from_image(encoders, content, content_weight, "content");
    for (size_t i = 0; i < targets.size(); ++i) {
      targets[i].push_back(std::move(keep[i][0]));
    }
  }
  return modify(cfg, encoders, targets, content);
}

std::vector<double> gram_matrix(const Image& feature) {
  require(!feature.data.empty(), "gram: empty feature map");
  const int c = feature.channels;
  const size_t n = static_cast<size_t>(feature.height) * feature.width;
  std::vector<double> gram(static_cast<size_t>(c) * c, 0.0);
  for (size_t p = 0; p < n; ++p) {
    const double* f = feature.data.data() + p * c;
    for (int a = 0; a < c; ++a) {
      for (int b = 0; b < c; ++b) {
        gram[static_cast<size_t>(a) * c + b] += f[a] * f[b];
      }
    }
  }
  for (double& g : gram) g /= static_cast<double>(n);
  return gram;
}

GramObjective::GramObjective(const Encoder& encoder, const Image& content,
                             const Image& style, GramWeights weights)
    : encoder_(encoder), weights_(std::move(weights)) {
  require(encoder_.has_feature_maps(),
          "gram-style: encoder '" + encoder_.name() + "' has no feature maps");
  const int in = encoder_.input_size();
  const Image content_sized =
      content.width == in && content.square() ? content
                                              : area_resample(content, in);
  const Image style_sized =
      style.width == in && style.square() ? style : area_resample(style, in);
  content_features_ = encoder_.feature_maps(content_sized);
  const std::vector<Image> style_features = encoder_.feature_maps(style_sized);
  require(weights_.style.size() == style_features.size(),
          "gram-style: expected " + std::to_string(style_features.size()) +
              " style weights, got " + std::to_string(weights_.style.size()));
  for (const Image& f : style_features) style_grams_.push_back(gram_matrix(f));
}

double GramObjective::eval(const Image& view, Image* grad) const {
  const std::vector<Image> features = encoder_.feature_maps(view);
  double loss = 0.0;
  std::vector<Image> stage_grads;
  if (grad) {
    for (const Image& f : features) {
      stage_grads.emplace_back(f.height, f.width, f.channels);
    }
  }

  // Content term: squared feature distance at the finer (first) stage.
  if (weights_.content != 0.0) {
    const Image& f = features[0];
    const Image& ref = content_features_[0];
    for (size_t i = 0; i < f.data.size(); ++i) {
      const double d = f.data[i] - ref.data[i];
      loss += weights_.content * d * d;
      if (grad) stage_grads[0].data[i] += -2.0 * weights_.content * d;
    }
  }

  // Style terms: squared Gram distance per stage.
  for (size_t l = 0; l < features.size(); ++l) {
    const double w = weights_.style[l];
    if (w == 0.0) continue;
    const Image& f = features[l];
    const int c = f.channels;
    const size_t n = static_cast<size_t>(f.height) * f.width;
    std::vector<double> diff = gram_matrix(f);
    for (size_t i = 0; i < diff.size(); ++i) {
      diff[i] -= style_grams_[l][i];
      loss += w * diff[i] * diff[i];
    }
    if (grad) {
      // dL/dF[p][a] = (4w/N) * sum_b (G - Gref)[a][b] * F[p][b], negated
      // because the optimizer maximizes.
      const double scale = -4.0 * w / static_cast<double>(n);
      for (size_t p = 0; p < n; ++p) {
        const double* fp = f.data.data() + p * c;
        double* gp = stage_grads[l].data.data() + p * c;
        for (int a = 0; a < c; ++a) {
          double acc = 0.0;
          for (int b = 0; b < c; ++b) {
            acc += diff[static_cast<size_t>(a) * c + b] * fp[b];
          }
          gp[a] += scale * acc;
        }
      }
    }
  }

  if (grad) *grad = encoder_.feature_backward(view, stage_grads);
  return -loss;
}

RunTrace style_transfer_gram(const RunConfig& cfg, const Encoder& encoder,
                             const Image& content, const Image& style,
                             const GramWeights& weights) {
  GramObjective objective(encoder, content, style, weights);
  PyramidImage pyramid =
      decompose(source_canvas(content, cfg), cfg.schedule());
  return das_optimize(cfg, objective, nullptr, nullptr, &pyramid);
}

Image expand_mask_to_canvas(const Image& mask, const RunConfig& cfg) {
  require(mask.channels == 1, "mask: expected a single-channel image");
  require(mask.square() && mask.width == cfg.out_size,
          "mask: expected " + std::to_string(cfg.out_size) + "x" +
              std::to_string(cfg.out_size));
  const int canvas = cfg.canvas_size();
  const int pad = cfg.shift_max;
  Image out(canvas, canvas, 1, 0.0);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      out.at(y + pad, x + pad, 0) = mask.at(y, x, 0);
    }
  }
  return out;
}

RunTrace inpaint(const RunConfig& cfg,
                 const std::vector<const Encoder*>& encoders,
                 const std::vector<TargetSet>& targets, const Image& source,
                 const Image& mask) {
  const int canvas = cfg.canvas_size();
  require(mask.channels == 1, "inpaint: mask must be single-channel");
  require(mask.square() && mask.width == canvas,
          "inpaint: mask is " + std::to_string(mask.width) + "x" +
              std::to_string(mask.height) + ", canvas is " +
              std::to_string(canvas));
  for (double v : mask.data) {
    require(v >= 0.0 && v <= 1.0, "inpaint: mask values must be in [0,1]");
  }
  const Image frozen = source_canvas(source, cfg);
  return das_optimize(cfg, encoders, targets, &mask, &frozen);
}

}  // namespace das
