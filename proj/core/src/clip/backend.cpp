#include "das/clip/backend.hpp"

#include <cmath>

#include "das/error.hpp"

namespace das::clip {

namespace {

Image normalize_channels(const Image& image, const ModelConfig& cfg) {
  Image out = image;
  const size_t pixels = static_cast<size_t>(image.height) * image.width;
  for (size_t p = 0; p < pixels; ++p) {
    for (int c = 0; c < 3; ++c) {
      out.data[p * 3 + c] =
          (image.data[p * 3 + c] - cfg.image_mean[c]) / cfg.image_std[c];
    }
  }
  return out;
}

}  // namespace

std::unique_ptr<ClipEncoder> ClipEncoder::load(const std::string& dir) {
  ClipModel model = ClipModel::load(dir);
  std::unique_ptr<ClipEncoder> enc(new ClipEncoder(std::move(model), dir));
  if (enc->model_.config().has_text) {
    enc->tokenizer_ =
        std::make_unique<Tokenizer>(Tokenizer::load(dir + "/merges.txt"));
    require(enc->tokenizer_->vocab_size() ==
                enc->model_.config().text.vocab_size,
            "clip: tokenizer vocabulary (" +
                std::to_string(enc->tokenizer_->vocab_size()) +
                ") does not match manifest vocab_size (" +
                std::to_string(enc->model_.config().text.vocab_size) + ")");
  }
  return enc;
}

Embedding ClipEncoder::embed_image(const Image& image) const {
  return normalize_embedding(
      model_.embed_image(normalize_channels(image, model_.config()), nullptr));
}

double ClipEncoder::objective_gradient(const Image& image,
                                       const TargetSet& targets,
                                       Image* grad) const {
  const ModelConfig& cfg = model_.config();
  const Image normalized = normalize_channels(image, cfg);

  VisualCache cache;
  const std::vector<double> e =
      model_.embed_image(normalized, grad ? &cache : nullptr);

  double norm_sq = 0.0;
  for (double v : e) norm_sq += v * v;
  require(norm_sq > 0.0, "clip: zero-norm embedding");
  const double norm = std::sqrt(norm_sq);

  std::vector<double> unit(e.size());
  for (size_t i = 0; i < e.size(); ++i) unit[i] = e[i] / norm;

  // J = sum_k w_k cos(f(I), u_k) = t . unit with t = sum_k w_k u_k.
  std::vector<double> t(e.size(), 0.0);
  require(!targets.empty(), "clip: empty target set");
  for (const Target& target : targets) {
    require(target.embedding.dim() == static_cast<int>(e.size()),
            "clip: target dim mismatch");
    for (size_t i = 0; i < t.size(); ++i) {
      t[i] += target.weight * target.embedding.values[i];
    }
  }
  double J = 0.0;
  for (size_t i = 0; i < t.size(); ++i) J += t[i] * unit[i];

  if (grad) {
    // d(t . e/|e|)/de = (t - J * unit) / |e|.
    std::vector<double> d_embed(e.size());
    for (size_t i = 0; i < e.size(); ++i) {
      d_embed[i] = (t[i] - J * unit[i]) / norm;
    }
    *grad = model_.image_backward(cache, d_embed);
    for (size_t p = 0; p < grad->data.size(); p += 3) {
      for (int c = 0; c < 3; ++c) grad->data[p + c] /= cfg.image_std[c];
    }
  }
  return J;
}

Embedding ClipEncoder::embed_text(const std::string& prompt) const {
  require(has_text(), "clip: model has no text tower");
  const std::vector<int> ids =
      tokenizer_->encode(prompt, model_.config().text.context);
  return normalize_embedding(model_.embed_tokens(ids));
}

}  // namespace das::clip
