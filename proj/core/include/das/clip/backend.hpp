#pragma once

#include <memory>
#include <string>

#include "das/clip/model.hpp"
#include "das/clip/tokenizer.hpp"
#include "das/encoder.hpp"

namespace das::clip {

// Encoder adapter over a weight directory holding manifest.json,
// weights.safetensors and, when a text tower is present, merges.txt. The
// adapter applies per-channel mean/std normalization and nothing else;
// all geometry lives in the augmentation pipeline.
class ClipEncoder : public Encoder {
 public:
  static std::unique_ptr<ClipEncoder> load(const std::string& dir);

  std::string name() const override { return "clip:" + model_.config().architecture; }
  int dim() const override { return model_.config().embed_dim; }
  int input_size() const override { return model_.config().input_size; }

  Embedding embed_image(const Image& image) const override;
  double objective_gradient(const Image& image, const TargetSet& targets,
                            Image* grad) const override;

  bool has_text() const override { return model_.config().has_text; }
  Embedding embed_text(const std::string& prompt) const override;

  const std::string& weight_dir() const { return dir_; }

 private:
  ClipEncoder(ClipModel model, std::string dir)
      : model_(std::move(model)), dir_(std::move(dir)) {}

  ClipModel model_;
  std::string dir_;
  std::unique_ptr<Tokenizer> tokenizer_;
};

}  // namespace das::clip
