#pragma once

#include <string>
#include <vector>

#include "das/encoder.hpp"
#include "das/image.hpp"
#include "das/optimizer.hpp"

namespace das {

struct Prompt {
  std::string text;
  double weight = 1.0;
};

// Per-encoder target sets: each encoder embeds the prompts with its own text
// tower. Throws when an encoder has no text tower, naming it.
std::vector<TargetSet> targets_from_prompts(
    const std::vector<const Encoder*>& encoders,
    const std::vector<Prompt>& prompts);

// One shared embedding replicated per encoder; dimensions are checked.
std::vector<TargetSet> targets_from_embedding(
    const std::vector<const Encoder*>& encoders, const Embedding& embedding,
    double weight = 1.0, const std::string& label = "embedding");

// Per-encoder targets u_i = f_i(reference resized to the encoder input).
std::vector<TargetSet> targets_from_image(
    const std::vector<const Encoder*>& encoders, const Image& reference,
    double weight = 1.0, const std::string& label = "image");

// Resizes a square 3-channel source to out_size and replicate-pads it by
// shift_max, so the center crop of the canvas recovers the source exactly.
Image source_canvas(const Image& source, const RunConfig& cfg);

// Text/embedding guided synthesis from a fresh init.
RunTrace generate(const RunConfig& cfg,
                  const std::vector<const Encoder*>& encoders,
                  const std::vector<TargetSet>& targets);

struct ReconstructResult {
  RunTrace trace;
  std::vector<double> final_cosines;  // per encoder, final image vs target
  int input_dims = 0;                 // out_size^2 * 3
  int embed_dims = 0;                 // summed over encoders
  std::string ratio() const;          // e.g. "294:1"
};

// Recovers an image from its embedding(s): target u_i = f_i(reference),
// fresh init, and a compression-ratio report.
ReconstructResult reconstruct(const RunConfig& cfg,
                              const std::vector<const Encoder*>& encoders,
                              const Image& reference);

// Same optimization path with a stored embedding as the target.
ReconstructResult reconstruct_from_embedding(
    const RunConfig& cfg, const std::vector<const Encoder*>& encoders,
    const Embedding& embedding);

// Ascends from init = decompose(source) toward the targets; zero steps
// returns the decompose/compose round trip of the source.
RunTrace modify(const RunConfig& cfg,
                const std::vector<const Encoder*>& encoders,
                const std::vector<TargetSet>& targets, const Image& source);

// Embedding-space style transfer: start at the content image and ascend
// toward the style image's embedding, optionally keeping a weighted content
// target (weight 0 drops it).
RunTrace style_transfer_embed(const RunConfig& cfg,
                              const std::vector<const Encoder*>& encoders,
                              const Image& content, const Image& style,
                              double style_weight = 1.0,
                              double content_weight = 0.0);

// Channel Gram matrix over spatial positions, row-major C x C:
//   G[a][b] = (1/(H*W)) * sum_{y,x} F(y,x,a) * F(y,x,b).
std::vector<double> gram_matrix(const Image& feature);

struct GramWeights {
  double content = 1.0;        // finer stage, squared feature distance
  std::vector<double> style;   // one weight per feature stage
};

// Gatys-style objective over an encoder's fixed feature stages. The
// optimizer ascends, so eval returns the negated loss.
class GramObjective : public ViewObjective {
 public:
  GramObjective(const Encoder& encoder, const Image& content,
                const Image& style, GramWeights weights);

  double eval(const Image& view, Image* grad) const override;
  // Non-negative; zero iff feature maps match the references at all stages.
  double loss(const Image& view) const { return -eval(view, nullptr); }

 private:
  const Encoder& encoder_;
  GramWeights weights_;
  std::vector<Image> content_features_;
  std::vector<std::vector<double>> style_grams_;
};

// Classic style transfer driven by the Gram objective, starting from the
// content image. The pixel baseline is the same call with cfg.resolutions
// set to {canvas_size}.
RunTrace style_transfer_gram(const RunConfig& cfg, const Encoder& encoder,
                             const Image& content, const Image& style,
                             const GramWeights& weights);

// Zero-pads a single-channel out_size mask into the canvas frame; the
// padding ring is frozen.
Image expand_mask_to_canvas(const Image& mask, const RunConfig& cfg);

// Masked synthesis: every step composites
//   I' = mask * compose(P) + (1 - mask) * source_canvas
// in pixel space before augmentation, so frozen pixels never change. mask is
// canvas-sized, single-channel, values in [0,1] (1 = free).
RunTrace inpaint(const RunConfig& cfg,
                 const std::vector<const Encoder*>& encoders,
                 const std::vector<TargetSet>& targets, const Image& source,
                 const Image& mask);

}  // namespace das
