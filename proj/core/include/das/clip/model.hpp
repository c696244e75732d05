#pragma once

#include <string>
#include <vector>

#include "das/image.hpp"

namespace das::clip {

struct TextConfig {
  int context = 77;
  int vocab_size = 49408;
  int width = 512;
  int heads = 8;
  int layers = 12;
};

// Architecture manifest stored beside the weights. input_size/patch_size/
// width/layers/heads describe the visual tower; quick_gelu selects the MLP
// activation (x*sigmoid(1.702x) vs exact GELU).
struct ModelConfig {
  std::string architecture;
  int input_size = 224;
  int patch_size = 32;
  int width = 768;
  int layers = 12;
  int heads = 12;
  int embed_dim = 512;
  bool quick_gelu = true;
  double image_mean[3] = {0.48145466, 0.4578275, 0.40821073};
  double image_std[3] = {0.26862954, 0.26130258, 0.27577711};
  bool has_text = false;
  TextConfig text;

  int grid() const { return input_size / patch_size; }
  int visual_tokens() const { return 1 + grid() * grid(); }

  static ModelConfig from_json_file(const std::string& path);
  void validate() const;  // throws Error naming the offending field
};

struct LayerNorm {
  std::vector<double> weight;
  std::vector<double> bias;
};

// weight is [out, in] row-major, matching the torch convention y = x W^T + b.
struct Linear {
  std::vector<double> weight;
  std::vector<double> bias;
  int in = 0;
  int out = 0;
};

struct Block {
  LayerNorm ln1;
  std::vector<double> attn_in_w;  // [3W, W]
  std::vector<double> attn_in_b;  // [3W]
  Linear attn_out;                // W -> W
  LayerNorm ln2;
  Linear mlp_fc;                  // W -> hidden
  Linear mlp_proj;                // hidden -> W
};

// Intermediates kept by the visual forward pass for the exact input-gradient
// backward pass (only what the frozen-weight chain rule actually reads).
// One cache per evaluated view.
struct BlockCache {
  std::vector<double> xhat1;   // ln1 normalized rows [T, W]
  std::vector<double> inv_s1;  // [T]
  std::vector<double> qkv;     // [T, 3W]
  std::vector<double> probs;   // [H, T, T] post-softmax
  std::vector<double> xhat2;
  std::vector<double> inv_s2;
  std::vector<double> fc;      // [T, hidden] pre-activation
};

struct VisualCache {
  std::vector<double> xhat_pre;   // ln_pre cache [T, W]
  std::vector<double> inv_s_pre;  // [T]
  std::vector<BlockCache> blocks;
  std::vector<double> xhat_post;  // ln_post cache, class row only [W]
  double inv_s_post = 0.0;
};

// A CLIP-style two-tower model loaded from a directory holding
// manifest.json and weights.safetensors. All math is double precision; the
// model is immutable after load. Only the visual tower needs gradients.
class ClipModel {
 public:
  static ClipModel load(const std::string& dir);

  const ModelConfig& config() const { return cfg_; }

  // Unnormalized embedding of a channel-normalized input image
  // (input_size x input_size x 3). Fills `cache` when non-null.
  std::vector<double> embed_image(const Image& normalized,
                                  VisualCache* cache) const;

  // dJ/d(normalized image) given dJ/d(unnormalized embedding).
  Image image_backward(const VisualCache& cache,
                       const std::vector<double>& d_embed) const;

  // Unnormalized embedding of a token sequence of length text.context.
  // Pools at the position holding the largest token id (the end marker).
  std::vector<double> embed_tokens(const std::vector<int>& ids) const;

 private:
  ModelConfig cfg_;

  // Visual tower.
  std::vector<double> conv_;  // [width, 3*ps*ps], no bias
  std::vector<double> class_embedding_;
  std::vector<double> visual_positional_;  // [T, W]
  LayerNorm ln_pre_;
  std::vector<Block> visual_blocks_;
  LayerNorm ln_post_;
  std::vector<double> visual_proj_;  // [W, embed_dim]

  // Text tower (optional).
  std::vector<double> token_embedding_;  // [vocab, W]
  std::vector<double> text_positional_;  // [context, W]
  std::vector<Block> text_blocks_;
  LayerNorm ln_final_;
  std::vector<double> text_proj_;  // [W, embed_dim]
};

}  // namespace das::clip
