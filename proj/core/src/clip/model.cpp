#include "das/clip/model.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "das/clip/safetensors.hpp"
#include "das/error.hpp"
#include "json.hpp"

namespace das::clip {

namespace {

constexpr double kLayerNormEps = 1e-5;

// Row-major C = alpha * op(A) op(B) + beta * C.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
          const double* a, int lda, const double* b, int ldb, double beta,
          double* c, int ldc) {
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b,
              ldb, beta, c, ldc);
}

// y = x W^T + b for x [rows, in].
void linear_forward(const Linear& lin, const double* x, int rows, double* y) {
  gemm(false, true, rows, lin.out, lin.in, 1.0, x, lin.in, lin.weight.data(),
       lin.in, 0.0, y, lin.out);
  for (int r = 0; r < rows; ++r) {
    for (int o = 0; o < lin.out; ++o) y[r * lin.out + o] += lin.bias[o];
  }
}

// dx = dy W.
void linear_backward(const Linear& lin, const double* dy, int rows,
                     double* dx) {
  gemm(false, false, rows, lin.in, lin.out, 1.0, dy, lin.out,
       lin.weight.data(), lin.in, 0.0, dx, lin.in);
}

void layernorm_forward(const LayerNorm& ln, const double* x, int rows, int dim,
                       double* y, double* xhat, double* inv_s) {
  for (int r = 0; r < rows; ++r) {
    const double* row = x + static_cast<size_t>(r) * dim;
    double mean = 0.0;
    for (int i = 0; i < dim; ++i) mean += row[i];
    mean /= dim;
    double var = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double d = row[i] - mean;
      var += d * d;
    }
    var /= dim;
    const double is = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_s[r] = is;
    double* yrow = y + static_cast<size_t>(r) * dim;
    double* hrow = xhat + static_cast<size_t>(r) * dim;
    for (int i = 0; i < dim; ++i) {
      hrow[i] = (row[i] - mean) * is;
      yrow[i] = hrow[i] * ln.weight[i] + ln.bias[i];
    }
  }
}

// dx = inv_s * (dxhat - mean(dxhat) - xhat * mean(dxhat .* xhat)),
// dxhat = dy .* weight. Writes dx.
void layernorm_backward(const LayerNorm& ln, const double* dy,
                        const double* xhat, const double* inv_s, int rows,
                        int dim, double* dx) {
  std::vector<double> dxhat(dim);
  for (int r = 0; r < rows; ++r) {
    const double* dyr = dy + static_cast<size_t>(r) * dim;
    const double* hr = xhat + static_cast<size_t>(r) * dim;
    double mean_dh = 0.0;
    double mean_dh_h = 0.0;
    for (int i = 0; i < dim; ++i) {
      dxhat[i] = dyr[i] * ln.weight[i];
      mean_dh += dxhat[i];
      mean_dh_h += dxhat[i] * hr[i];
    }
    mean_dh /= dim;
    mean_dh_h /= dim;
    double* dxr = dx + static_cast<size_t>(r) * dim;
    for (int i = 0; i < dim; ++i) {
      dxr[i] = inv_s[r] * (dxhat[i] - mean_dh - hr[i] * mean_dh_h);
    }
  }
}

double gelu(double x, bool quick) {
  if (quick) return x / (1.0 + std::exp(-1.702 * x));
  return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
}

double gelu_grad(double x, bool quick) {
  if (quick) {
    const double s = 1.0 / (1.0 + std::exp(-1.702 * x));
    return s + x * 1.702 * s * (1.0 - s);
  }
  const double cdf = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
  return cdf + x * pdf;
}

void softmax_rows(double* m, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    double* row = m + static_cast<size_t>(r) * cols;
    double mx = row[0];
    for (int i = 1; i < cols; ++i) mx = std::max(mx, row[i]);
    double sum = 0.0;
    for (int i = 0; i < cols; ++i) {
      row[i] = std::exp(row[i] - mx);
      sum += row[i];
    }
    for (int i = 0; i < cols; ++i) row[i] /= sum;
  }
}

void copy_head(const std::vector<double>& qkv, int T, int W, int offset,
               int head, int head_dim, double* out) {
  for (int t = 0; t < T; ++t) {
    const double* src = qkv.data() + static_cast<size_t>(t) * 3 * W + offset +
                        head * head_dim;
    std::copy(src, src + head_dim, out + static_cast<size_t>(t) * head_dim);
  }
}

void scatter_head(const double* grad, int T, int W, int offset, int head,
                  int head_dim, std::vector<double>& dqkv) {
  for (int t = 0; t < T; ++t) {
    double* dst = dqkv.data() + static_cast<size_t>(t) * 3 * W + offset +
                  head * head_dim;
    const double* src = grad + static_cast<size_t>(t) * head_dim;
    for (int i = 0; i < head_dim; ++i) dst[i] = src[i];
  }
}

// x_out may alias x_in. When cache is non-null the intermediates needed by
// block_backward are kept.
void block_forward(const Block& b, int T, int W, int H, bool causal,
                   bool quick, const std::vector<double>& x_in,
                   std::vector<double>& x_out, BlockCache* cache) {
  const int D = W / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(D));
  const int hidden = b.mlp_fc.out;
  const size_t tw = static_cast<size_t>(T) * W;

  std::vector<double> x1(tw), inv_s1(T), xhat1(tw);
  layernorm_forward(b.ln1, x_in.data(), T, W, x1.data(), xhat1.data(),
                    inv_s1.data());

  std::vector<double> qkv(static_cast<size_t>(T) * 3 * W);
  gemm(false, true, T, 3 * W, W, 1.0, x1.data(), W, b.attn_in_w.data(), W,
       0.0, qkv.data(), 3 * W);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < 3 * W; ++i) {
      qkv[static_cast<size_t>(t) * 3 * W + i] += b.attn_in_b[i];
    }
  }

  std::vector<double> probs(static_cast<size_t>(H) * T * T);
  std::vector<double> ctx(tw);
  std::vector<double> qh(static_cast<size_t>(T) * D),
      kh(static_cast<size_t>(T) * D), vh(static_cast<size_t>(T) * D),
      scores(static_cast<size_t>(T) * T), ctxh(static_cast<size_t>(T) * D);
  for (int h = 0; h < H; ++h) {
    copy_head(qkv, T, W, 0, h, D, qh.data());
    copy_head(qkv, T, W, W, h, D, kh.data());
    copy_head(qkv, T, W, 2 * W, h, D, vh.data());
    gemm(false, true, T, T, D, scale, qh.data(), D, kh.data(), D, 0.0,
         scores.data(), T);
    if (causal) {
      for (int i = 0; i < T; ++i) {
        for (int j = i + 1; j < T; ++j) scores[static_cast<size_t>(i) * T + j] = -1e30;
      }
    }
    softmax_rows(scores.data(), T, T);
    std::copy(scores.begin(), scores.end(),
              probs.begin() + static_cast<size_t>(h) * T * T);
    gemm(false, false, T, D, T, 1.0, scores.data(), T, vh.data(), D, 0.0,
         ctxh.data(), D);
    for (int t = 0; t < T; ++t) {
      std::copy(ctxh.begin() + static_cast<size_t>(t) * D,
                ctxh.begin() + static_cast<size_t>(t + 1) * D,
                ctx.begin() + static_cast<size_t>(t) * W + h * D);
    }
  }

  std::vector<double> attn(tw);
  linear_forward(b.attn_out, ctx.data(), T, attn.data());

  std::vector<double> x_mid(tw);
  for (size_t i = 0; i < tw; ++i) x_mid[i] = x_in[i] + attn[i];

  std::vector<double> x2(tw), inv_s2(T), xhat2(tw);
  layernorm_forward(b.ln2, x_mid.data(), T, W, x2.data(), xhat2.data(),
                    inv_s2.data());

  std::vector<double> fc(static_cast<size_t>(T) * hidden);
  linear_forward(b.mlp_fc, x2.data(), T, fc.data());
  std::vector<double> act(fc.size());
  for (size_t i = 0; i < fc.size(); ++i) act[i] = gelu(fc[i], quick);

  std::vector<double> mlp(tw);
  linear_forward(b.mlp_proj, act.data(), T, mlp.data());

  x_out.resize(tw);
  for (size_t i = 0; i < tw; ++i) x_out[i] = x_mid[i] + mlp[i];

  if (cache) {
    cache->xhat1 = std::move(xhat1);
    cache->inv_s1 = std::move(inv_s1);
    cache->qkv = std::move(qkv);
    cache->probs = std::move(probs);
    cache->xhat2 = std::move(xhat2);
    cache->inv_s2 = std::move(inv_s2);
    cache->fc = std::move(fc);
  }
}

// dx_out -> dx_in through one block using the cached forward state.
void block_backward(const Block& b, int T, int W, int H, bool quick,
                    const BlockCache& cache, const std::vector<double>& dx_out,
                    std::vector<double>& dx_in) {
  const int D = W / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(D));
  const int hidden = b.mlp_fc.out;
  const size_t tw = static_cast<size_t>(T) * W;

  // MLP path.
  std::vector<double> da(static_cast<size_t>(T) * hidden);
  linear_backward(b.mlp_proj, dx_out.data(), T, da.data());
  for (size_t i = 0; i < da.size(); ++i) {
    da[i] *= gelu_grad(cache.fc[i], quick);
  }
  std::vector<double> dx2(tw);
  linear_backward(b.mlp_fc, da.data(), T, dx2.data());

  std::vector<double> dx_mid(tw);
  layernorm_backward(b.ln2, dx2.data(), cache.xhat2.data(),
                     cache.inv_s2.data(), T, W, dx_mid.data());
  for (size_t i = 0; i < tw; ++i) dx_mid[i] += dx_out[i];

  // Attention path.
  std::vector<double> dctx(tw);
  linear_backward(b.attn_out, dx_mid.data(), T, dctx.data());

  std::vector<double> dqkv(static_cast<size_t>(T) * 3 * W, 0.0);
  std::vector<double> qh(static_cast<size_t>(T) * D),
      kh(static_cast<size_t>(T) * D), vh(static_cast<size_t>(T) * D),
      dctxh(static_cast<size_t>(T) * D), dp(static_cast<size_t>(T) * T),
      dscores(static_cast<size_t>(T) * T), dqh(static_cast<size_t>(T) * D),
      dkh(static_cast<size_t>(T) * D), dvh(static_cast<size_t>(T) * D);
  for (int h = 0; h < H; ++h) {
    copy_head(cache.qkv, T, W, 0, h, D, qh.data());
    copy_head(cache.qkv, T, W, W, h, D, kh.data());
    copy_head(cache.qkv, T, W, 2 * W, h, D, vh.data());
    for (int t = 0; t < T; ++t) {
      std::copy(dctx.begin() + static_cast<size_t>(t) * W + h * D,
                dctx.begin() + static_cast<size_t>(t) * W + h * D + D,
                dctxh.begin() + static_cast<size_t>(t) * D);
    }
    const double* probs = cache.probs.data() + static_cast<size_t>(h) * T * T;

    gemm(false, true, T, T, D, 1.0, dctxh.data(), D, vh.data(), D, 0.0,
         dp.data(), T);
    gemm(true, false, T, D, T, 1.0, probs, T, dctxh.data(), D, 0.0, dvh.data(),
         D);

    for (int i = 0; i < T; ++i) {
      const double* prow = probs + static_cast<size_t>(i) * T;
      const double* dprow = dp.data() + static_cast<size_t>(i) * T;
      double dot = 0.0;
      for (int j = 0; j < T; ++j) dot += prow[j] * dprow[j];
      double* dsrow = dscores.data() + static_cast<size_t>(i) * T;
      for (int j = 0; j < T; ++j) dsrow[j] = prow[j] * (dprow[j] - dot);
    }

    gemm(false, false, T, D, T, scale, dscores.data(), T, kh.data(), D, 0.0,
         dqh.data(), D);
    gemm(true, false, T, D, T, scale, dscores.data(), T, qh.data(), D, 0.0,
         dkh.data(), D);

    scatter_head(dqh.data(), T, W, 0, h, D, dqkv);
    scatter_head(dkh.data(), T, W, W, h, D, dqkv);
    scatter_head(dvh.data(), T, W, 2 * W, h, D, dqkv);
  }

  std::vector<double> dx1(tw);
  gemm(false, false, T, W, 3 * W, 1.0, dqkv.data(), 3 * W, b.attn_in_w.data(),
       W, 0.0, dx1.data(), W);

  dx_in.assign(tw, 0.0);
  layernorm_backward(b.ln1, dx1.data(), cache.xhat1.data(),
                     cache.inv_s1.data(), T, W, dx_in.data());
  for (size_t i = 0; i < tw; ++i) dx_in[i] += dx_mid[i];
}

using nlohmann::json;

void read_mean_std(const json& j, const char* key, double out[3]) {
  if (!j.contains(key)) return;
  const auto v = j.at(key).get<std::vector<double>>();
  require(v.size() == 3, std::string("manifest: ") + key + " needs 3 values");
  std::copy(v.begin(), v.end(), out);
}

LayerNorm load_ln(const SafeTensors& st, const std::string& prefix, int dim) {
  LayerNorm ln;
  ln.weight = st.tensor(prefix + ".weight", {dim});
  ln.bias = st.tensor(prefix + ".bias", {dim});
  return ln;
}

Linear load_linear(const SafeTensors& st, const std::string& prefix, int in,
                   int out) {
  Linear lin;
  lin.weight = st.tensor(prefix + ".weight", {out, in});
  lin.bias = st.tensor(prefix + ".bias", {out});
  lin.in = in;
  lin.out = out;
  return lin;
}

Block load_block(const SafeTensors& st, const std::string& prefix, int width,
                 int hidden) {
  Block b;
  b.ln1 = load_ln(st, prefix + ".ln_1", width);
  b.attn_in_w = st.tensor(prefix + ".attn.in_proj_weight", {3 * width, width});
  b.attn_in_b = st.tensor(prefix + ".attn.in_proj_bias", {3 * width});
  b.attn_out = load_linear(st, prefix + ".attn.out_proj", width, width);
  b.ln2 = load_ln(st, prefix + ".ln_2", width);
  b.mlp_fc = load_linear(st, prefix + ".mlp.c_fc", width, hidden);
  b.mlp_proj = load_linear(st, prefix + ".mlp.c_proj", hidden, width);
  return b;
}

}  // namespace

ModelConfig ModelConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "manifest: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("manifest: bad JSON in " + path + ": " + e.what());
  }

  ModelConfig cfg;
  cfg.architecture = j.at("architecture").get<std::string>();
  cfg.input_size = j.at("input_size").get<int>();
  cfg.patch_size = j.at("patch_size").get<int>();
  cfg.width = j.at("width").get<int>();
  cfg.layers = j.at("layers").get<int>();
  cfg.heads = j.at("heads").get<int>();
  cfg.embed_dim = j.at("embed_dim").get<int>();
  cfg.quick_gelu = j.value("quick_gelu", true);
  read_mean_std(j, "image_mean", cfg.image_mean);
  read_mean_std(j, "image_std", cfg.image_std);
  if (j.contains("text")) {
    const json& t = j.at("text");
    cfg.has_text = true;
    cfg.text.context = t.at("context").get<int>();
    cfg.text.vocab_size = t.at("vocab_size").get<int>();
    cfg.text.width = t.at("width").get<int>();
    cfg.text.heads = t.at("heads").get<int>();
    cfg.text.layers = t.at("layers").get<int>();
  }
  cfg.validate();
  return cfg;
}

void ModelConfig::validate() const {
  require(input_size >= 1, "manifest: input_size must be positive");
  require(patch_size >= 1 && input_size % patch_size == 0,
          "manifest: patch_size must divide input_size");
  require(width >= 1 && heads >= 1 && width % heads == 0,
          "manifest: heads must divide width");
  require(layers >= 1, "manifest: layers must be positive");
  require(embed_dim >= 1, "manifest: embed_dim must be positive");
  for (int c = 0; c < 3; ++c) {
    require(image_std[c] > 0.0, "manifest: image_std must be positive");
  }
  if (has_text) {
    require(text.context >= 2, "manifest: text context must be >= 2");
    require(text.vocab_size >= 2, "manifest: text vocab_size must be >= 2");
    require(text.width >= 1 && text.heads >= 1 &&
                text.width % text.heads == 0,
            "manifest: text heads must divide text width");
    require(text.layers >= 1, "manifest: text layers must be positive");
  }
}

ClipModel ClipModel::load(const std::string& dir) {
  ClipModel m;
  m.cfg_ = ModelConfig::from_json_file(dir + "/manifest.json");
  const ModelConfig& cfg = m.cfg_;
  const SafeTensors st = SafeTensors::load(dir + "/weights.safetensors");

  const int W = cfg.width;
  const int T = cfg.visual_tokens();
  const int ps = cfg.patch_size;

  {
    // conv1 is stored [width, 3, ps, ps]; row-major flattening matches the
    // (c, ky, kx) patch-vector layout used below.
    std::vector<double> conv = st.tensor("visual.conv1.weight", {W, 3, ps, ps});
    m.conv_ = std::move(conv);
  }
  m.class_embedding_ = st.tensor("visual.class_embedding", {W});
  m.visual_positional_ = st.tensor("visual.positional_embedding", {T, W});
  m.ln_pre_ = load_ln(st, "visual.ln_pre", W);
  const int hidden =
      static_cast<int>(st.entry("visual.transformer.resblocks.0.mlp.c_fc.weight")
                           .shape[0]);
  for (int l = 0; l < cfg.layers; ++l) {
    m.visual_blocks_.push_back(load_block(
        st, "visual.transformer.resblocks." + std::to_string(l), W, hidden));
  }
  m.ln_post_ = load_ln(st, "visual.ln_post", W);
  m.visual_proj_ = st.tensor("visual.proj", {W, cfg.embed_dim});

  if (cfg.has_text) {
    const int TW = cfg.text.width;
    m.token_embedding_ =
        st.tensor("token_embedding.weight", {cfg.text.vocab_size, TW});
    m.text_positional_ =
        st.tensor("positional_embedding", {cfg.text.context, TW});
    const int text_hidden = static_cast<int>(
        st.entry("transformer.resblocks.0.mlp.c_fc.weight").shape[0]);
    for (int l = 0; l < cfg.text.layers; ++l) {
      m.text_blocks_.push_back(load_block(
          st, "transformer.resblocks." + std::to_string(l), TW, text_hidden));
    }
    m.ln_final_ = load_ln(st, "ln_final", TW);
    m.text_proj_ = st.tensor("text_projection", {TW, cfg.embed_dim});
  }
  return m;
}

std::vector<double> ClipModel::embed_image(const Image& normalized,
                                           VisualCache* cache) const {
  const ModelConfig& cfg = cfg_;
  require(normalized.square() && normalized.width == cfg.input_size &&
              normalized.channels == 3,
          "clip: expected a " + std::to_string(cfg.input_size) + "x" +
              std::to_string(cfg.input_size) + "x3 input");

  const int W = cfg.width;
  const int ps = cfg.patch_size;
  const int grid = cfg.grid();
  const int P = grid * grid;
  const int T = cfg.visual_tokens();
  const int patch_dim = 3 * ps * ps;

  // Patch matrix [P, 3*ps*ps] in (c, ky, kx) order per row.
  std::vector<double> patches(static_cast<size_t>(P) * patch_dim);
  for (int py = 0; py < grid; ++py) {
    for (int px = 0; px < grid; ++px) {
      double* row = patches.data() +
                    (static_cast<size_t>(py) * grid + px) * patch_dim;
      for (int c = 0; c < 3; ++c) {
        for (int ky = 0; ky < ps; ++ky) {
          for (int kx = 0; kx < ps; ++kx) {
            row[(c * ps + ky) * ps + kx] =
                normalized.at(py * ps + ky, px * ps + kx, c);
          }
        }
      }
    }
  }

  std::vector<double> tokens(static_cast<size_t>(T) * W);
  std::copy(class_embedding_.begin(), class_embedding_.end(), tokens.begin());
  gemm(false, true, P, W, patch_dim, 1.0, patches.data(), patch_dim,
       conv_.data(), patch_dim, 0.0, tokens.data() + W, W);
  for (size_t i = 0; i < tokens.size(); ++i) tokens[i] += visual_positional_[i];

  VisualCache local;
  VisualCache& cc = cache ? *cache : local;
  const bool keep = cache != nullptr;

  std::vector<double> x(tokens.size());
  cc.xhat_pre.resize(tokens.size());
  cc.inv_s_pre.resize(T);
  layernorm_forward(ln_pre_, tokens.data(), T, W, x.data(),
                    cc.xhat_pre.data(), cc.inv_s_pre.data());

  if (keep) cc.blocks.resize(visual_blocks_.size());
  for (size_t l = 0; l < visual_blocks_.size(); ++l) {
    block_forward(visual_blocks_[l], T, W, cfg.heads, false, cfg.quick_gelu, x,
                  x, keep ? &cc.blocks[l] : nullptr);
  }

  // ln_post on the class token only.
  std::vector<double> y0(W);
  cc.xhat_post.resize(W);
  {
    std::vector<double> inv(1);
    layernorm_forward(ln_post_, x.data(), 1, W, y0.data(), cc.xhat_post.data(),
                      inv.data());
    cc.inv_s_post = inv[0];
  }

  std::vector<double> embed(cfg.embed_dim, 0.0);
  gemm(false, false, 1, cfg.embed_dim, W, 1.0, y0.data(), W,
       visual_proj_.data(), cfg.embed_dim, 0.0, embed.data(), cfg.embed_dim);
  return embed;
}

Image ClipModel::image_backward(const VisualCache& cache,
                                const std::vector<double>& d_embed) const {
  const ModelConfig& cfg = cfg_;
  require(static_cast<int>(d_embed.size()) == cfg.embed_dim,
          "clip: embedding gradient dim mismatch");
  require(!cache.blocks.empty(), "clip: backward without a forward cache");

  const int W = cfg.width;
  const int ps = cfg.patch_size;
  const int grid = cfg.grid();
  const int P = grid * grid;
  const int T = cfg.visual_tokens();
  const int patch_dim = 3 * ps * ps;

  std::vector<double> dy0(W, 0.0);
  gemm(false, true, 1, W, cfg.embed_dim, 1.0, d_embed.data(), cfg.embed_dim,
       visual_proj_.data(), cfg.embed_dim, 0.0, dy0.data(), W);

  std::vector<double> dx(static_cast<size_t>(T) * W, 0.0);
  layernorm_backward(ln_post_, dy0.data(), cache.xhat_post.data(),
                     &cache.inv_s_post, 1, W, dx.data());

  std::vector<double> dprev;
  for (size_t l = visual_blocks_.size(); l-- > 0;) {
    block_backward(visual_blocks_[l], T, W, cfg.heads, cfg.quick_gelu,
                   cache.blocks[l], dx, dprev);
    dx = std::move(dprev);
  }

  std::vector<double> dtokens(static_cast<size_t>(T) * W);
  layernorm_backward(ln_pre_, dx.data(), cache.xhat_pre.data(),
                     cache.inv_s_pre.data(), T, W, dtokens.data());

  std::vector<double> dpatches(static_cast<size_t>(P) * patch_dim);
  gemm(false, false, P, patch_dim, W, 1.0, dtokens.data() + W, W, conv_.data(),
       patch_dim, 0.0, dpatches.data(), patch_dim);

  Image dimg(cfg.input_size, cfg.input_size, 3);
  for (int py = 0; py < grid; ++py) {
    for (int px = 0; px < grid; ++px) {
      const double* row = dpatches.data() +
                          (static_cast<size_t>(py) * grid + px) * patch_dim;
      for (int c = 0; c < 3; ++c) {
        for (int ky = 0; ky < ps; ++ky) {
          for (int kx = 0; kx < ps; ++kx) {
            dimg.at(py * ps + ky, px * ps + kx, c) =
                row[(c * ps + ky) * ps + kx];
          }
        }
      }
    }
  }
  return dimg;
}

std::vector<double> ClipModel::embed_tokens(const std::vector<int>& ids) const {
  const ModelConfig& cfg = cfg_;
  require(cfg.has_text, "clip: model has no text tower");
  const int ctx = cfg.text.context;
  const int W = cfg.text.width;
  require(static_cast<int>(ids.size()) == ctx,
          "clip: token sequence must have length " + std::to_string(ctx));

  std::vector<double> x(static_cast<size_t>(ctx) * W);
  for (int t = 0; t < ctx; ++t) {
    const int id = ids[t];
    require(id >= 0 && id < cfg.text.vocab_size, "clip: token id out of range");
    const double* emb = token_embedding_.data() + static_cast<size_t>(id) * W;
    const double* pos = text_positional_.data() + static_cast<size_t>(t) * W;
    double* row = x.data() + static_cast<size_t>(t) * W;
    for (int i = 0; i < W; ++i) row[i] = emb[i] + pos[i];
  }

  for (const Block& b : text_blocks_) {
    block_forward(b, ctx, W, cfg.text.heads, true, cfg.quick_gelu, x, x,
                  nullptr);
  }

  std::vector<double> y(x.size()), xhat(x.size()), inv(ctx);
  layernorm_forward(ln_final_, x.data(), ctx, W, y.data(), xhat.data(),
                    inv.data());

  // Pool at the position of the largest token id (the end-of-text marker).
  int pool = 0;
  for (int t = 1; t < ctx; ++t) {
    if (ids[t] > ids[pool]) pool = t;
  }

  std::vector<double> embed(cfg.embed_dim, 0.0);
  gemm(false, false, 1, cfg.embed_dim, W, 1.0,
       y.data() + static_cast<size_t>(pool) * W, W, text_proj_.data(),
       cfg.embed_dim, 0.0, embed.data(), cfg.embed_dim);
  return embed;
}

}  // namespace das::clip
