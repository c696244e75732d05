#pragma once

// Shared test helpers: scratch directories, deterministic test images, and a
// tiny synthetic weight directory for the clip backend.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "das/clip/safetensors.hpp"
#include "das/image.hpp"
#include "das/prng.hpp"

namespace das::test {

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("das-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }

  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

// Deterministic pixel pattern in [0, 1]; matches the reference-oracle
// construction used to freeze golden values.
inline Image pattern_image(int n, int channels = 3) {
  Image img(n, n, channels);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      for (int c = 0; c < channels; ++c) {
        img.at(y, x, c) = ((y * 31 + x * 17 + c * 7) % 101) / 100.0;
      }
    }
  }
  return img;
}

// Smooth low-frequency image with values strictly inside (0, 1), so the
// decompose clamp never bites.
inline Image smooth_image(int n) {
  Image img(n, n, 3);
  const double pi = 3.14159265358979323846;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      for (int c = 0; c < 3; ++c) {
        img.at(y, x, c) = 0.5 + 0.3 * std::sin(2.0 * pi * (y + 2 * c) / n) *
                                    std::cos(2.0 * pi * x / n);
      }
    }
  }
  return img;
}

// Underexposed low-frequency scene. Its mean sits far from a flat 0.5
// canvas, so the toy encoder gives it a noticeably lower baseline cosine
// than the bright targets above, leaving room to demonstrate real ascent.
inline Image dark_scene(int n) {
  Image img(n, n, 3);
  const double pi = 3.14159265358979323846;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double u = static_cast<double>(x) / (n - 1);
      const double v = static_cast<double>(y) / (n - 1);
      img.at(y, x, 0) = 0.10 + 0.45 * u * u + 0.10 * std::sin(2.0 * pi * v);
      img.at(y, x, 1) = 0.08 + 0.30 * v + 0.12 * std::cos(2.0 * pi * u);
      img.at(y, x, 2) = 0.15 + 0.25 * (1.0 - u) * v;
    }
  }
  for (double& d : img.data) d = std::clamp(d, 0.02, 0.98);
  return img;
}

inline Image random_image(int h, int w, int channels, uint64_t seed,
                          double lo = 0.0, double hi = 1.0) {
  Image img(h, w, channels);
  SplitMix64 g(seed);
  for (double& v : img.data) v = lo + (hi - lo) * g.next_unit();
  return img;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

inline bool same_file_bytes(const std::string& a, const std::string& b) {
  return read_text_file(a) == read_text_file(b);
}

// Tiny clip-style weight directory: visual tower 16x16 input, patch 8
// (2x2 grid, 5 tokens), width 16, 2 layers, 2 heads, embed dim 8; optional
// text tower with context 8 and a 3-merge vocabulary (size 517). Weights are
// small deterministic gaussians so activations stay well-conditioned.
namespace tiny_clip {

constexpr int kInput = 16;
constexpr int kPatch = 8;
constexpr int kWidth = 16;
constexpr int kLayers = 2;
constexpr int kHeads = 2;
constexpr int kEmbed = 8;
constexpr int kHidden = 32;
constexpr int kContext = 8;
constexpr int kVocab = 517;  // 256 + 256 + 3 merges + 2 specials

using NamedTensor =
    std::pair<std::string, std::pair<std::vector<int64_t>, std::vector<double>>>;

inline std::vector<double> gaussians(SplitMix64& g, size_t n, double sigma) {
  std::vector<double> v(n);
  for (double& x : v) x = sigma * g.next_gaussian();
  return v;
}

inline void push_block(std::vector<NamedTensor>& tensors,
                       const std::string& prefix, int width, int hidden,
                       SplitMix64& g) {
  const double s = 0.05;
  tensors.push_back({prefix + ".ln_1.weight",
                     {{width}, std::vector<double>(width, 1.0)}});
  tensors.push_back({prefix + ".ln_1.bias",
                     {{width}, std::vector<double>(width, 0.0)}});
  tensors.push_back({prefix + ".attn.in_proj_weight",
                     {{3 * width, width},
                      gaussians(g, static_cast<size_t>(3 * width) * width, s)}});
  tensors.push_back({prefix + ".attn.in_proj_bias",
                     {{3 * width}, gaussians(g, 3 * width, s)}});
  tensors.push_back({prefix + ".attn.out_proj.weight",
                     {{width, width},
                      gaussians(g, static_cast<size_t>(width) * width, s)}});
  tensors.push_back({prefix + ".attn.out_proj.bias",
                     {{width}, gaussians(g, width, s)}});
  tensors.push_back({prefix + ".ln_2.weight",
                     {{width}, std::vector<double>(width, 1.0)}});
  tensors.push_back({prefix + ".ln_2.bias",
                     {{width}, std::vector<double>(width, 0.0)}});
  tensors.push_back({prefix + ".mlp.c_fc.weight",
                     {{hidden, width},
                      gaussians(g, static_cast<size_t>(hidden) * width, s)}});
  tensors.push_back({prefix + ".mlp.c_fc.bias",
                     {{hidden}, gaussians(g, hidden, s)}});
  tensors.push_back({prefix + ".mlp.c_proj.weight",
                     {{width, hidden},
                      gaussians(g, static_cast<size_t>(width) * hidden, s)}});
  tensors.push_back({prefix + ".mlp.c_proj.bias",
                     {{width}, gaussians(g, width, s)}});
}

inline std::string manifest_json(bool with_text) {
  std::string json = R"({
  "architecture": "tiny-test",
  "input_size": 16,
  "patch_size": 8,
  "width": 16,
  "layers": 2,
  "heads": 2,
  "embed_dim": 8,
  "quick_gelu": true,
  "image_mean": [0.5, 0.5, 0.5],
  "image_std": [0.25, 0.25, 0.25])";
  if (with_text) {
    json += R"(,
  "text": {"context": 8, "vocab_size": 517, "width": 16, "heads": 2,
           "layers": 2})";
  }
  json += "\n}\n";
  return json;
}

inline std::string merges_text() {
  return "#version: test\nh e\nl l\nhe ll\n";
}

// Writes manifest.json + weights.safetensors (+ merges.txt) into `dir`.
inline void write_archive(const std::string& dir, bool with_text,
                          uint64_t seed = 99) {
  std::filesystem::create_directories(dir);
  SplitMix64 g(seed);
  const double s = 0.05;
  std::vector<NamedTensor> tensors;

  tensors.push_back({"visual.conv1.weight",
                     {{kWidth, 3, kPatch, kPatch},
                      gaussians(g, static_cast<size_t>(kWidth) * 3 * kPatch *
                                       kPatch, s)}});
  tensors.push_back({"visual.class_embedding",
                     {{kWidth}, gaussians(g, kWidth, s)}});
  const int tokens = 1 + (kInput / kPatch) * (kInput / kPatch);
  tensors.push_back({"visual.positional_embedding",
                     {{tokens, kWidth},
                      gaussians(g, static_cast<size_t>(tokens) * kWidth, s)}});
  tensors.push_back({"visual.ln_pre.weight",
                     {{kWidth}, std::vector<double>(kWidth, 1.0)}});
  tensors.push_back({"visual.ln_pre.bias",
                     {{kWidth}, std::vector<double>(kWidth, 0.0)}});
  for (int l = 0; l < kLayers; ++l) {
    push_block(tensors, "visual.transformer.resblocks." + std::to_string(l),
               kWidth, kHidden, g);
  }
  tensors.push_back({"visual.ln_post.weight",
                     {{kWidth}, std::vector<double>(kWidth, 1.0)}});
  tensors.push_back({"visual.ln_post.bias",
                     {{kWidth}, std::vector<double>(kWidth, 0.0)}});
  tensors.push_back({"visual.proj",
                     {{kWidth, kEmbed},
                      gaussians(g, static_cast<size_t>(kWidth) * kEmbed, s)}});

  if (with_text) {
    tensors.push_back({"token_embedding.weight",
                       {{kVocab, kWidth},
                        gaussians(g, static_cast<size_t>(kVocab) * kWidth, s)}});
    tensors.push_back({"positional_embedding",
                       {{kContext, kWidth},
                        gaussians(g, static_cast<size_t>(kContext) * kWidth,
                                  s)}});
    for (int l = 0; l < kLayers; ++l) {
      push_block(tensors, "transformer.resblocks." + std::to_string(l), kWidth,
                 kHidden, g);
    }
    tensors.push_back({"ln_final.weight",
                       {{kWidth}, std::vector<double>(kWidth, 1.0)}});
    tensors.push_back({"ln_final.bias",
                       {{kWidth}, std::vector<double>(kWidth, 0.0)}});
    tensors.push_back({"text_projection",
                       {{kWidth, kEmbed},
                        gaussians(g, static_cast<size_t>(kWidth) * kEmbed,
                                  s)}});
  }

  clip::write_safetensors(dir + "/weights.safetensors", tensors);
  write_text_file(dir + "/manifest.json", manifest_json(with_text));
  if (with_text) write_text_file(dir + "/merges.txt", merges_text());
}

}  // namespace tiny_clip

}  // namespace das::test
