#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <fstream>
#include <vector>

#include "das/encoder.hpp"
#include "das/error.hpp"
#include "das/toy_encoder.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support/fixtures.hpp"

using namespace das;
using das::test::TempDir;

TEST_CASE("cosine score: self, orthogonal, scale-free") {
  const Embedding u = normalize_embedding({1.0, 2.0, 2.0});
  CHECK(cosine_score(u.values, u) == doctest::Approx(1.0).epsilon(1e-12));

  const Embedding ex = normalize_embedding({1.0, 0.0});
  CHECK(cosine_score({0.0, 5.0}, ex) == doctest::Approx(0.0));
  CHECK(cosine_score({3.0, 0.0}, ex) == doctest::Approx(1.0));

  std::vector<double> v3 = {3.0, 6.0, 6.0};
  CHECK(cosine_score(v3, u) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(cosine_score({0.0, 0.0}, ex), Error);
  CHECK_THROWS_AS(cosine_score({1.0, 0.0, 0.0}, ex), Error);
}

TEST_CASE("weighted objective: linearity, cancellation, permutation") {
  const Embedding u = normalize_embedding({1.0, 1.0});
  const Embedding w = normalize_embedding({1.0, -1.0});
  const std::vector<double> v = {0.9, 0.1};

  CHECK(weighted_objective(v, {{u, 1.0, ""}}) ==
        doctest::Approx(cosine_score(v, u)));
  CHECK(weighted_objective(v, {{u, 1.0, ""}, {u, -1.0, ""}}) ==
        doctest::Approx(0.0));

  const double a = weighted_objective(v, {{u, 0.3, ""}, {w, -0.7, ""}});
  const double b = weighted_objective(v, {{w, -0.7, ""}, {u, 0.3, ""}});
  CHECK(a == doctest::Approx(b).epsilon(1e-15));
  CHECK(a == doctest::Approx(0.3 * cosine_score(v, u) -
                             0.7 * cosine_score(v, w))
                 .epsilon(1e-12));

  // Linear in the weights: doubling every weight doubles the objective.
  const double twice = weighted_objective(v, {{u, 0.6, ""}, {w, -1.4, ""}});
  CHECK(twice == doctest::Approx(2.0 * a).epsilon(1e-12));

  CHECK_THROWS_AS(weighted_objective(v, {}), Error);
}

TEST_CASE("normalize_embedding enforces the unit-norm invariant") {
  const Embedding e = normalize_embedding({3.0, 4.0});
  CHECK(e.values[0] == doctest::Approx(0.6));
  CHECK(e.values[1] == doctest::Approx(0.8));
  CHECK_THROWS_AS(normalize_embedding({0.0, 0.0}), Error);
  CHECK_THROWS_AS(normalize_embedding({}), Error);
  CHECK_THROWS_AS(normalize_embedding({1.0, std::nan("")}), Error);
}

// Golden embeddings frozen from an independent scripted reimplementation of
// the five-stage pipeline (area pool, flatten, fixed gaussian matrix, tanh,
// normalize).
TEST_CASE("toy encoder matches the reference pipeline") {
  ToyEncoder enc(224);
  CHECK(enc.name() == "toy");
  CHECK(enc.dim() == 512);

  const Image half(224, 224, 3, 0.5);
  const Embedding e = enc.embed_image(half);
  REQUIRE(e.dim() == 512);
  const double golden_half[8] = {
      -0.008589330138076359, -0.02048582812417427, 0.02340899380094238,
      0.06476831142406463,   -0.07645964172239314, 0.0760309150813887,
      -0.07169130104139249,  -0.03172122783886143};
  for (int i = 0; i < 8; ++i) {
    CHECK(e.values[i] == doctest::Approx(golden_half[i]).epsilon(1e-9));
  }

  ToyEncoder enc64(64);
  const Image pattern = das::test::pattern_image(64);
  const Embedding p = enc64.embed_image(pattern);
  const double golden_pattern[8] = {
      -0.019040779936131638, -0.03036753514644546, 0.032603843763783266,
      0.07053176818798415,   -0.07987467658729545, 0.07326226199029057,
      -0.06881770225164427,  -0.026455675473684787};
  for (int i = 0; i < 8; ++i) {
    CHECK(p.values[i] == doctest::Approx(golden_pattern[i]).epsilon(1e-9));
  }
  // The two embeddings agree with the reference cosine.
  double dot = 0.0;
  for (int i = 0; i < 512; ++i) dot += p.values[i] * e.values[i];
  CHECK(dot == doctest::Approx(0.9672278289458698).epsilon(1e-10));
}

TEST_CASE("toy embeddings are unit norm and deterministic") {
  ToyEncoder enc(32);
  const Image img = das::test::random_image(32, 32, 3, 5);
  const Embedding a = enc.embed_image(img);
  const Embedding b = enc.embed_image(img);
  CHECK(a.values == b.values);
  double norm = 0.0;
  for (double v : a.values) norm += v * v;
  CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-6));

  ToyEncoder other(32, 0xBEEF);
  CHECK(other.name() == "toy:0xbeef");
  const Embedding c = other.embed_image(img);
  CHECK(a.values != c.values);

  Image wrong(16, 16, 3, 0.5);
  CHECK_THROWS_AS(enc.embed_image(wrong), Error);
}

TEST_CASE("toy gradient passes finite differences") {
  ToyEncoder enc(16);
  const Image img = das::test::random_image(16, 16, 3, 777, 0.2, 0.8);
  ToyEncoder helper(16, 0x1111);
  const Image other = das::test::random_image(16, 16, 3, 778);
  const TargetSet targets = {{helper.embed_image(other), 0.8, "a"},
                             {enc.embed_image(other), -0.3, "b"}};

  Image grad;
  const double j0 = enc.objective_gradient(img, targets, &grad);
  CHECK(std::isfinite(j0));

  Image probe = img;
  const double h = 1e-5;
  for (int k = 0; k < 20; ++k) {
    const size_t idx = (static_cast<size_t>(k) * 131 + 7) % img.size();
    const double keep = probe.data[idx];
    probe.data[idx] = keep + h;
    const double jp = enc.objective_gradient(probe, targets, nullptr);
    probe.data[idx] = keep - h;
    const double jm = enc.objective_gradient(probe, targets, nullptr);
    probe.data[idx] = keep;
    const double fd = (jp - jm) / (2.0 * h);
    const double an = grad.data[idx];
    const double scale = std::max({std::abs(fd), std::abs(an), 1e-8});
    CHECK(std::abs(fd - an) / scale <= 1e-3);
  }
}

TEST_CASE("toy gradient: zero weights and target-scale invariance") {
  ToyEncoder enc(16);
  const Image img = das::test::random_image(16, 16, 3, 12);
  const Embedding u = enc.embed_image(das::test::pattern_image(16));

  Image g0;
  const double j0 = enc.objective_gradient(img, {{u, 0.0, ""}}, &g0);
  CHECK(j0 == 0.0);
  for (double v : g0.data) CHECK(v == 0.0);

  // Positive rescaling of a target embedding does not change the gradient
  // (embeddings are normalized on construction, so both targets are equal).
  Embedding scaled = normalize_embedding([&] {
    std::vector<double> s = u.values;
    for (double& v : s) v *= 7.5;
    return s;
  }());
  Image g1, g2;
  enc.objective_gradient(img, {{u, 1.0, ""}}, &g1);
  enc.objective_gradient(img, {{scaled, 1.0, ""}}, &g2);
  for (size_t i = 0; i < g1.size(); ++i) {
    CHECK(g1.data[i] == doctest::Approx(g2.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("toy feature maps expose the two pooled stages") {
  ToyEncoder enc(64);
  const Image img = das::test::pattern_image(64);
  const auto stages = enc.feature_maps(img);
  REQUIRE(stages.size() == 2);
  CHECK(stages[0].width == 32);
  CHECK(stages[1].width == 8);
  // Stage 1 is the area pool of stage 0.
  const Image pooled = area_resample(stages[0], 8);
  for (size_t i = 0; i < pooled.size(); ++i) {
    CHECK(stages[1].data[i] == doctest::Approx(pooled.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("ensemble gradient: single, duplicated, and two-seed mean") {
  ToyEncoder a(16, 0xA);
  ToyEncoder b(16, 0xB);
  const Image view = das::test::random_image(16, 16, 3, 9);
  const Image ref = das::test::random_image(16, 16, 3, 10);
  const TargetSet ta = {{a.embed_image(ref), 1.0, ""}};
  const TargetSet tb = {{b.embed_image(ref), 1.0, ""}};

  Image ga;
  const double ja = a.objective_gradient(view, ta, &ga);
  Image ge;
  const double je = ensemble_eval({&a}, {ta}, GradMode::RawMean, view, &ge);
  CHECK(je == doctest::Approx(ja).epsilon(1e-15));
  for (size_t i = 0; i < ga.size(); ++i) {
    CHECK(ge.data[i] == doctest::Approx(ga.data[i]).epsilon(1e-12));
  }

  Image gdup;
  const double jdup =
      ensemble_eval({&a, &a}, {ta, ta}, GradMode::RawMean, view, &gdup);
  CHECK(jdup == doctest::Approx(ja).epsilon(1e-12));
  for (size_t i = 0; i < ga.size(); ++i) {
    CHECK(gdup.data[i] == doctest::Approx(ga.data[i]).epsilon(1e-12));
  }

  Image gb;
  const double jb = b.objective_gradient(view, tb, &gb);
  Image gm;
  const double jm =
      ensemble_eval({&a, &b}, {ta, tb}, GradMode::RawMean, view, &gm);
  CHECK(jm == doctest::Approx(0.5 * (ja + jb)).epsilon(1e-12));
  for (size_t i = 0; i < gm.size(); ++i) {
    CHECK(gm.data[i] ==
          doctest::Approx(0.5 * (ga.data[i] + gb.data[i])).epsilon(1e-12));
  }

  // Normalized mean: each per-model gradient is unit-normed before the mean.
  Image gn;
  ensemble_eval({&a, &b}, {ta, tb}, GradMode::NormalizedMean, view, &gn);
  const double na = l2_norm(ga), nb = l2_norm(gb);
  for (size_t i = 0; i < gn.size(); ++i) {
    const double expect = 0.5 * (ga.data[i] / na + gb.data[i] / nb);
    CHECK(gn.data[i] == doctest::Approx(expect).epsilon(1e-10));
  }

  CHECK_THROWS_AS(ensemble_eval({}, {}, GradMode::RawMean, view, nullptr),
                  Error);
  CHECK_THROWS_AS(ensemble_eval({&a}, {ta, tb}, GradMode::RawMean, view,
                                nullptr),
                  Error);
}

TEST_CASE("embedding files store raw values and normalize on load") {
  TempDir tmp;
  const std::string path = tmp.file("e.json");
  write_embedding(path, {3.0, 4.0});

  // On-disk data is unnormalized.
  std::ifstream in(path);
  nlohmann::json j;
  in >> j;
  CHECK(j["dim"].get<int>() == 2);
  CHECK(j["data"][0].get<double>() == 3.0);
  CHECK(j["data"][1].get<double>() == 4.0);

  const Embedding e = read_embedding(path);
  CHECK(e.values[0] == doctest::Approx(0.6));
  CHECK(e.values[1] == doctest::Approx(0.8));

  das::test::write_text_file(tmp.file("bad.json"), "{\"dim\": 3}");
  CHECK_THROWS_AS(read_embedding(tmp.file("bad.json")), Error);
  das::test::write_text_file(tmp.file("short.json"),
                             "{\"dim\": 3, \"data\": [1.0]}");
  CHECK_THROWS_AS(read_embedding(tmp.file("short.json")), Error);
  CHECK_THROWS_AS(read_embedding(tmp.file("missing.json")), Error);
}
