#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "das/diagnostics.hpp"
#include "das/error.hpp"
#include "das/pyramid.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"

using namespace das;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("schedules are strictly ascending and capped") {
  CHECK(default_schedule(336) ==
        std::vector<int>{1, 2, 4, 8, 16, 32, 64, 128, 256, 336});
  CHECK(default_schedule(8) == std::vector<int>{1, 2, 4, 8});
  CHECK(default_schedule(1) == std::vector<int>{1});
  CHECK(dense_schedule(4) == std::vector<int>{1, 2, 3, 4});
}

TEST_CASE("new_pyramid allocates per policy and is deterministic") {
  PyramidInit zeros;
  zeros.kind = PyramidInit::Kind::Zeros;
  const PyramidImage p = new_pyramid({1, 2, 4}, 4, zeros, 0);
  CHECK(p.canvas_size == 4);
  REQUIRE(p.components.size() == 3);
  CHECK(p.components[0].width == 1);
  CHECK(p.components[1].width == 2);
  CHECK(p.components[2].width == 4);
  for (const Image& c : p.components) {
    for (double v : c.data) CHECK(v == 0.0);
  }

  PyramidInit gauss;
  gauss.kind = PyramidInit::Kind::Gaussian;
  gauss.sigma = 0.01;
  const PyramidImage a = new_pyramid({1, 2, 4}, 4, gauss, 42);
  const PyramidImage b = new_pyramid({1, 2, 4}, 4, gauss, 42);
  for (size_t k = 0; k < a.components.size(); ++k) {
    CHECK(a.components[k].data == b.components[k].data);
  }
  const PyramidImage c = new_pyramid({1, 2, 4}, 4, gauss, 43);
  CHECK(a.components[2].data != c.components[2].data);

  CHECK_THROWS_AS(new_pyramid({}, 4, zeros, 0), Error);
  CHECK_THROWS_AS(new_pyramid({8}, 4, zeros, 0), Error);
  CHECK_THROWS_AS(new_pyramid({2, 2, 4}, 4, zeros, 0), Error);
  CHECK_THROWS_AS(new_pyramid({4, 2}, 4, zeros, 0), Error);
}

TEST_CASE("bilinear resize: constants, identity, and the 2x2 hand oracle") {
  Image one(1, 1, 3, 0.42);
  const Image big = resize_bilinear(one, 224);
  CHECK(big.width == 224);
  for (double v : big.data) CHECK(v == doctest::Approx(0.42).epsilon(1e-15));

  const Image img = das::test::pattern_image(5);
  const Image same = resize_bilinear(img, 5);
  for (size_t i = 0; i < img.size(); ++i) CHECK(same.data[i] == img.data[i]);

  // [[0,1],[1,0]] to 4x4, evaluated by hand from
  // x_src = (x_dst + 0.5)/2 - 0.5 clamped: coordinates {0, .25, .75, 1}.
  Image checker(2, 2, 1);
  checker.at(0, 0, 0) = 0.0;
  checker.at(0, 1, 0) = 1.0;
  checker.at(1, 0, 0) = 1.0;
  checker.at(1, 1, 0) = 0.0;
  const Image up = resize_bilinear(checker, 4);
  const double expect[4][4] = {{0.0, 0.25, 0.75, 1.0},
                               {0.25, 0.375, 0.625, 0.75},
                               {0.75, 0.625, 0.375, 0.25},
                               {1.0, 0.75, 0.25, 0.0}};
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      CHECK(up.at(y, x, 0) == doctest::Approx(expect[y][x]).epsilon(1e-15));
    }
  }
}

TEST_CASE("resize adjoint dot test across the contract size grid") {
  for (int in : {1, 2, 3, 7, 8, 224}) {
    for (int out : {1, 4, 224}) {
      const Image x = das::test::random_image(in, in, 3, 17 + in * 7 + out);
      const Image y = das::test::random_image(out, out, 3, 91 + in + out * 7);
      const Image rx = resize_bilinear(x, out);
      const Image rty = resize_adjoint(y, in);
      const double lhs = dot(rx.data, y.data);
      const double rhs = dot(x.data, rty.data);
      const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-30});
      CHECK(std::abs(lhs - rhs) / scale <= 1e-6);
    }
  }

  // Identity-size adjoint of a constant field is the constant itself.
  Image ones(3, 3, 1, 1.0);
  const Image back = resize_adjoint(ones, 3);
  for (double v : back.data) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("compose maps zeros to 0.5 and saturates toward 1") {
  PyramidInit zeros;
  zeros.kind = PyramidInit::Kind::Zeros;
  PyramidImage p = new_pyramid({1, 2, 4}, 4, zeros, 0);
  const Image mid = compose(p);
  for (double v : mid.data) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));

  PyramidImage single = new_pyramid({1}, 4, zeros, 0);
  for (double& v : single.components[0].data) v = 10.0;
  const Image bright = compose(single);
  for (double v : bright.data) {
    CHECK(v == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(v < 1.0);  // open interval, never exactly 1
  }
}

TEST_CASE("compose_linear is linear in the components") {
  PyramidInit gauss;
  gauss.kind = PyramidInit::Kind::Gaussian;
  gauss.sigma = 0.5;
  PyramidImage p = new_pyramid({1, 2, 4, 8}, 8, gauss, 7);
  PyramidImage q = new_pyramid({1, 2, 4, 8}, 8, gauss, 8);
  const Image cp = compose_linear(p);
  const Image cq = compose_linear(q);

  PyramidImage mix = p;
  for (size_t k = 0; k < mix.components.size(); ++k) {
    for (size_t i = 0; i < mix.components[k].data.size(); ++i) {
      mix.components[k].data[i] =
          2.0 * p.components[k].data[i] - 3.0 * q.components[k].data[i];
    }
  }
  const Image cm = compose_linear(mix);
  for (size_t i = 0; i < cm.size(); ++i) {
    CHECK(cm.data[i] ==
          doctest::Approx(2.0 * cp.data[i] - 3.0 * cq.data[i]).epsilon(1e-12));
  }

  // One component at the identity resolution passes through unchanged.
  PyramidImage id = new_pyramid({8}, 8, gauss, 3);
  const Image ci = compose_linear(id);
  CHECK(ci.data == id.components[0].data);
}

TEST_CASE("decompose: uniform, single level, and exact round trip") {
  Image flat(8, 8, 3, 0.5);
  const PyramidImage p = decompose(flat, {1, 2, 4, 8});
  for (const Image& c : p.components) {
    for (double v : c.data) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
  }

  // Single level at canvas: P_S = atanh(2 I - 1) exactly.
  const Image img = das::test::smooth_image(8);
  const PyramidImage single = decompose(img, {8});
  for (size_t i = 0; i < img.data.size(); ++i) {
    CHECK(single.components[0].data[i] ==
          doctest::Approx(std::atanh(2.0 * img.data[i] - 1.0)).epsilon(1e-12));
  }

  // Full schedule still round-trips when the finest level is the canvas.
  const PyramidImage multi = decompose(img, {1, 2, 4, 8});
  const Image back = compose(multi);
  const Psnr p2 = psnr(back, img);
  CHECK((p2.exact || p2.db >= 100.0));

  Image bad(8, 8, 3, 0.5);
  bad.data[0] = 1.5;
  CHECK_THROWS_AS(decompose(bad, {1, 8}), Error);
}

TEST_CASE("decompose round trip from 8-bit quantized data stays >= 40 dB") {
  // Values on the 8-bit lattice include exact 0 and 1, which the clamp at
  // 1/512 must absorb while keeping PSNR high.
  Image img(16, 16, 3);
  for (size_t i = 0; i < img.size(); ++i) {
    img.data[i] = static_cast<double>((i * 37) % 256) / 255.0;
  }
  const PyramidImage p = decompose(img, {1, 2, 4, 8, 16});
  const Image back = compose(p);
  const Psnr q = psnr(back, img);
  CHECK(!q.exact);
  CHECK(q.db >= 40.0);
}

TEST_CASE("backprop_to_components: zero gradient and the 1x1 chain rule") {
  PyramidInit gauss;
  gauss.kind = PyramidInit::Kind::Gaussian;
  gauss.sigma = 0.3;
  PyramidImage p = new_pyramid({1, 2, 4}, 4, gauss, 11);

  Image zero(4, 4, 3, 0.0);
  const std::vector<Image> zg = backprop_to_components(zero, p);
  for (const Image& g : zg) {
    for (double v : g.data) CHECK(v == 0.0);
  }

  // For a single 1x1 component the gradient is the sum over canvas sites of
  // dJ/dI * 0.5 * (1 - tanh^2(sum)).
  PyramidImage single = new_pyramid({1}, 4, gauss, 12);
  const Image lin = compose_linear(single);
  Image up = das::test::random_image(4, 4, 3, 13, -1.0, 1.0);
  const std::vector<Image> g = backprop_to_components(up, single);
  for (int c = 0; c < 3; ++c) {
    double expect = 0.0;
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 4; ++x) {
        const double t = std::tanh(lin.at(y, x, c));
        expect += up.at(y, x, c) * 0.5 * (1.0 - t * t);
      }
    }
    CHECK(g[0].at(0, 0, c) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("component gradients match central finite differences") {
  // Scalar objective J(p) = sum(compose(p) .* A) over random A, canvases 8
  // and 16.
  for (int canvas : {8, 16}) {
    PyramidInit gauss;
    gauss.kind = PyramidInit::Kind::Gaussian;
    gauss.sigma = 0.4;
    PyramidImage p = new_pyramid(default_schedule(canvas), canvas, gauss,
                                 canvas * 101);
    const Image a = das::test::random_image(canvas, canvas, 3, 555, -1.0, 1.0);

    const std::vector<Image> analytic = backprop_to_components(a, p);
    const double h = 1e-4;
    // Probe a spread of coordinates in every component.
    for (size_t k = 0; k < p.components.size(); ++k) {
      const size_t n = p.components[k].data.size();
      for (size_t probe = 0; probe < std::min<size_t>(n, 5); ++probe) {
        const size_t idx = (probe * 37) % n;
        const double keep = p.components[k].data[idx];
        p.components[k].data[idx] = keep + h;
        const Image plus = compose(p);
        p.components[k].data[idx] = keep - h;
        const Image minus = compose(p);
        p.components[k].data[idx] = keep;
        double fd = 0.0;
        for (size_t i = 0; i < plus.size(); ++i) {
          fd += (plus.data[i] - minus.data[i]) * a.data[i];
        }
        fd /= 2.0 * h;
        const double an = analytic[k].data[idx];
        const double scale = std::max({std::abs(fd), std::abs(an), 1e-8});
        CHECK(std::abs(fd - an) / scale <= 1e-3);
      }
    }
  }
}
