#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <string>
#include <vector>

#include "das/diagnostics.hpp"
#include "das/error.hpp"
#include "das/tasks.hpp"
#include "das/toy_encoder.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support/fixtures.hpp"

using namespace das;

TEST_CASE("psnr: identical images report the exact sentinel") {
  const Image a = das::test::pattern_image(16);
  const Psnr p = psnr(a, a);
  CHECK(p.exact);
  CHECK(psnr_to_string(p) == "exact");
}

TEST_CASE("psnr: closed-form values") {
  Image zeros(8, 8, 3, 0.0);
  Image ones(8, 8, 3, 1.0);
  const Psnr worst = psnr(zeros, ones);
  CHECK_FALSE(worst.exact);
  CHECK(worst.db == doctest::Approx(0.0).epsilon(1e-12));

  Image mid(8, 8, 3, 0.5);
  Image near(8, 8, 3, 0.51);
  CHECK(psnr(mid, near).db == doctest::Approx(40.0).epsilon(1e-6));
}

TEST_CASE("psnr is symmetric and validates shapes") {
  const Image a = das::test::random_image(12, 12, 3, 1);
  const Image b = das::test::random_image(12, 12, 3, 2);
  CHECK(psnr(a, b).db == psnr(b, a).db);

  Image other(12, 13, 3);
  CHECK_THROWS_AS(psnr(a, other), Error);
  Image empty;
  CHECK_THROWS_AS(psnr(empty, empty), Error);
}

TEST_CASE("psnr_to_string formats two decimals") {
  CHECK(psnr_to_string({false, 12.5}) == "12.50 dB");
}

TEST_CASE("spectrum: bin layout and fit band") {
  const SpectrumReport r = power_spectrum(das::test::random_image(64, 64, 3, 9));
  CHECK(r.side == 64);
  REQUIRE(r.frequencies.size() == 32);
  CHECK(r.frequencies.size() >= 8);
  CHECK(r.frequencies.front() == 1.0);
  CHECK(r.frequencies.back() == 32.0);
  CHECK(r.power.size() == r.frequencies.size());
  CHECK(r.fit_lo == 4.0);
  CHECK(r.fit_hi == 16.0);
  CHECK(r.fit_hi <= r.side / 2.0);
  CHECK_FALSE(r.degenerate);
}

TEST_CASE("spectrum: white noise fits a flat slope") {
  const SpectrumReport r =
      power_spectrum(das::test::random_image(128, 128, 3, 77));
  CHECK(std::abs(r.slope) <= 0.3);
}

TEST_CASE("spectrum: recovers the exponent of synthetic power-law fields") {
  for (double alpha : {0.0, 1.0, 2.0}) {
    const Image field = synthesize_power_law(128, alpha, 11);
    CHECK(field.channels == 1);
    CHECK(all_finite(field));
    const SpectrumReport r = power_spectrum(field);
    INFO("alpha " << alpha << " slope " << r.slope);
    CHECK(std::abs(r.slope + alpha) <= 0.3);
  }
}

TEST_CASE("spectrum is invariant under a mean shift") {
  const Image base = das::test::random_image(64, 64, 3, 5, 0.0, 0.4);
  Image shifted = base;
  for (double& v : shifted.data) v += 0.1;

  const SpectrumReport a = power_spectrum(base);
  const SpectrumReport b = power_spectrum(shifted);
  CHECK(a.slope == doctest::Approx(b.slope).epsilon(1e-9));
  REQUIRE(a.power.size() == b.power.size());
  for (size_t i = 0; i < a.power.size(); ++i) {
    CHECK(a.power[i] == doctest::Approx(b.power[i]).epsilon(1e-9));
  }
}

TEST_CASE("spectrum: constant image is marked degenerate, not NaN") {
  Image flat(64, 64, 3, 0.37);
  const SpectrumReport r = power_spectrum(flat);
  CHECK(r.degenerate);
  CHECK(std::isfinite(r.slope));

  const nlohmann::json j = nlohmann::json::parse(r.to_json());
  CHECK(j["degenerate"] == true);
  CHECK(j["slope"].is_null());
}

TEST_CASE("spectrum rejects small or non-square inputs") {
  CHECK_THROWS_AS(power_spectrum(Image(31, 31, 3, 0.5)), Error);
  CHECK_THROWS_AS(power_spectrum(Image(64, 32, 3, 0.5)), Error);
  CHECK_THROWS_AS(synthesize_power_law(16, 1.0, 0), Error);
}

TEST_CASE("synthesize_power_law is deterministic in the seed") {
  const Image a = synthesize_power_law(64, 1.5, 123);
  const Image b = synthesize_power_law(64, 1.5, 123);
  const Image c = synthesize_power_law(64, 1.5, 124);
  CHECK(a.data == b.data);
  CHECK(a.data != c.data);
}

TEST_CASE("spectrum csv lists one row per bin") {
  das::test::TempDir dir;
  const std::string path = dir.file("spec.csv");
  const SpectrumReport r = power_spectrum(das::test::random_image(64, 64, 3, 3));
  r.write_csv(path);
  const std::string text = das::test::read_text_file(path);
  CHECK(text.rfind("frequency,power\n", 0) == 0);
  size_t rows = 0;
  for (char ch : text) rows += ch == '\n';
  CHECK(rows == r.frequencies.size() + 1);
}

TEST_CASE("standard ablation builds the three-column progression") {
  RunConfig base;
  base.out_size = 32;
  base.shift_max = 8;
  base.batch = 4;
  base.steps = 5;
  const auto specs = standard_ablation(base);
  REQUIRE(specs.size() == 3);
  CHECK(specs[0].name == "pixel");
  CHECK(specs[1].name == "pixel+augment");
  CHECK(specs[2].name == "das");
  CHECK(specs[0].cfg.resolutions == std::vector<int>{48});
  CHECK_FALSE(specs[0].cfg.augment);
  CHECK(specs[1].cfg.resolutions == std::vector<int>{48});
  CHECK(specs[1].cfg.augment);
  CHECK(specs[2].cfg.resolutions == base.resolutions);
  CHECK(specs[2].cfg.augment);
}

TEST_CASE("ablation report: identical configs produce identical metrics") {
  RunConfig cfg;
  cfg.out_size = 32;
  cfg.shift_max = 8;
  cfg.batch = 4;
  cfg.steps = 4;
  cfg.seed = 17;
  ToyEncoder enc(cfg.out_size);
  const auto targets = targets_from_image(
      {&enc}, das::test::pattern_image(cfg.out_size));

  std::vector<AblationSpec> specs(2);
  specs[0] = {"first", cfg};
  specs[1] = {"second", cfg};
  const AblationReport report = ablation_report(specs, {&enc}, targets);
  REQUIRE(report.columns.size() == 2);
  CHECK(report.columns[0].final_objective == report.columns[1].final_objective);
  CHECK(report.columns[0].spectrum_slope == report.columns[1].spectrum_slope);
  CHECK(report.columns[0].seconds >= 0.0);

  const nlohmann::json j = nlohmann::json::parse(report.to_json());
  REQUIRE(j.is_array());
  CHECK(j.size() == 2);
  CHECK(j[0]["name"] == "first");

  const std::string table = report.to_table();
  CHECK(table.find("column") != std::string::npos);
  CHECK(table.find("second") != std::string::npos);
}

TEST_CASE("ablation requires at least two columns") {
  RunConfig cfg;
  cfg.out_size = 32;
  cfg.shift_max = 8;
  ToyEncoder enc(cfg.out_size);
  const auto targets = targets_from_image(
      {&enc}, das::test::pattern_image(cfg.out_size));
  CHECK_THROWS_AS(ablation_report({{"only", cfg}}, {&enc}, targets),
                  Error);
}
