#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "das/image.hpp"
#include "das/optimizer.hpp"

namespace das {

// Radially averaged power spectrum with a log-log slope fit. Natural images
// decay roughly as 1/f^2 (slope near -2); white noise sits near 0.
struct SpectrumReport {
  int side = 0;
  std::vector<double> frequencies;  // integer radii, cycles/image
  std::vector<double> power;        // mean power per radial bin
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  double fit_lo = 0.0;  // fit band, cycles/image
  double fit_hi = 0.0;
  bool degenerate = false;  // constant image: slope undefined

  std::string to_json() const;
  void write_csv(const std::string& path) const;
};

// Luminance -> mean subtraction -> 2-D DFT -> squared magnitude -> radial
// average into integer-radius bins -> least-squares fit of log power vs log
// frequency over [4, side/4]. Requires a square image with side >= 32.
SpectrumReport power_spectrum(const Image& image);

// Random field with power spectrum proportional to 1/f^alpha, built by
// shaping complex Gaussian noise in the frequency domain; used to calibrate
// the estimator (recovered slope should be -alpha).
Image synthesize_power_law(int side, double alpha, uint64_t seed);

struct Psnr {
  bool exact = false;  // identical inputs; db is undefined
  double db = 0.0;
};

// 10*log10(1/MSE) with MAX=1. Symmetric.
Psnr psnr(const Image& a, const Image& b);
std::string psnr_to_string(const Psnr& p);

struct AblationColumn {
  std::string name;
  double final_objective = 0.0;
  double spectrum_slope = 0.0;
  bool spectrum_degenerate = false;
  double seconds = 0.0;
};

struct AblationReport {
  std::vector<AblationColumn> columns;

  std::string to_json() const;
  std::string to_table() const;  // aligned text table
};

struct AblationSpec {
  std::string name;
  RunConfig cfg;
};

// The standard three-column progression: raw pixels, pixels + augmentation,
// full multi-resolution ascent. All share the base seed and targets.
std::vector<AblationSpec> standard_ablation(const RunConfig& base);

// Runs every column against the same encoders/targets and tabulates the
// final objective, spectrum slope of the output crop, and wall time.
AblationReport ablation_report(const std::vector<AblationSpec>& specs,
                               const std::vector<const Encoder*>& encoders,
                               const std::vector<TargetSet>& targets);

}  // namespace das
