#include "das/diagnostics.hpp"

#include <fftw3.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "das/error.hpp"
#include "das/prng.hpp"
#include "json.hpp"

namespace das {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Unnormalized 2-D DFT of a real single-channel grid; out has side*side
// (re, im) pairs. sign = -1 forward, +1 inverse.
void dft2d(const std::vector<double>& re_in, int side, int sign,
           std::vector<double>& complex_out) {
  std::vector<double> in(static_cast<size_t>(side) * side * 2, 0.0);
  for (size_t i = 0; i < re_in.size(); ++i) in[2 * i] = re_in[i];
  complex_out.assign(in.size(), 0.0);
  fftw_plan plan = fftw_plan_dft_2d(
      side, side, reinterpret_cast<fftw_complex*>(in.data()),
      reinterpret_cast<fftw_complex*>(complex_out.data()),
      sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
}

int signed_freq(int k, int side) { return k <= side / 2 ? k : k - side; }

}  // namespace

SpectrumReport power_spectrum(const Image& image) {
  require(image.square(), "power_spectrum: image must be square");
  require(image.width >= 32, "power_spectrum: side must be >= 32");
  const int side = image.width;

  Image lum = luminance(image);
  double mean = 0.0;
  for (double v : lum.data) mean += v;
  mean /= static_cast<double>(lum.data.size());
  for (double& v : lum.data) v -= mean;

  SpectrumReport report;
  report.side = side;
  report.fit_lo = 4.0;
  report.fit_hi = side / 4.0;

  // Mean subtraction leaves rounding residue on a constant image, so the
  // degenerate check is on the mean square, not the raw total.
  double total = 0.0;
  for (double v : lum.data) total += v * v;
  if (total <= 1e-20 * static_cast<double>(lum.data.size())) {
    report.degenerate = true;
    return report;
  }

  std::vector<double> spectrum;
  dft2d(lum.data, side, -1, spectrum);

  const int max_bin = side / 2;
  std::vector<double> bin_power(max_bin + 1, 0.0);
  std::vector<int> bin_count(max_bin + 1, 0);
  for (int ky = 0; ky < side; ++ky) {
    const int fy = signed_freq(ky, side);
    for (int kx = 0; kx < side; ++kx) {
      const int fx = signed_freq(kx, side);
      const int r = static_cast<int>(
          std::lround(std::sqrt(double(fx) * fx + double(fy) * fy)));
      if (r > max_bin) continue;
      const size_t idx = 2 * (static_cast<size_t>(ky) * side + kx);
      const double p =
          spectrum[idx] * spectrum[idx] + spectrum[idx + 1] * spectrum[idx + 1];
      bin_power[r] += p;
      bin_count[r] += 1;
    }
  }

  for (int r = 1; r <= max_bin; ++r) {
    report.frequencies.push_back(static_cast<double>(r));
    report.power.push_back(bin_count[r] > 0 ? bin_power[r] / bin_count[r]
                                            : 0.0);
  }

  // Least squares on (log f, log P) over the fit band.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (size_t i = 0; i < report.frequencies.size(); ++i) {
    const double f = report.frequencies[i];
    if (f < report.fit_lo || f > report.fit_hi) continue;
    if (report.power[i] <= 0.0) continue;
    const double lx = std::log(f);
    const double ly = std::log(report.power[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) {
    // No broadband power to fit (e.g. a pure DC image): slope undefined.
    report.degenerate = true;
    return report;
  }
  const double denom = n * sxx - sx * sx;
  report.slope = (n * sxy - sx * sy) / denom;
  report.intercept = (sy - report.slope * sx) / n;

  double ss = 0.0;
  for (size_t i = 0; i < report.frequencies.size(); ++i) {
    const double f = report.frequencies[i];
    if (f < report.fit_lo || f > report.fit_hi || report.power[i] <= 0.0)
      continue;
    const double r =
        std::log(report.power[i]) - (report.intercept + report.slope * std::log(f));
    ss += r * r;
  }
  report.residual_rms = std::sqrt(ss / n);
  return report;
}

std::string SpectrumReport::to_json() const {
  nlohmann::json j;
  j["side"] = side;
  j["degenerate"] = degenerate;
  if (degenerate) {
    j["slope"] = nullptr;
  } else {
    j["slope"] = slope;
    j["intercept"] = intercept;
    j["residual_rms"] = residual_rms;
  }
  j["fit_band"] = {fit_lo, fit_hi};
  j["frequencies"] = frequencies;
  j["power"] = power;
  return j.dump(2);
}

void SpectrumReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  require(out.good(), "spectrum: cannot write " + path);
  out << "frequency,power\n";
  for (size_t i = 0; i < frequencies.size(); ++i) {
    out << frequencies[i] << "," << power[i] << "\n";
  }
}

Image synthesize_power_law(int side, double alpha, uint64_t seed) {
  require(side >= 32, "synthesize_power_law: side must be >= 32");
  SplitMix64 rng(derive_stream(seed, "power-law"));
  std::vector<double> spectrum(static_cast<size_t>(side) * side * 2, 0.0);
  for (int ky = 0; ky < side; ++ky) {
    const int fy = signed_freq(ky, side);
    for (int kx = 0; kx < side; ++kx) {
      const int fx = signed_freq(kx, side);
      const double f = std::sqrt(double(fx) * fx + double(fy) * fy);
      const size_t idx = 2 * (static_cast<size_t>(ky) * side + kx);
      if (f == 0.0) continue;  // zero DC
      const double amplitude = std::pow(f, -alpha / 2.0);
      spectrum[idx] = amplitude * rng.next_gaussian();
      spectrum[idx + 1] = amplitude * rng.next_gaussian();
    }
  }
  // Inverse transform of a non-Hermitian spectrum; the real part keeps the
  // same expected power profile.
  std::vector<double> re(spectrum.size() / 2);
  {
    std::vector<double> field(spectrum.size(), 0.0);
    fftw_plan plan = fftw_plan_dft_2d(
        side, side, reinterpret_cast<fftw_complex*>(spectrum.data()),
        reinterpret_cast<fftw_complex*>(field.data()), FFTW_BACKWARD,
        FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    for (size_t i = 0; i < re.size(); ++i) re[i] = field[2 * i];
  }
  Image out(side, side, 1);
  out.data = std::move(re);
  return out;
}

Psnr psnr(const Image& a, const Image& b) {
  require(a.same_shape(b), "psnr: size mismatch");
  require(!a.data.empty(), "psnr: empty image");
  double mse = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse == 0.0) return {true, 0.0};
  return {false, -10.0 * std::log10(mse)};
}

std::string psnr_to_string(const Psnr& p) {
  if (p.exact) return "exact";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f dB", p.db);
  return buf;
}

std::vector<AblationSpec> standard_ablation(const RunConfig& base) {
  std::vector<AblationSpec> specs(3);
  specs[0].name = "pixel";
  specs[0].cfg = base;
  specs[0].cfg.resolutions = {base.canvas_size()};
  specs[0].cfg.augment = false;
  specs[1].name = "pixel+augment";
  specs[1].cfg = base;
  specs[1].cfg.resolutions = {base.canvas_size()};
  specs[1].cfg.augment = true;
  specs[2].name = "das";
  specs[2].cfg = base;
  return specs;
}

AblationReport ablation_report(const std::vector<AblationSpec>& specs,
                               const std::vector<const Encoder*>& encoders,
                               const std::vector<TargetSet>& targets) {
  require(specs.size() >= 2, "ablation: at least two run configs required");
  AblationReport report;
  for (const AblationSpec& spec : specs) {
    EnsembleObjective objective(encoders, targets, spec.cfg.grad_mode);
    const auto t0 = std::chrono::steady_clock::now();
    RunTrace trace = das_optimize(spec.cfg, objective);
    const auto t1 = std::chrono::steady_clock::now();

    AblationColumn col;
    col.name = spec.name;
    col.final_objective = objective.eval(trace.final_image, nullptr);
    const SpectrumReport sr = power_spectrum(trace.final_image);
    col.spectrum_slope = sr.slope;
    col.spectrum_degenerate = sr.degenerate;
    col.seconds = std::chrono::duration<double>(t1 - t0).count();
    report.columns.push_back(std::move(col));
  }
  return report;
}

std::string AblationReport::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const AblationColumn& c : columns) {
    nlohmann::json col;
    col["name"] = c.name;
    col["final_objective"] = c.final_objective;
    if (c.spectrum_degenerate) {
      col["spectrum_slope"] = nullptr;
    } else {
      col["spectrum_slope"] = c.spectrum_slope;
    }
    col["seconds"] = c.seconds;
    j.push_back(col);
  }
  return j.dump(2);
}

std::string AblationReport::to_table() const {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-16s %14s %14s %10s\n", "column",
                "objective", "slope", "seconds");
  out += line;
  for (const AblationColumn& c : columns) {
    if (c.spectrum_degenerate) {
      std::snprintf(line, sizeof(line), "%-16s %14.6f %14s %10.2f\n",
                    c.name.c_str(), c.final_objective, "degenerate", c.seconds);
    } else {
      std::snprintf(line, sizeof(line), "%-16s %14.6f %14.3f %10.2f\n",
                    c.name.c_str(), c.final_objective, c.spectrum_slope,
                    c.seconds);
    }
    out += line;
  }
  return out;
}

}  // namespace das
