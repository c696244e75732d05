// Microbenchmarks for the hot paths of the synthesis loop: pyramid
// compose/backprop, resampling, the toy encoder gradient, a full
// optimizer step, and the spectrum diagnostic.

#include <benchmark/benchmark.h>

#include "das/diagnostics.hpp"
#include "das/image.hpp"
#include "das/optimizer.hpp"
#include "das/pyramid.hpp"
#include "das/toy_encoder.hpp"

namespace {

das::PyramidImage make_pyramid(int canvas) {
  das::PyramidInit init;
  init.kind = das::PyramidInit::Kind::Gaussian;
  return das::new_pyramid(das::default_schedule(canvas), canvas, init, 7);
}

void bench_compose(benchmark::State& state) {
  const int canvas = static_cast<int>(state.range(0));
  das::PyramidImage p = make_pyramid(canvas);
  for (auto _ : state) {
    das::Image img = das::compose(p);
    benchmark::DoNotOptimize(img.data.data());
  }
}
BENCHMARK(bench_compose)->Arg(96)->Arg(336);

void bench_backprop(benchmark::State& state) {
  const int canvas = static_cast<int>(state.range(0));
  das::PyramidImage p = make_pyramid(canvas);
  das::Image grad(canvas, canvas, 3, 1.0);
  for (auto _ : state) {
    auto grads = das::backprop_to_components(grad, p);
    benchmark::DoNotOptimize(grads.data());
  }
}
BENCHMARK(bench_backprop)->Arg(96)->Arg(336);

void bench_resize_bilinear(benchmark::State& state) {
  das::Image src(32, 32, 3, 0.25);
  const int out = static_cast<int>(state.range(0));
  for (auto _ : state) {
    das::Image dst = das::resize_bilinear(src, out);
    benchmark::DoNotOptimize(dst.data.data());
  }
}
BENCHMARK(bench_resize_bilinear)->Arg(224)->Arg(336);

void bench_area_resample(benchmark::State& state) {
  das::Image src(336, 336, 3, 0.25);
  const int out = static_cast<int>(state.range(0));
  for (auto _ : state) {
    das::Image dst = das::area_resample(src, out);
    benchmark::DoNotOptimize(dst.data.data());
  }
}
BENCHMARK(bench_area_resample)->Arg(224)->Arg(32);

void bench_toy_gradient(benchmark::State& state) {
  const int out = static_cast<int>(state.range(0));
  das::ToyEncoder enc(out);
  das::Image view(out, out, 3, 0.5);
  das::TargetSet targets{{enc.embed_image(view), 1.0, "self"}};
  das::Image grad(out, out, 3);
  for (auto _ : state) {
    double score = enc.objective_gradient(view, targets, &grad);
    benchmark::DoNotOptimize(score);
  }
}
BENCHMARK(bench_toy_gradient)->Arg(64)->Arg(224);

void bench_das_step(benchmark::State& state) {
  das::RunConfig cfg;
  cfg.out_size = 48;
  cfg.shift_max = 8;
  cfg.batch = 8;
  cfg.steps = 1;
  cfg.init.kind = das::PyramidInit::Kind::Gaussian;
  das::ToyEncoder enc(cfg.out_size);
  das::TargetSet targets{{enc.embed_image(das::Image(48, 48, 3, 0.5)),
                          1.0, "self"}};
  std::vector<das::TargetSet> per_encoder{targets};
  std::vector<const das::Encoder*> encoders{&enc};
  das::EnsembleObjective objective(encoders, per_encoder,
                                   das::GradMode::RawMean);
  das::PyramidImage p = das::new_pyramid(cfg.schedule(), cfg.canvas_size(),
                                         cfg.init, cfg.seed);
  for (auto _ : state) {
    das::StepRecord rec = das::das_step(p, cfg, objective, nullptr, nullptr, 0);
    benchmark::DoNotOptimize(rec.objective);
  }
}
BENCHMARK(bench_das_step);

void bench_power_spectrum(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  das::Image img = das::synthesize_power_law(side, 2.0, 11);
  for (auto _ : state) {
    das::SpectrumReport rep = das::power_spectrum(img);
    benchmark::DoNotOptimize(rep.slope);
  }
}
BENCHMARK(bench_power_spectrum)->Arg(64)->Arg(224);

}  // namespace

BENCHMARK_MAIN();
