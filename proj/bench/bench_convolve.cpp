#include <benchmark/benchmark.h>

#include <cmath>

#include "frackap/translate.hpp"

using namespace frackap;

namespace {

struct Inputs {
  BesselIndex index{{1.5}};
  GridFunction f;
  GridFunction g;

  explicit Inputs(double h0)
      : f(make(index, h0, [](double x) { return std::exp(-0.5 * x * x); })),
        g(make(index, h0, [](double x) { return std::exp(-x * x); })) {}

  static GridFunction make(const BesselIndex& I, double h0, double (*fn)(double)) {
    return GridFunction::sample_radial(I, {graded_axis_for(I, 0, 6.0, h0, 1.1, 8)}, fn, true);
  }
};

void BM_convolve_parallel(benchmark::State& state) {
  const Inputs in(1.0 / static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(bessel_convolve(in.index, in.f, in.g));
  state.counters["nodes"] = static_cast<double>(in.f.values().size());
}

void BM_convolve_serial(benchmark::State& state) {
  const Inputs in(1.0 / static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(bessel_convolve_reference(in.index, in.f, in.g));
  state.counters["nodes"] = static_cast<double>(in.f.values().size());
}

}  // namespace

BENCHMARK(BM_convolve_parallel)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_convolve_serial)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
