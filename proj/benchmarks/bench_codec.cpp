#include <benchmark/benchmark.h>

#include "xrnpe/codec.hpp"
#include "xrnpe/rng.hpp"

using namespace xrnpe;

namespace {

const FormatSpec& format_at(int i) {
  static const FormatSpec formats[] = {kFp4, kPosit4_1, kPosit8_0, kPosit16_1};
  return formats[i];
}

void BM_Decode(benchmark::State& state) {
  const FormatSpec& f = format_at(static_cast<int>(state.range(0)));
  std::uint32_t bits = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode(bits, f));
    bits = (bits + 1) & f.mask();
  }
  state.SetLabel(f.name());
}
BENCHMARK(BM_Decode)->DenseRange(0, 3);

// Exact rational encode: the slow, reference path.
void BM_EncodeExact(benchmark::State& state) {
  const FormatSpec& f = format_at(static_cast<int>(state.range(0)));
  std::vector<Rational> values;
  for (const CodecEntry& e : enumerate(f)) {
    if (!e.decoded.is_nar()) values.push_back(exact_value(e.decoded) * Rational(3, 5));
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode(values[i], f));
    i = (i + 1) % values.size();
  }
  state.SetLabel(f.name());
}
BENCHMARK(BM_EncodeExact)->DenseRange(0, 3);

void BM_LatticeRound(benchmark::State& state) {
  const FormatSpec& f = format_at(static_cast<int>(state.range(0)));
  const LatticeRounder r(f);
  Rng rng(1);
  std::vector<double> xs(4096);
  for (double& x : xs) x = rng.normal(0.0, 2.0);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(r.round(xs[i]));
    i = (i + 1) & 4095;
  }
  state.SetLabel(f.name());
}
BENCHMARK(BM_LatticeRound)->DenseRange(0, 3);

}  // namespace
