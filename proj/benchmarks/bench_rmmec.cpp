#include <benchmark/benchmark.h>

#include "xrnpe/rmmec.hpp"
#include "xrnpe/rng.hpp"

using namespace xrnpe;

namespace {

void BM_ComposedMul(benchmark::State& state) {
  const auto width = static_cast<MulWidth>(state.range(0));
  MulBlockArray grid(width);
  Rng rng(3);
  const std::uint32_t mask = (1u << bits_of(width)) - 1u;
  std::vector<std::uint32_t> ops(2048);
  for (auto& v : ops) v = static_cast<std::uint32_t>(rng.next()) & mask;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(grid.multiply(ops[i], ops[i + 1]));
    i = (i + 2) & 2047;
  }
  state.counters["utilization"] = grid.stats().utilization();
}
BENCHMARK(BM_ComposedMul)->Arg(2)->Arg(6)->Arg(12);

}  // namespace
