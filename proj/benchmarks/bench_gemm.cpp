#include <benchmark/benchmark.h>

#include "xrnpe/morph_array.hpp"
#include "xrnpe/rng.hpp"

using namespace xrnpe;

namespace {

Tensor random_tensor(DType dtype, std::uint32_t rows, std::uint32_t cols, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> values(std::size_t{rows} * cols);
  for (double& v : values) v = rng.normal();
  return Tensor::encode_reals(dtype, {rows, cols}, values);
}

void BM_Gemm(benchmark::State& state) {
  const DType dtypes[] = {DType::Fp4, DType::Posit8_0, DType::Posit16_1};
  const DType dtype = dtypes[state.range(0)];
  const auto n = static_cast<std::uint32_t>(state.range(1));
  const Tensor a = random_tensor(dtype, n, n, 1);
  const Tensor b = random_tensor(dtype, n, n, 2);
  ArrayConfig cfg;
  cfg.sel = PrecSel::for_format(format_of(dtype));
  cfg.output = kPosit16_1;
  for (auto _ : state) benchmark::DoNotOptimize(gemm(a, b, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * n * n);
  state.SetLabel(format_of(dtype).name());
}
BENCHMARK(BM_Gemm)->ArgsProduct({{0, 1, 2}, {16, 64}})->Unit(benchmark::kMillisecond);

}  // namespace
