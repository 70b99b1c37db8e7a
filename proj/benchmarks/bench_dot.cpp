#include <benchmark/benchmark.h>

#include "xrnpe/codec.hpp"
#include "xrnpe/rng.hpp"
#include "xrnpe/simd_mac.hpp"

using namespace xrnpe;

namespace {

// Full 16-bit words: every lane carries a finite operand.
std::vector<std::uint16_t> random_words(std::size_t n, const PrecSel& sel, std::uint64_t seed) {
  Rng rng(seed);
  const FormatSpec f = sel.lane_format();
  std::vector<std::uint16_t> words(n, 0);
  for (auto& w : words) {
    for (int lane = 0; lane < sel.lane_count(); ++lane) {
      std::uint32_t bits = 0;
      do {
        bits = static_cast<std::uint32_t>(rng.below(std::uint64_t{f.mask()} + 1));
      } while (is_nar(bits, f));
      w = insert_lane(w, lane, bits, sel);
    }
  }
  return words;
}

void BM_FusedDot(benchmark::State& state) {
  const PrecSel sels[] = {{SimdMode::X4_4bit, FourBitKind::Fp4},
                          {SimdMode::X4_4bit, FourBitKind::Posit4},
                          {SimdMode::X2_Posit8, FourBitKind::Fp4},
                          {SimdMode::X1_Posit16, FourBitKind::Fp4}};
  const PrecSel sel = sels[state.range(0)];
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto a = random_words(n, sel, 1);
  const auto b = random_words(n, sel, 2);
  SimdMac mac(sel, kPosit16_1);
  for (auto _ : state) benchmark::DoNotOptimize(mac.dot(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * sel.lane_count());
  state.SetLabel(sel.lane_format().name());
}
BENCHMARK(BM_FusedDot)->ArgsProduct({{0, 1, 2, 3}, {16, 256}});

}  // namespace
