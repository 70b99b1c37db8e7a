#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"
#include "xrnpe/error.hpp"
#include "xrnpe/morph_array.hpp"

using namespace xrnpe;

namespace {

Tensor random_tensor(std::mt19937_64& rng, const FormatSpec& f, std::uint32_t rows, std::uint32_t cols,
                     double zero_fraction = 0.0) {
  Tensor t = Tensor::zeros(dtype_of(f), {rows, cols});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& x : t.data) x = u(rng) < zero_fraction ? 0u : testutil::random_bits(rng, f);
  return t;
}

ArrayConfig config_for(const FormatSpec& f, int size = 8, int threads = 1) {
  ArrayConfig cfg;
  cfg.rows = size;
  cfg.cols = size;
  cfg.sel = PrecSel::for_format(f);
  cfg.threads = threads;
  return cfg;
}

std::vector<std::uint32_t> row(const Tensor& t, std::uint32_t i) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t k = 0; k < t.cols(); ++k) out.push_back(t.bits(i * t.cols() + k));
  return out;
}

std::vector<std::uint32_t> col(const Tensor& t, std::uint32_t j) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t k = 0; k < t.rows(); ++k) out.push_back(t.bits(k * t.cols() + j));
  return out;
}

}  // namespace

TEST(ArrayConfig, Validation) {
  ArrayConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.rows = cfg.cols = 16;
  EXPECT_NO_THROW(cfg.validate());
  cfg.cols = 8;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.rows = cfg.cols = 4;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Gemm, IdentityReproducesB) {
  std::mt19937_64 rng(1);
  Tensor eye = Tensor::zeros(DType::Posit8_0, {8, 8});
  for (std::uint32_t i = 0; i < 8; ++i) eye.data[i * 8 + i] = 0x40;
  const Tensor b = random_tensor(rng, kPosit8_0, 8, 8);
  const GemmResult r = gemm(eye, b, config_for(kPosit8_0));
  EXPECT_EQ(r.c, b);
}

TEST(Gemm, ZeroAGatesEverything) {
  std::mt19937_64 rng(2);
  for (const FormatSpec& f : testutil::narrow_formats()) {
    const Tensor a = Tensor::zeros(dtype_of(f), {5, 7});
    const Tensor b = random_tensor(rng, f, 7, 9);
    const GemmResult r = gemm(a, b, config_for(f));
    EXPECT_EQ(r.stats.mac_ops, 5u * 7u * 9u);
    EXPECT_EQ(r.stats.operand_gated, r.stats.mac_ops);
    EXPECT_EQ(r.stats.rmmec_cells_fired, 0u);
    for (auto x : r.c.data) EXPECT_EQ(x, 0u);
  }
}

TEST(Gemm, MatchesOracleAndSimdDots) {
  std::mt19937_64 rng(3);
  for (const FormatSpec& f : testutil::narrow_formats()) {
    const oracle::Format of = testutil::to_oracle(f);
    for (auto [m, k, n] : {std::tuple{8u, 8u, 8u}, std::tuple{13u, 5u, 11u}, std::tuple{3u, 17u, 34u}}) {
      const Tensor a = random_tensor(rng, f, m, k, 0.2);
      const Tensor b = random_tensor(rng, f, k, n, 0.2);
      const GemmResult r = gemm(a, b, config_for(f));
      EXPECT_EQ(r.stats.mac_ops, std::uint64_t{m} * n * k);
      for (std::uint32_t i = 0; i < m; ++i) {
        for (std::uint32_t j = 0; j < n; ++j) {
          const auto ra = row(a, i);
          const auto cb = col(b, j);
          ASSERT_EQ(r.c.bits(i * n + j), oracle::rounded_dot(ra, cb, of)) << f.name();
          ASSERT_EQ(r.c.bits(i * n + j), dot_scalar(ra, cb, f));
        }
      }
    }
  }
}

TEST(Gemm, ThreadCountDoesNotChangeResults) {
  std::mt19937_64 rng(4);
  for (const FormatSpec& f : {kFp4, kPosit8_0}) {
    const Tensor a = random_tensor(rng, f, 37, 19, 0.1);
    const Tensor b = random_tensor(rng, f, 19, 45, 0.1);
    const GemmResult one = gemm(a, b, config_for(f, 8, 1));
    const GemmResult four = gemm(a, b, config_for(f, 8, 4));
    EXPECT_EQ(one.c, four.c);
    EXPECT_EQ(one.stats, four.stats);
  }
}

TEST(Gemm, TileAndCycleCounts) {
  std::mt19937_64 rng(5);
  const Tensor a = random_tensor(rng, kFp4, 16, 10);
  const Tensor b = random_tensor(rng, kFp4, 10, 40);
  const GemmResult r = gemm(a, b, config_for(kFp4));
  // 40 columns pack into 10 four-lane words: 2 row tiles x 2 column tiles.
  EXPECT_EQ(r.stats.tiles, 4u);
  EXPECT_EQ(r.stats.cycles, 40u);
  const GemmResult big = gemm(a, b, config_for(kFp4, 16));
  EXPECT_EQ(big.stats.tiles, 1u);
}

TEST(Gemm, Errors) {
  const Tensor a = Tensor::zeros(DType::Posit8_0, {4, 5});
  const Tensor b = Tensor::zeros(DType::Posit8_0, {6, 4});
  EXPECT_THROW(gemm(a, b, config_for(kPosit8_0)), DataError);
  const Tensor c = Tensor::zeros(DType::Posit16_1, {5, 4});
  EXPECT_THROW(gemm(a, c, config_for(kPosit8_0)), DataError);
  ArrayConfig small = config_for(kPosit8_0);
  small.k_max = 4;
  const Tensor d = Tensor::zeros(DType::Posit8_0, {5, 4});
  EXPECT_THROW(gemm(a, d, small), ContractViolation);
}

TEST(Traffic, ClosedFormExamples) {
  const Traffic t16 = traffic_model(8, 8, 8, config_for(kPosit16_1));
  EXPECT_EQ(t16.bytes_read, 256u);
  EXPECT_EQ(t16.bytes_written, 128u);
  const Traffic t4 = traffic_model(8, 8, 8, config_for(kFp4));
  EXPECT_EQ(t4.bytes_read * 4, t16.bytes_read);
  EXPECT_EQ(t4.bytes_written * 4, t16.bytes_written);
  // A and B each read twice.
  const Traffic t8 = traffic_model(16, 8, 16, config_for(kPosit8_0));
  EXPECT_EQ(t8.bytes_read, 2u * 16 * 8 + 2u * 8 * 16);
  EXPECT_EQ(t8.bytes_written, 256u);
  EXPECT_THROW(traffic_model(0, 1, 1, config_for(kFp4)), std::invalid_argument);
}

TEST(Traffic, HalvingBitsHalvesBytes) {
  for (auto [m, k, n] : {std::tuple{8u, 8u, 8u}, std::tuple{64u, 32u, 48u}}) {
    const Traffic t16 = traffic_model(m, k, n, config_for(kPosit16_1));
    const Traffic t8 = traffic_model(m, k, n, config_for(kPosit8_0));
    EXPECT_EQ(t8.bytes_read * 2, t16.bytes_read);
    EXPECT_EQ(t8.bytes_written * 2, t16.bytes_written);
  }
}

TEST(RunStats, OpsPerByteRatio) {
  std::mt19937_64 rng(8);
  const Tensor a16 = random_tensor(rng, kPosit16_1, 32, 32);
  const Tensor b16 = random_tensor(rng, kPosit16_1, 32, 32);
  const Tensor a4 = random_tensor(rng, kFp4, 32, 32);
  const Tensor b4 = random_tensor(rng, kFp4, 32, 32);
  const RunStats s16 = gemm(a16, b16, config_for(kPosit16_1)).stats;
  const RunStats s4 = gemm(a4, b4, config_for(kFp4)).stats;
  EXPECT_EQ(s16.mac_ops, s4.mac_ops);
  EXPECT_EQ(s4.effective_ops_per_byte(), 4.0 * s16.effective_ops_per_byte());
}

TEST(Report, JsonHasExactAndApproxRatios) {
  RunStats s;
  s.mac_ops = 3;
  s.bytes_read = 4;
  s.bytes_written = 5;
  const std::string j = report_json(s, config_for(kPosit8_0));
  EXPECT_NE(j.find("\"exact\": \"2/3\""), std::string::npos) << j;
  EXPECT_NE(j.find("\"mode\": \"x2_posit8\""), std::string::npos);
  const std::string c = report_csv(s, config_for(kPosit8_0));
  EXPECT_NE(c.find("x2_posit8,8x8,3,"), std::string::npos) << c;
}

TEST(Mode, ParseAndName) {
  for (const char* name : {"x4_fp4", "x4_posit4", "x2_posit8", "x1_posit16"}) EXPECT_EQ(mode_name(parse_mode(name)), name);
  EXPECT_EQ(mode_name(parse_mode("posit8_0")), "x2_posit8");
  EXPECT_THROW(parse_mode("x8"), std::invalid_argument);
}
