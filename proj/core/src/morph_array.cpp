#include "xrnpe/morph_array.hpp"

#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "xrnpe/error.hpp"
#include "xrnpe/exact.hpp"
#include "xrnpe/parallel.hpp"

namespace xrnpe {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

nlohmann::ordered_json ratio_json(std::uint64_t num, std::uint64_t den) {
  nlohmann::ordered_json j;
  if (den == 0) {
    j["exact"] = "0";
    j["approx"] = 0.0;
    return j;
  }
  const Rational r{BigInt(num), BigInt(den)};
  j["exact"] = to_rational_string(r);
  j["approx"] = to_double(r);
  return j;
}

}  // namespace

void ArrayConfig::validate() const {
  if (rows != cols || (rows != 8 && rows != 16)) {
    throw std::invalid_argument("array must be 8x8 or 16x16, got " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
  if (k_max == 0) throw std::invalid_argument("k_max must be at least 1");
  if (output && output->is_real()) throw std::invalid_argument("array output format must be a posit or FP4");
}

double RunStats::effective_ops_per_byte() const {
  const std::uint64_t bytes = bytes_read + bytes_written;
  return bytes == 0 ? 0.0 : 2.0 * static_cast<double>(mac_ops) / static_cast<double>(bytes);
}

RunStats& RunStats::operator+=(const RunStats& other) {
  mac_ops += other.mac_ops;
  operand_gated += other.operand_gated;
  rmmec_cells_fired += other.rmmec_cells_fired;
  rmmec_cells_gated += other.rmmec_cells_gated;
  bytes_read += other.bytes_read;
  bytes_written += other.bytes_written;
  cycles += other.cycles;
  tiles += other.tiles;
  return *this;
}

Traffic traffic_model(std::uint64_t m, std::uint64_t k, std::uint64_t n, const ArrayConfig& cfg) {
  cfg.validate();
  if (m == 0 || k == 0 || n == 0) throw std::invalid_argument("traffic_model needs positive dims");
  const auto bits = static_cast<std::uint64_t>(cfg.format().n());
  const std::uint64_t a_reads = ceil_div(n, static_cast<std::uint64_t>(cfg.cols));
  const std::uint64_t b_reads = ceil_div(m, static_cast<std::uint64_t>(cfg.rows));
  const std::uint64_t read_bits = (m * k * a_reads + k * n * b_reads) * bits;
  const std::uint64_t write_bits = m * n * static_cast<std::uint64_t>(cfg.output_format().n());
  return {ceil_div(read_bits, 8), ceil_div(write_bits, 8)};
}

GemmResult gemm(const Tensor& a, const Tensor& b, const ArrayConfig& cfg) {
  cfg.validate();
  if (a.rank() != 2 || b.rank() != 2) throw DataError("gemm operands must be rank-2");
  const FormatSpec format = cfg.format();
  const DType dtype = dtype_of(format);
  if (a.dtype != dtype || b.dtype != dtype) {
    throw DataError("gemm operand format does not match array mode " + format.name());
  }
  const std::uint64_t m = a.rows();
  const std::uint64_t k = a.cols();
  const std::uint64_t n = b.cols();
  if (b.rows() != k) {
    throw DataError("gemm shape mismatch: A is " + std::to_string(m) + "x" + std::to_string(k) + ", B is " +
                    std::to_string(b.rows()) + "x" + std::to_string(n));
  }
  if (m == 0 || k == 0 || n == 0) throw DataError("gemm needs non-empty operands");
  if (k > cfg.k_max) {
    throw ContractViolation("reduction length " + std::to_string(k) + " exceeds k_max " + std::to_string(cfg.k_max));
  }

  const PrecSel sel = cfg.sel;
  const auto lanes = static_cast<std::uint64_t>(sel.lane_count());
  const std::uint64_t groups = ceil_div(n, lanes);
  const auto rows = static_cast<std::uint64_t>(cfg.rows);
  const auto cols = static_cast<std::uint64_t>(cfg.cols);
  const std::uint64_t row_tiles = ceil_div(m, rows);
  const std::uint64_t col_tiles = ceil_div(groups, cols);
  const std::uint64_t tile_count = row_tiles * col_tiles;

  GemmResult result;
  result.c = Tensor::zeros(dtype_of(cfg.output_format()), {static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(n)});

  const std::size_t workers = worker_count(tile_count, cfg.threads);
  std::vector<SimdMac> macs(workers, SimdMac(sel, cfg.output));
  std::vector<MacStats> worker_stats(workers);

  parallel_for(tile_count, cfg.threads, [&](std::size_t worker, std::size_t tile) {
    SimdMac& mac = macs[worker];
    const std::uint64_t tr = tile / col_tiles;
    const std::uint64_t tc = tile % col_tiles;
    std::vector<std::uint16_t> a_words(k);
    std::vector<std::uint16_t> b_words(k);
    for (std::uint64_t r = 0; r < rows; ++r) {
      const std::uint64_t i = tr * rows + r;
      if (i >= m) break;
      for (std::uint64_t c = 0; c < cols; ++c) {
        const std::uint64_t g = tc * cols + c;
        if (g >= groups) break;
        const std::uint64_t j0 = g * lanes;
        const auto active = static_cast<int>(std::min(lanes, n - j0));
        for (std::uint64_t kk = 0; kk < k; ++kk) {
          std::uint16_t aw = 0;
          std::uint16_t bw = 0;
          const auto a_bits = a.bits(i * k + kk);
          for (int lane = 0; lane < active; ++lane) {
            aw = insert_lane(aw, lane, a_bits, sel);
            bw = insert_lane(bw, lane, b.bits(kk * n + j0 + static_cast<std::uint64_t>(lane)), sel);
          }
          a_words[kk] = aw;
          b_words[kk] = bw;
        }
        const DotResult dr = mac.dot(a_words, b_words, cfg.rounding, active, cfg.k_max);
        for (int lane = 0; lane < active; ++lane) {
          result.c.data[i * n + j0 + static_cast<std::uint64_t>(lane)] = dr.lanes[static_cast<std::size_t>(lane)];
        }
        worker_stats[worker] += dr.stats;
      }
    }
  });

  MacStats total;
  for (const MacStats& s : worker_stats) total += s;
  const Traffic traffic = traffic_model(m, k, n, cfg);
  result.stats.mac_ops = total.mac_ops;
  result.stats.operand_gated = total.operand_gated;
  result.stats.rmmec_cells_fired = total.cells.cells_fired;
  result.stats.rmmec_cells_gated = total.cells.cells_gated;
  result.stats.bytes_read = traffic.bytes_read;
  result.stats.bytes_written = traffic.bytes_written;
  result.stats.tiles = tile_count;
  result.stats.cycles = tile_count * k;
  return result;
}

std::string mode_name(const PrecSel& sel) {
  switch (sel.mode) {
    case SimdMode::X4_4bit: return sel.four_bit == FourBitKind::Fp4 ? "x4_fp4" : "x4_posit4";
    case SimdMode::X2_Posit8: return "x2_posit8";
    case SimdMode::X1_Posit16: return "x1_posit16";
  }
  return "unknown";
}

PrecSel parse_mode(const std::string& name) {
  if (name == "x4_fp4") return {SimdMode::X4_4bit, FourBitKind::Fp4};
  if (name == "x4_posit4") return {SimdMode::X4_4bit, FourBitKind::Posit4};
  if (name == "x2_posit8") return {SimdMode::X2_Posit8, FourBitKind::Fp4};
  if (name == "x1_posit16") return {SimdMode::X1_Posit16, FourBitKind::Fp4};
  if (const auto format = parse_format(name); format && !format->is_real()) return PrecSel::for_format(*format);
  throw std::invalid_argument("unknown precision mode '" + name + "'");
}

std::string report_json(const RunStats& stats, const ArrayConfig& cfg) {
  nlohmann::ordered_json j;
  j["mode"] = mode_name(cfg.sel);
  j["format"] = cfg.format().name();
  j["output_format"] = cfg.output_format().name();
  j["array"] = std::to_string(cfg.rows) + "x" + std::to_string(cfg.cols);
  j["mac_ops"] = stats.mac_ops;
  j["operand_gated"] = stats.operand_gated;
  j["operand_gated_fraction"] = ratio_json(stats.operand_gated, stats.mac_ops);
  j["rmmec_cells_fired"] = stats.rmmec_cells_fired;
  j["rmmec_cells_gated"] = stats.rmmec_cells_gated;
  j["rmmec_utilization"] = ratio_json(stats.rmmec_cells_fired, stats.rmmec_cells_fired + stats.rmmec_cells_gated);
  j["bytes_read"] = stats.bytes_read;
  j["bytes_written"] = stats.bytes_written;
  j["tiles"] = stats.tiles;
  j["cycles_estimate"] = stats.cycles;
  j["effective_ops_per_byte"] = ratio_json(2 * stats.mac_ops, stats.bytes_read + stats.bytes_written);
  return j.dump(2) + "\n";
}

std::string report_csv(const RunStats& stats, const ArrayConfig& cfg) {
  std::ostringstream out;
  out << "mode,array,mac_ops,operand_gated,rmmec_cells_fired,rmmec_cells_gated,bytes_read,bytes_written,"
         "tiles,cycles_estimate,effective_ops_per_byte_exact,effective_ops_per_byte\n";
  const auto ratio = ratio_json(2 * stats.mac_ops, stats.bytes_read + stats.bytes_written);
  out << mode_name(cfg.sel) << ',' << cfg.rows << 'x' << cfg.cols << ',' << stats.mac_ops << ','
      << stats.operand_gated << ',' << stats.rmmec_cells_fired << ',' << stats.rmmec_cells_gated << ','
      << stats.bytes_read << ',' << stats.bytes_written << ',' << stats.tiles << ',' << stats.cycles << ','
      << ratio["exact"].get<std::string>() << ',' << ratio["approx"].dump() << '\n';
  return out.str();
}

}  // namespace xrnpe
