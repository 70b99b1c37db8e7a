#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "xrnpe/tensor.hpp"

namespace xrnpe::xten {

// Layout (all integers little-endian):
//   "XTEN" | u16 version | u8 dtype | u8 rank | rank x u32 dims | payload
// Payload packs element bits little-endian; 4-bit elements go two per byte,
// low nibble first. Payload length is ceil(count * bits / 8) exactly.

inline constexpr std::uint16_t kVersion = 1;

std::vector<std::uint8_t> serialize(const Tensor& tensor);

/// Throws DataError on bad magic, unknown version/dtype, truncation,
/// trailing bytes or nonzero padding nibble.
Tensor parse(std::span<const std::uint8_t> bytes);

Tensor read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Tensor& tensor);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

}  // namespace xrnpe::xten
