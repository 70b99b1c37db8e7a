#include "xrnpe/xten.hpp"

#include <fstream>
#include <iterator>
#include <string>

#include "xrnpe/error.hpp"

namespace xrnpe::xten {

namespace {

void put_le(std::vector<std::uint8_t>& out, std::uint64_t value, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> bytes, std::size_t offset, int count) {
  std::uint64_t value = 0;
  for (int i = 0; i < count; ++i) value |= static_cast<std::uint64_t>(bytes[offset + i]) << (8 * i);
  return value;
}

}  // namespace

std::vector<std::uint8_t> serialize(const Tensor& tensor) {
  if (tensor.dims.size() > 255) throw DataError("XTEN rank exceeds 255");
  if (element_count(tensor.dims) != tensor.data.size()) throw DataError("tensor data does not match dims");
  std::vector<std::uint8_t> out = {'X', 'T', 'E', 'N'};
  put_le(out, kVersion, 2);
  out.push_back(static_cast<std::uint8_t>(tensor.dtype));
  out.push_back(static_cast<std::uint8_t>(tensor.dims.size()));
  for (std::uint32_t d : tensor.dims) put_le(out, d, 4);

  const int bits = element_bits(tensor.dtype);
  if (bits == 4) {
    for (std::size_t i = 0; i < tensor.data.size(); i += 2) {
      std::uint8_t byte = static_cast<std::uint8_t>(tensor.data[i] & 0xFu);
      if (i + 1 < tensor.data.size()) byte |= static_cast<std::uint8_t>((tensor.data[i + 1] & 0xFu) << 4);
      out.push_back(byte);
    }
  } else {
    for (std::uint64_t element : tensor.data) put_le(out, element, bits / 8);
  }
  return out;
}

Tensor parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw DataError("XTEN container truncated (header)");
  if (bytes[0] != 'X' || bytes[1] != 'T' || bytes[2] != 'E' || bytes[3] != 'N') {
    throw DataError("bad XTEN magic");
  }
  const auto version = static_cast<std::uint16_t>(get_le(bytes, 4, 2));
  if (version != kVersion) throw DataError("unsupported XTEN version " + std::to_string(version));
  Tensor tensor;
  tensor.dtype = dtype_from_code(bytes[6]);
  const std::size_t rank = bytes[7];
  std::size_t offset = 8;
  if (bytes.size() < offset + 4 * rank) throw DataError("XTEN container truncated (dims)");
  for (std::size_t i = 0; i < rank; ++i) {
    tensor.dims.push_back(static_cast<std::uint32_t>(get_le(bytes, offset, 4)));
    offset += 4;
  }
  const std::size_t count = element_count(tensor.dims);
  const int bits = element_bits(tensor.dtype);
  const std::size_t payload = (count * static_cast<std::size_t>(bits) + 7) / 8;
  if (bytes.size() < offset + payload) throw DataError("XTEN container truncated (payload)");
  if (bytes.size() > offset + payload) throw DataError("XTEN container has trailing bytes");

  tensor.data.reserve(count);
  if (bits == 4) {
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint8_t byte = bytes[offset + i / 2];
      tensor.data.push_back((i % 2 == 0) ? (byte & 0xFu) : (byte >> 4));
    }
    if (count % 2 == 1 && (bytes[offset + count / 2] >> 4) != 0) {
      throw DataError("XTEN padding nibble is nonzero");
    }
  } else {
    const int width = bits / 8;
    for (std::size_t i = 0; i < count; ++i) {
      tensor.data.push_back(get_le(bytes, offset + i * static_cast<std::size_t>(width), width));
    }
  }
  return tensor;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Tensor read_file(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_bytes(path);
  try {
    return parse(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_file(const std::filesystem::path& path, const Tensor& tensor) {
  const std::vector<std::uint8_t> bytes = serialize(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace xrnpe::xten
