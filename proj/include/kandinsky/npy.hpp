#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kandinsky::npy {

/// Element types accepted by the reader and writer (little-endian, C order only).
enum class DType { float32, float64, uint8, uint16, uint32, int64 };

std::string_view descr(DType t);
std::size_t item_size(DType t);

template <typename T> constexpr DType dtype_of();
template <> constexpr DType dtype_of<float>() { return DType::float32; }
template <> constexpr DType dtype_of<double>() { return DType::float64; }
template <> constexpr DType dtype_of<std::uint8_t>() { return DType::uint8; }
template <> constexpr DType dtype_of<std::uint16_t>() { return DType::uint16; }
template <> constexpr DType dtype_of<std::uint32_t>() { return DType::uint32; }
template <> constexpr DType dtype_of<std::int64_t>() { return DType::int64; }

struct Header {
  DType dtype = DType::float32;
  std::vector<std::size_t> shape;

  std::size_t element_count() const;
};

/// Raw decoded file: header plus the payload bytes.
struct Array {
  Header header;
  std::vector<std::byte> payload;
};

/// Serializes a v1.0 header (magic, version, length, padded dict) for the given array.
std::vector<std::byte> encode_header(const Header& header);

/// Parses a complete NPY byte stream. Throws FormatError on any malformed input.
Array decode(std::span<const std::byte> bytes);
std::vector<std::byte> encode(const Header& header, std::span<const std::byte> payload);

Array read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Header& header,
                std::span<const std::byte> payload);

template <typename T>
struct Typed {
  std::vector<std::size_t> shape;
  std::vector<T> values;
};

/// Reads a file and checks that its dtype is exactly T.
template <typename T>
Typed<T> read(const std::filesystem::path& path);

template <typename T>
void write(const std::filesystem::path& path, std::span<const std::size_t> shape,
           std::span<const T> values);

}  // namespace kandinsky::npy
