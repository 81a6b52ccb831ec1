#include "kandinsky/npy.hpp"

#include "kandinsky/error.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "NPY payloads are read and written as little-endian");

namespace kandinsky::npy {
namespace {

constexpr std::string_view kMagic = "\x93NUMPY";
constexpr std::size_t kPreamble = 10;  // magic(6) + version(2) + header_len(2)
constexpr std::size_t kAlign = 64;

std::optional<DType> parse_descr(std::string_view d) {
  for (DType t : {DType::float32, DType::float64, DType::uint8, DType::uint16,
                  DType::uint32, DType::int64}) {
    if (d == descr(t)) return t;
  }
  // numpy writes single-byte types with '|' but '<u1' is equally valid.
  if (d == "<u1") return DType::uint8;
  return std::nullopt;
}

/// Minimal parser for the Python dict literal numpy emits in the header.
class DictParser {
 public:
  explicit DictParser(std::string_view text) : text_(text) {}

  Header parse() {
    std::optional<DType> dtype;
    std::optional<bool> fortran;
    std::optional<std::vector<std::size_t>> shape;
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') { ++pos_; break; }
      const std::string key = parse_string();
      expect(':');
      if (key == "descr") {
        const std::string d = parse_string();
        dtype = parse_descr(d);
        if (!dtype) fail("unsupported dtype '" + d + "'");
      } else if (key == "fortran_order") {
        fortran = parse_bool();
      } else if (key == "shape") {
        shape = parse_shape();
      } else {
        fail("unexpected header key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') { ++pos_; continue; }
      expect('}');
      break;
    }
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters after header dict");
    if (!dtype || !fortran || !shape) fail("header is missing descr, fortran_order or shape");
    if (*fortran) fail("fortran_order=True is not supported");
    return Header{*dtype, *shape};
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("npy header: " + what);
  }
  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\n' || text_[pos_] == '\t'))
      ++pos_;
  }
  char peek() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of header");
    return text_[pos_];
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  std::string parse_string() {
    const char quote = peek();
    if (quote != '\'' && quote != '"') fail("expected string");
    ++pos_;
    const auto end = text_.find(quote, pos_);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string s(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return s;
  }
  bool parse_bool() {
    skip_ws();
    if (text_.substr(pos_, 4) == "True") { pos_ += 4; return true; }
    if (text_.substr(pos_, 5) == "False") { pos_ += 5; return false; }
    fail("expected True or False");
  }
  std::vector<std::size_t> parse_shape() {
    expect('(');
    std::vector<std::size_t> dims;
    while (true) {
      if (peek() == ')') { ++pos_; break; }
      std::size_t value = 0;
      std::size_t digits = 0;
      while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
        value = value * 10 + static_cast<std::size_t>(text_[pos_] - '0');
        ++pos_;
        ++digits;
      }
      if (digits == 0) fail("expected dimension");
      dims.push_back(value);
      if (peek() == ',') { ++pos_; continue; }
      expect(')');
      break;
    }
    return dims;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string shape_literal(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  if (shape.size() == 1) os << ',';
  os << ')';
  return os.str();
}

}  // namespace

std::string_view descr(DType t) {
  switch (t) {
    case DType::float32: return "<f4";
    case DType::float64: return "<f8";
    case DType::uint8: return "|u1";
    case DType::uint16: return "<u2";
    case DType::uint32: return "<u4";
    case DType::int64: return "<i8";
  }
  return "";
}

std::size_t item_size(DType t) {
  switch (t) {
    case DType::float32: return 4;
    case DType::float64: return 8;
    case DType::uint8: return 1;
    case DType::uint16: return 2;
    case DType::uint32: return 4;
    case DType::int64: return 8;
  }
  return 0;
}

std::size_t Header::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::vector<std::byte> encode_header(const Header& header) {
  std::string dict = "{'descr': '" + std::string(descr(header.dtype)) +
                     "', 'fortran_order': False, 'shape': " + shape_literal(header.shape) + ", }";
  const std::size_t unpadded = kPreamble + dict.size() + 1;
  const std::size_t padded = (unpadded + kAlign - 1) / kAlign * kAlign;
  dict.append(padded - unpadded, ' ');
  dict.push_back('\n');
  if (dict.size() > 0xFFFF) throw FormatError("npy header too long for format version 1.0");

  std::vector<std::byte> out;
  out.reserve(padded);
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  out.push_back(std::byte{1});
  out.push_back(std::byte{0});
  out.push_back(static_cast<std::byte>(dict.size() & 0xFF));
  out.push_back(static_cast<std::byte>(dict.size() >> 8));
  for (char c : dict) out.push_back(static_cast<std::byte>(c));
  return out;
}

Array decode(std::span<const std::byte> bytes) {
  if (bytes.size() < kPreamble) throw FormatError("npy: file too short for header");
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
    throw FormatError("npy: bad magic string");
  const auto major = std::to_integer<unsigned>(bytes[6]);
  const auto minor = std::to_integer<unsigned>(bytes[7]);
  if (major != 1 || minor != 0)
    throw FormatError("npy: only format version 1.0 is supported");
  const std::size_t header_len =
      std::to_integer<std::size_t>(bytes[8]) | (std::to_integer<std::size_t>(bytes[9]) << 8);
  if (bytes.size() < kPreamble + header_len) throw FormatError("npy: truncated header");
  std::string_view text(reinterpret_cast<const char*>(bytes.data()) + kPreamble, header_len);
  if (text.empty() || text.back() != '\n') throw FormatError("npy: header not newline-terminated");

  Array array;
  array.header = DictParser(text).parse();
  const std::size_t expected = array.header.element_count() * item_size(array.header.dtype);
  const auto payload = bytes.subspan(kPreamble + header_len);
  if (payload.size() != expected) {
    throw FormatError("npy: payload has " + std::to_string(payload.size()) +
                      " bytes, header declares " + std::to_string(expected));
  }
  array.payload.assign(payload.begin(), payload.end());
  return array;
}

std::vector<std::byte> encode(const Header& header, std::span<const std::byte> payload) {
  if (payload.size() != header.element_count() * item_size(header.dtype))
    throw FormatError("npy: payload size does not match shape");
  auto out = encode_header(header);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Array read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  try {
    return decode(std::as_bytes(std::span<const char>(raw)));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_file(const std::filesystem::path& path, const Header& header,
                std::span<const std::byte> payload) {
  const auto bytes = encode(header, payload);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

template <typename T>
Typed<T> read(const std::filesystem::path& path) {
  auto array = read_file(path);
  if (array.header.dtype != dtype_of<T>()) {
    throw FormatError(path.string() + ": expected dtype " + std::string(descr(dtype_of<T>())) +
                      ", found " + std::string(descr(array.header.dtype)));
  }
  Typed<T> typed;
  typed.shape = std::move(array.header.shape);
  typed.values.resize(array.payload.size() / sizeof(T));
  std::memcpy(typed.values.data(), array.payload.data(), array.payload.size());
  return typed;
}

template <typename T>
void write(const std::filesystem::path& path, std::span<const std::size_t> shape,
           std::span<const T> values) {
  Header header{dtype_of<T>(), {shape.begin(), shape.end()}};
  write_file(path, header, std::as_bytes(values));
}

#define KANDINSKY_NPY_INSTANTIATE(T)                                                        \
  template Typed<T> read<T>(const std::filesystem::path&);                                 \
  template void write<T>(const std::filesystem::path&, std::span<const std::size_t>,       \
                         std::span<const T>);
KANDINSKY_NPY_INSTANTIATE(float)
KANDINSKY_NPY_INSTANTIATE(double)
KANDINSKY_NPY_INSTANTIATE(std::uint8_t)
KANDINSKY_NPY_INSTANTIATE(std::uint16_t)
KANDINSKY_NPY_INSTANTIATE(std::uint32_t)
KANDINSKY_NPY_INSTANTIATE(std::int64_t)
#undef KANDINSKY_NPY_INSTANTIATE

}  // namespace kandinsky::npy
