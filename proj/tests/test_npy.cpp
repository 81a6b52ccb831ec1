#include "kandinsky/error.hpp"
#include "kandinsky/npy.hpp"

#include "doctest.h"
#include "test_util.hpp"

#include <cstring>
#include <fstream>

using namespace kandinsky;

namespace {

std::vector<std::byte> bytes_of(const std::string& s) {
  std::vector<std::byte> b(s.size());
  std::memcpy(b.data(), s.data(), s.size());
  return b;
}

std::string text_of(std::span<const std::byte> b) {
  return {reinterpret_cast<const char*>(b.data()), b.size()};
}

}  // namespace

TEST_CASE("header layout matches numpy for a float32 grid") {
  const npy::Header h{npy::DType::float32, {2, 4, 4}};
  const auto bytes = npy::encode_header(h);
  REQUIRE(bytes.size() % 64 == 0);
  const auto text = text_of(bytes);
  CHECK(text.substr(0, 6) == "\x93NUMPY");
  CHECK(static_cast<int>(text[6]) == 1);
  CHECK(static_cast<int>(text[7]) == 0);
  CHECK(text.find("{'descr': '<f4', 'fortran_order': False, 'shape': (2, 4, 4), }") == 10);
  CHECK(text.back() == '\n');
}

TEST_CASE("one-dimensional shapes carry a trailing comma") {
  const auto text = text_of(npy::encode_header({npy::DType::int64, {5}}));
  CHECK(text.find("'shape': (5,)") != std::string::npos);
  CHECK(text.find("'<i8'") != std::string::npos);
}

TEST_CASE("uint8 is written with the byte-order-free marker") {
  const auto text = text_of(npy::encode_header({npy::DType::uint8, {1, 1, 1}}));
  CHECK(text.find("'|u1'") != std::string::npos);
}

TEST_CASE("decode accepts numpy's own spelling variations") {
  // numpy writes keys in this order, but readers must not depend on it.
  std::string dict = "{'shape': (1, 2), 'fortran_order': False, 'descr': '<f8'}";
  std::string header = dict + std::string(128 - 10 - dict.size() - 1, ' ') + "\n";
  std::string file = std::string("\x93NUMPY\x01\x00", 8);
  file += static_cast<char>(header.size() & 0xFF);
  file += static_cast<char>(header.size() >> 8);
  file += header;
  const double values[2] = {1.5, -2.0};
  file.append(reinterpret_cast<const char*>(values), sizeof values);
  const auto a = npy::decode(bytes_of(file));
  CHECK(a.header.dtype == npy::DType::float64);
  CHECK(a.header.shape == std::vector<std::size_t>{1, 2});
  CHECK(a.payload.size() == 16);
}

TEST_CASE("malformed streams are format errors") {
  CHECK_THROWS_AS(npy::decode({}), FormatError);
  CHECK_THROWS_AS(npy::decode(bytes_of("not an npy file at all, definitely not")), FormatError);

  const npy::Header h{npy::DType::float32, {3}};
  const float v[3] = {0.1f, 0.2f, 0.3f};
  auto good = npy::encode(h, std::as_bytes(std::span(v)));
  CHECK_NOTHROW(npy::decode(good));

  auto truncated = good;
  truncated.pop_back();
  CHECK_THROWS_AS(npy::decode(truncated), FormatError);

  auto extra = good;
  extra.push_back(std::byte{0});
  CHECK_THROWS_AS(npy::decode(extra), FormatError);

  auto fortran = text_of(good);
  fortran.replace(fortran.find("False"), 5, "True ");
  CHECK_THROWS_AS(npy::decode(bytes_of(fortran)), FormatError);

  auto big_endian = text_of(good);
  big_endian.replace(big_endian.find("<f4"), 3, ">f4");
  CHECK_THROWS_AS(npy::decode(bytes_of(big_endian)), FormatError);

  auto version2 = text_of(good);
  version2[6] = 2;
  CHECK_THROWS_AS(npy::decode(bytes_of(version2)), FormatError);
}

TEST_CASE("typed read checks the dtype") {
  test_util::TempDir dir("npy");
  const std::size_t shape[] = {2, 2};
  const std::uint16_t ids[] = {0, 1, 65535, 7};
  npy::write<std::uint16_t>(dir / "a.npy", shape, ids);
  const auto back = npy::read<std::uint16_t>(dir / "a.npy");
  CHECK(back.values == std::vector<std::uint16_t>{0, 1, 65535, 7});
  CHECK_THROWS_AS(npy::read<float>(dir / "a.npy"), FormatError);
  CHECK_THROWS_AS(npy::read<float>(dir / "missing.npy"), IoError);
}

TEST_CASE("every supported dtype round-trips bit-exactly") {
  test_util::TempDir dir("npy_rt");
  std::mt19937_64 rng(11);
  auto check = [&]<typename T>(T) {
    std::vector<T> v(37);
    for (auto& x : v) {
      const auto bits = rng();
      std::memcpy(&x, &bits, sizeof(T));
    }
    if constexpr (std::is_floating_point_v<T>) {
      for (auto& x : v) if (!std::isfinite(x)) x = T(0.5);
    }
    const std::size_t shape[] = {37};
    npy::write<T>(dir / "x.npy", shape, v);
    const auto back = npy::read<T>(dir / "x.npy");
    CHECK(std::memcmp(back.values.data(), v.data(), v.size() * sizeof(T)) == 0);
  };
  check(float{});
  check(double{});
  check(std::uint8_t{});
  check(std::uint16_t{});
  check(std::uint32_t{});
  check(std::int64_t{});
}
