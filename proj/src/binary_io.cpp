// SPDX-License-Identifier: Apache-2.0
#include <birnn/binary_io.hpp>

#include <array>
#include <bit>
#include <cstring>
#include <stdexcept>

namespace birnn::io {

namespace {

template <typename T> void put_le(std::ostream &out, T v) {
  std::array<char, sizeof(T)> buf;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf.data(), buf.size());
  if (!out)
    throw std::runtime_error("binary write failed");
}

template <typename T> T get_le(std::istream &in) {
  std::array<unsigned char, sizeof(T)> buf;
  in.read(reinterpret_cast<char *>(buf.data()), buf.size());
  if (!in)
    throw std::runtime_error("unexpected end of binary file");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

} // namespace

void write_u32(std::ostream &out, std::uint32_t v) { put_le(out, v); }
void write_u64(std::ostream &out, std::uint64_t v) { put_le(out, v); }
void write_f64(std::ostream &out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

void write_f64s(std::ostream &out, std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char *>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
    if (!out)
      throw std::runtime_error("binary write failed");
  } else {
    for (double v : values)
      write_f64(out, v);
  }
}

void write_magic(std::ostream &out, const char (&magic)[5]) { out.write(magic, 4); }

std::uint32_t read_u32(std::istream &in) { return get_le<std::uint32_t>(in); }
std::uint64_t read_u64(std::istream &in) { return get_le<std::uint64_t>(in); }
double read_f64(std::istream &in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

void read_f64s(std::istream &in, std::span<double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char *>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    if (!in)
      throw std::runtime_error("unexpected end of binary file");
  } else {
    for (double &v : values)
      v = read_f64(in);
  }
}

void expect_magic(std::istream &in, const char (&magic)[5], const std::string &what) {
  char buf[4] = {};
  in.read(buf, 4);
  if (!in || std::memcmp(buf, magic, 4) != 0)
    throw std::runtime_error(what + ": bad magic, not a " + std::string(magic, 4) + " file");
}

} // namespace birnn::io
