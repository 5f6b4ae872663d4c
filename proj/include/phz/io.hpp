#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "phz/grid.hpp"

namespace phz::io {

struct io_error : std::runtime_error {
  enum class code { bad_magic, bad_dims, truncated, trailing, io_failure, ragged_csv, parse };
  code kind;
  io_error(code k, const std::string& what) : std::runtime_error(what), kind(k) {}
};

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline void put_f64_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((bits >> (8 * k)) & 0xFF));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline double get_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int k = 7; k >= 0; --k) bits = (bits << 8) | p[k];
  return std::bit_cast<double>(bits);
}

}  // namespace detail

inline constexpr char kGridMagic[4] = {'P', 'H', 'Z', '1'};

/// Serializes a grid: magic "PHZ1", u32-le height and width, then row-major
/// f64-le samples.
inline std::string encode_grid(const Grid2D& g) {
  if (!all_finite(g)) throw std::invalid_argument("encode_grid: non-finite data");
  std::string out;
  out.reserve(12 + 8 * g.size());
  out.append(kGridMagic, 4);
  detail::put_u32_le(out, static_cast<std::uint32_t>(g.height));
  detail::put_u32_le(out, static_cast<std::uint32_t>(g.width));
  for (double v : g.data) detail::put_f64_le(out, v);
  return out;
}

inline Grid2D decode_grid(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kGridMagic, 4) != 0)
    throw io_error(io_error::code::bad_magic, "grid file: bad magic");
  if (bytes.size() < 12) throw io_error(io_error::code::truncated, "grid file: truncated header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  std::uint32_t h = detail::get_u32_le(p + 4);
  std::uint32_t w = detail::get_u32_le(p + 8);
  if (h == 0 || w == 0) throw io_error(io_error::code::bad_dims, "grid file: zero dimension");
  std::size_t need = 12 + 8 * static_cast<std::size_t>(h) * w;
  if (bytes.size() < need) throw io_error(io_error::code::truncated, "grid file: truncated payload");
  if (bytes.size() > need) throw io_error(io_error::code::trailing, "grid file: trailing bytes");
  Grid2D g(h, w);
  for (std::size_t n = 0; n < g.size(); ++n) g.data[n] = detail::get_f64_le(p + 12 + 8 * n);
  return g;
}

inline void write_grid(const std::string& path, const Grid2D& g) {
  std::string bytes = encode_grid(g);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw io_error(io_error::code::io_failure, "cannot open for writing: " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw io_error(io_error::code::io_failure, "write failed: " + path);
}

inline Grid2D read_grid(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error(io_error::code::io_failure, "cannot open for reading: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return decode_grid(buf.str());
}

/// Decimal text form that parses back to the identical double (shortest
/// round-trip representation).
inline std::string format_double(double v) {
  std::array<char, 64> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline std::string export_csv(const Grid2D& g) {
  std::string out;
  for (std::size_t i = 0; i < g.height; ++i) {
    for (std::size_t j = 0; j < g.width; ++j) {
      if (j) out.push_back(',');
      out += format_double(g.at(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

inline Grid2D import_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line(text.data() + pos, (eol == std::string::npos ? text.size() : eol) - pos);
    pos = eol == std::string::npos ? text.size() : eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      std::string_view cell = line.substr(start, comma == std::string_view::npos
                                                     ? std::string_view::npos
                                                     : comma - start);
      double v = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw io_error(io_error::code::parse, "csv: bad number '" + std::string(cell) + "'");
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw io_error(io_error::code::ragged_csv, "csv: ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw io_error(io_error::code::bad_dims, "csv: empty input");
  Grid2D g(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < g.height; ++i)
    for (std::size_t j = 0; j < g.width; ++j) g.at(i, j) = rows[i][j];
  return g;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw io_error(io_error::code::io_failure, "cannot open for writing: " + path);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw io_error(io_error::code::io_failure, "write failed: " + path);
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error(io_error::code::io_failure, "cannot open for reading: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

}  // namespace phz::io
