// Binary grid format, CSV round trips, shortest-round-trip number text.

#include <gtest/gtest.h>

#include <charconv>
#include <cstdio>
#include <limits>

#include "phz/io.hpp"
#include "phz/rng.hpp"

using phz::Grid2D;
namespace io = phz::io;

namespace {
std::string tmp_path(const std::string& name) { return testing::TempDir() + name; }
}  // namespace

TEST(GridFormat, FrozenHeaderLayout) {
  Grid2D g = Grid2D::from_data(2, 3, {0, 0, 0, 0, 0, 1.0});
  std::string b = io::encode_grid(g);
  ASSERT_EQ(b.size(), 12u + 6u * 8u);
  EXPECT_EQ(b[0], 'P');
  EXPECT_EQ(b[1], 'H');
  EXPECT_EQ(b[2], 'Z');
  EXPECT_EQ(b[3], '1');
  // u32 little-endian height=2, width=3.
  const unsigned char* p = reinterpret_cast<const unsigned char*>(b.data());
  EXPECT_EQ(p[4], 2u);
  EXPECT_EQ(p[5], 0u);
  EXPECT_EQ(p[6], 0u);
  EXPECT_EQ(p[7], 0u);
  EXPECT_EQ(p[8], 3u);
  EXPECT_EQ(p[9], 0u);
  EXPECT_EQ(p[10], 0u);
  EXPECT_EQ(p[11], 0u);
  // Last sample is 1.0 = 0x3FF0000000000000, little-endian.
  const unsigned char* last = p + 12 + 5 * 8;
  EXPECT_EQ(last[0], 0x00);
  EXPECT_EQ(last[6], 0xF0);
  EXPECT_EQ(last[7], 0x3F);
}

TEST(GridFormat, RoundTripIsBitExact) {
  phz::rng::Rand rand(3);
  Grid2D g(17, 9);
  for (std::size_t n = 0; n < g.size(); ++n) g.data[n] = rand.uniform(-1e6, 1e6);
  g.data[0] = -0.0;
  g.data[1] = std::numeric_limits<double>::denorm_min();
  g.data[2] = -std::numeric_limits<double>::max();
  Grid2D back = io::decode_grid(io::encode_grid(g));
  ASSERT_EQ(back.height, g.height);
  ASSERT_EQ(back.width, g.width);
  for (std::size_t n = 0; n < g.size(); ++n) {
    ASSERT_EQ(std::bit_cast<std::uint64_t>(back.data[n]), std::bit_cast<std::uint64_t>(g.data[n]));
  }
}

TEST(GridFormat, RejectsNonFinite) {
  Grid2D g(1, 2);
  g.data[1] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(io::encode_grid(g), std::invalid_argument);
}

TEST(GridFormat, DecodeErrorKinds) {
  Grid2D g = Grid2D::from_data(1, 2, {1.0, 2.0});
  std::string good = io::encode_grid(g);

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  try {
    io::decode_grid(bad_magic);
    FAIL() << "expected bad_magic";
  } catch (const io::io_error& e) {
    EXPECT_EQ(e.kind, io::io_error::code::bad_magic);
  }

  try {
    io::decode_grid(good.substr(0, 10));
    FAIL() << "expected truncated header";
  } catch (const io::io_error& e) {
    EXPECT_EQ(e.kind, io::io_error::code::truncated);
  }

  try {
    io::decode_grid(good.substr(0, good.size() - 3));
    FAIL() << "expected truncated payload";
  } catch (const io::io_error& e) {
    EXPECT_EQ(e.kind, io::io_error::code::truncated);
  }

  try {
    io::decode_grid(good + "zz");
    FAIL() << "expected trailing";
  } catch (const io::io_error& e) {
    EXPECT_EQ(e.kind, io::io_error::code::trailing);
  }

  std::string zero_dim = good;
  zero_dim[4] = 0;  // height = 0
  try {
    io::decode_grid(zero_dim);
    FAIL() << "expected bad_dims";
  } catch (const io::io_error& e) {
    EXPECT_EQ(e.kind, io::io_error::code::bad_dims);
  }
}

TEST(GridFormat, FileRoundTrip) {
  Grid2D g = Grid2D::from_data(2, 2, {1.5, -2.25, 3.125, 0.0});
  std::string path = tmp_path("phz_io_rt.phz");
  io::write_grid(path, g);
  Grid2D back = io::read_grid(path);
  EXPECT_EQ(back.data, g.data);
  std::remove(path.c_str());
  EXPECT_THROW(io::read_grid(path), io::io_error);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(io::format_double(3.141592653589793), "3.141592653589793");
  EXPECT_EQ(io::format_double(0.1), "0.1");
  EXPECT_EQ(io::format_double(1.0), "1");
  EXPECT_EQ(io::format_double(-0.5), "-0.5");
  phz::rng::Rand rand(5);
  for (int k = 0; k < 5000; ++k) {
    double x = rand.uniform(-1e9, 1e9) * std::exp(rand.uniform(-20.0, 20.0));
    std::string s = io::format_double(x);
    double back = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), back);
    ASSERT_EQ(res.ec, std::errc());
    ASSERT_EQ(res.ptr, s.data() + s.size());
    ASSERT_EQ(std::bit_cast<std::uint64_t>(back), std::bit_cast<std::uint64_t>(x)) << s;
  }
}

TEST(Csv, ExportFrozen) {
  Grid2D g = Grid2D::from_data(2, 2, {1.0, 0.5, -2.0, 3.141592653589793});
  EXPECT_EQ(io::export_csv(g), "1,0.5\n-2,3.141592653589793\n");
}

TEST(Csv, ImportRoundTripExact) {
  phz::rng::Rand rand(9);
  Grid2D g(5, 7);
  for (std::size_t n = 0; n < g.size(); ++n) g.data[n] = rand.normal() * 1e3;
  Grid2D back = io::import_csv(io::export_csv(g));
  ASSERT_EQ(back.height, g.height);
  ASSERT_EQ(back.width, g.width);
  for (std::size_t n = 0; n < g.size(); ++n) ASSERT_EQ(back.data[n], g.data[n]);
}

TEST(Csv, AcceptsCrlfAndBlankLines) {
  Grid2D g = io::import_csv("1,2\r\n\n3,4\r\n");
  ASSERT_EQ(g.height, 2u);
  ASSERT_EQ(g.width, 2u);
  EXPECT_EQ(g.at(1, 0), 3.0);
}

TEST(Csv, ErrorKinds) {
  try {
    io::import_csv("1,2\n3\n");
    FAIL() << "expected ragged";
  } catch (const io::io_error& e) {
    EXPECT_EQ(e.kind, io::io_error::code::ragged_csv);
  }
  try {
    io::import_csv("1,abc\n");
    FAIL() << "expected parse";
  } catch (const io::io_error& e) {
    EXPECT_EQ(e.kind, io::io_error::code::parse);
  }
  try {
    io::import_csv("1,\n");
    FAIL() << "expected parse on empty cell";
  } catch (const io::io_error& e) {
    EXPECT_EQ(e.kind, io::io_error::code::parse);
  }
  try {
    io::import_csv("");
    FAIL() << "expected bad_dims";
  } catch (const io::io_error& e) {
    EXPECT_EQ(e.kind, io::io_error::code::bad_dims);
  }
}

TEST(TextIo, RoundTrip) {
  std::string path = tmp_path("phz_io_text.txt");
  io::write_text(path, "alpha\nbeta\n");
  EXPECT_EQ(io::read_text(path), "alpha\nbeta\n");
  std::remove(path.c_str());
}
