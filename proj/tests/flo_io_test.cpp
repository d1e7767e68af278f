#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "resflow/flo_io.hpp"
#include "test_support.hpp"

using namespace resflow;
using resflow::testkit::TempDir;

namespace {

std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void expect_bitwise_equal(const Grid<float>& a, const Grid<float>& b) {
  ASSERT_TRUE(a.same_shape(b));
  for (std::size_t i = 0; i < a.size(); ++i)
    ASSERT_EQ(std::bit_cast<std::uint32_t>(a.values()[i]), std::bit_cast<std::uint32_t>(b.values()[i]))
        << "element " << i;
}

Errc decode_code(const std::vector<char>& bytes) {
  try {
    decode_flo(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode did not throw";
  return Errc::IoError;
}

}  // namespace

TEST(FloIo, TwoByTwoRoundTrip) {
  TempDir dir;
  FlowField f(2, 2);
  f.u(0, 0) = 1;
  f.u(1, 0) = 2;
  f.u(0, 1) = 3;
  f.u(1, 1) = 4;
  write_flo(f, dir / "a.flo");
  const auto g = read_flo(dir / "a.flo");
  EXPECT_EQ(g.width(), 2);
  EXPECT_EQ(g.height(), 2);
  EXPECT_EQ(g.u, f.u);
  EXPECT_EQ(g.v, f.v);
  for (auto x : g.v.values()) EXPECT_EQ(x, 0.0f);
}

TEST(FloIo, ByteLayoutIsLittleEndianInterleaved) {
  FlowField f(3, 1);
  f.u(0, 0) = 1.5f;
  f.v(0, 0) = -2.0f;
  f.u(2, 0) = 7.25f;
  const auto bytes = encode_flo(f);
  // Hand-built expectation, independent of the encoder helpers.
  ASSERT_EQ(bytes.size(), 12u + 8u * 3u);
  EXPECT_EQ(std::string(bytes.data(), 4), "PIEH");
  auto i32 = [&](std::size_t off) {
    return static_cast<std::int32_t>(static_cast<unsigned char>(bytes[off]) |
                                     static_cast<unsigned char>(bytes[off + 1]) << 8 |
                                     static_cast<unsigned char>(bytes[off + 2]) << 16 |
                                     static_cast<unsigned char>(bytes[off + 3]) << 24);
  };
  auto f32 = [&](std::size_t off) {
    float x;
    std::uint32_t b = static_cast<std::uint32_t>(i32(off));
    std::memcpy(&x, &b, 4);
    return x;
  };
  EXPECT_EQ(i32(4), 3);
  EXPECT_EQ(i32(8), 1);
  EXPECT_EQ(f32(12), 1.5f);
  EXPECT_EQ(f32(16), -2.0f);
  EXPECT_EQ(f32(20), 0.0f);
  EXPECT_EQ(f32(28), 7.25f);
}

TEST(FloIo, FileSizeMatchesHeaderPlusPayload) {
  TempDir dir;
  std::mt19937_64 rng(3);
  for (auto [w, h] : {std::pair{1, 1}, {64, 48}, {17, 5}}) {
    const auto f = testkit::random_flow(rng, w, h);
    write_flo(f, dir / "x.flo");
    EXPECT_EQ(std::filesystem::file_size(dir / "x.flo"), 12u + 8u * static_cast<unsigned>(w * h));
    EXPECT_EQ(flo_file_size(w, h), 12u + 8u * static_cast<unsigned>(w * h));
  }
}

TEST(FloIo, RandomFieldsRoundTripBitExactly) {
  TempDir dir;
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(1, 40);
  const float specials[] = {-0.0f, std::numeric_limits<float>::denorm_min(), std::numeric_limits<float>::max(),
                            -std::numeric_limits<float>::min(), 1e-30f, 123456.789f};
  for (int trial = 0; trial < 30; ++trial) {
    auto f = testkit::random_flow(rng, dim(rng), dim(rng), 100.0f);
    for (std::size_t k = 0; k < std::size(specials) && k < f.u.size(); ++k) {
      f.u.values()[k] = specials[k];
      f.v.values()[f.v.size() - 1 - k] = specials[std::size(specials) - 1 - k];
    }
    write_flo(f, dir / "r.flo");
    const auto g = read_flo(dir / "r.flo");
    expect_bitwise_equal(f.u, g.u);
    expect_bitwise_equal(f.v, g.v);
  }
}

TEST(FloIo, BadMagicRejected) {
  auto bytes = encode_flo(FlowField(2, 2));
  bytes[0] = 'X';
  EXPECT_EQ(decode_code(bytes), Errc::BadMagic);
}

TEST(FloIo, TruncationRejected) {
  const auto full = encode_flo(FlowField(4, 3));
  for (std::size_t n : {std::size_t{2}, std::size_t{8}, full.size() - 1, std::size_t{12}}) {
    std::vector<char> cut(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(n));
    EXPECT_EQ(decode_code(cut), Errc::TruncatedFile) << n << " bytes";
  }
}

TEST(FloIo, ImplausibleDimensionsRejected) {
  auto bytes = encode_flo(FlowField(2, 2));
  for (std::int32_t bad : {0, -5, 100000}) {
    auto b = bytes;
    std::memcpy(b.data() + 4, &bad, 4);
    EXPECT_EQ(decode_code(b), Errc::OversizeDimensions) << bad;
  }
}

TEST(FloIo, TrailingBytesRejected) {
  auto bytes = encode_flo(FlowField(2, 2));
  bytes.push_back(0);
  EXPECT_EQ(decode_code(bytes), Errc::ParseError);
}

TEST(FloIo, MissingFileReported) {
  TempDir dir;
  try {
    read_flo(dir / "nope.flo");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingFile);
  }
}

TEST(FloIo, UnknownFlowMarkedInvalid) {
  FlowField f(2, 1);
  f.u(0, 0) = 1e10f;
  f.v(1, 0) = 0.5f;
  const auto g = decode_flo(encode_flo(f));
  EXPECT_EQ(g.valid(0, 0), 0);
  EXPECT_EQ(g.valid(1, 0), 1);
}

TEST(FloIo, WrittenFileMatchesEncoder) {
  TempDir dir;
  std::mt19937_64 rng(5);
  const auto f = testkit::random_flow(rng, 9, 4);
  write_flo(f, dir / "w.flo");
  EXPECT_EQ(slurp(dir / "w.flo"), encode_flo(f));
}
