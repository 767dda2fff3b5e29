#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "speckle/image_io.hpp"

namespace speckle {
namespace {

std::string pgm_bytes(const std::string& header, std::initializer_list<int> payload) {
  std::string s = header;
  for (int b : payload) s.push_back(static_cast<char>(b));
  return s;
}

IoError::Kind read_pgm_error(const std::string& bytes) {
  std::istringstream in(bytes);
  try {
    read_pgm(in);
  } catch (const IoError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected IoError";
  return IoError::Kind::open_failed;
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("speckle_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

using ImageFiles = TempDir;

TEST_F(ImageFiles, RawRoundTripIsBitExact) {
  const auto img = ImageGrid::from_rows(
      {{1.5, -0.0, std::numeric_limits<double>::denorm_min()}, {1e300, -3.25, 0.1}});
  const auto path = dir_ / "x.spkf";
  save_image(img, path, ImageFormat::rawf64);
  const auto back = load_image(path, ImageFormat::rawf64);
  ASSERT_EQ(back.width(), 3u);
  ASSERT_EQ(back.height(), 2u);
  for (std::size_t i = 0; i < img.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back[i]), std::bit_cast<std::uint64_t>(img[i]));
  }
}

TEST(RawF64, LayoutIsLittleEndianWithMagic) {
  std::ostringstream out;
  write_rawf64(out, ImageGrid::from_rows({{1.0}, {2.0}}));
  const std::string s = out.str();
  ASSERT_EQ(s.size(), 12u + 16u);
  EXPECT_EQ(s.substr(0, 4), "SPKF");
  EXPECT_EQ(s.substr(4, 4), std::string("\x01\x00\x00\x00", 4));
  EXPECT_EQ(s.substr(8, 4), std::string("\x02\x00\x00\x00", 4));
  // 1.0 = 0x3FF0000000000000, little-endian
  EXPECT_EQ(s.substr(12, 8), std::string("\x00\x00\x00\x00\x00\x00\xF0\x3F", 8));
}

TEST(RawF64, Errors) {
  auto kind_of = [](const std::string& bytes) {
    std::istringstream in(bytes);
    try {
      read_rawf64(in);
    } catch (const IoError& e) {
      return e.kind();
    }
    return IoError::Kind::open_failed;
  };
  EXPECT_EQ(kind_of("SPKX\x01\0\0\0\x01\0\0\0"), IoError::Kind::malformed_header);
  EXPECT_EQ(kind_of(std::string("SPKF\x00\0\0\0\x01\0\0\0", 12)), IoError::Kind::malformed_header);
  EXPECT_EQ(kind_of(std::string("SPKF\x01\0\0\0\x01\0\0\0\0\0\0", 15)),
            IoError::Kind::truncated_payload);

  std::ostringstream nan_out;
  write_rawf64(nan_out, ImageGrid(1, 1, 0.0));
  std::string bytes = nan_out.str();
  const auto nan_bits = std::bit_cast<std::uint64_t>(std::numeric_limits<double>::quiet_NaN());
  for (int b = 0; b < 8; ++b) bytes[12 + b] = static_cast<char>(nan_bits >> (8 * b));
  EXPECT_EQ(kind_of(bytes), IoError::Kind::non_finite_payload);
}

TEST(Pgm, EightBitMaxvalMapsDirectly) {
  std::istringstream in(pgm_bytes("P5\n2 1\n255\n", {255, 7}));
  const auto img = read_pgm(in);
  EXPECT_EQ(img(0, 0), 255.0);
  EXPECT_EQ(img(0, 1), 7.0);
}

TEST(Pgm, SixteenBitIsBigEndian) {
  std::istringstream in(pgm_bytes("P5 1 2 65535\n", {0x01, 0x02, 0xFF, 0xFF}));
  const auto img = read_pgm(in);
  EXPECT_EQ(img(0, 0), 258.0);
  EXPECT_EQ(img(1, 0), 65535.0);
}

TEST(Pgm, HeaderCommentsAreSkipped) {
  std::istringstream in(pgm_bytes("P5\n# made by hand\n1 1\n# depth\n100\n", {42}));
  EXPECT_EQ(read_pgm(in)(0, 0), 42.0);
}

TEST(Pgm, ErrorKinds) {
  EXPECT_EQ(read_pgm_error(pgm_bytes("P5\n1 1\n70000\n", {0, 0})),
            IoError::Kind::unsupported_maxval);
  EXPECT_EQ(read_pgm_error(pgm_bytes("P5\n1 1\n0\n", {0})), IoError::Kind::unsupported_maxval);
  EXPECT_EQ(read_pgm_error("P2\n1 1\n255\n0"), IoError::Kind::malformed_header);
  EXPECT_EQ(read_pgm_error("P5\nx 1\n255\n"), IoError::Kind::malformed_header);
  EXPECT_EQ(read_pgm_error("P5\n0 1\n255\n"), IoError::Kind::malformed_header);
  EXPECT_EQ(read_pgm_error(pgm_bytes("P5\n2 2\n255\n", {1, 2, 3})),
            IoError::Kind::truncated_payload);
  EXPECT_EQ(read_pgm_error(pgm_bytes("P5\n1 1\n65535\n", {1})), IoError::Kind::truncated_payload);
}

TEST_F(ImageFiles, PgmSaveQuantizesAndClamps) {
  const auto img = ImageGrid::from_rows({{-3.0, 0.4, 0.6, 254.5, 300.0}});
  const auto path = dir_ / "q.pgm";
  save_image(img, path, ImageFormat::pgm);
  EXPECT_EQ(load_image(path), ImageGrid::from_rows({{0, 0, 1, 255, 255}}));

  save_image(ImageGrid::from_rows({{1000.4, 70000.0}}), path, ImageFormat::pgm, {65535});
  EXPECT_EQ(load_image(path), ImageGrid::from_rows({{1000, 65535}}));
}

TEST_F(ImageFiles, FormatInferenceAndOpenFailure) {
  EXPECT_EQ(format_from_extension("a/b.PGM"), ImageFormat::pgm);
  EXPECT_EQ(format_from_extension("b.spkf"), ImageFormat::rawf64);
  EXPECT_FALSE(format_from_extension("b.png").has_value());
  EXPECT_EQ(parse_format("rawf64"), ImageFormat::rawf64);

  try {
    load_image(dir_ / "missing.pgm");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_EQ(e.kind(), IoError::Kind::open_failed);
  }
}

}  // namespace
}  // namespace speckle
