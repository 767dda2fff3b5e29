#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "speckle/error.hpp"
#include "speckle/image.hpp"

namespace speckle {

// On-disk formats:
//
//   PGM-P5   "P5" <ws> width <ws> height <ws> maxval <single ws> payload.
//            '#' comments are allowed between header tokens. maxval in
//            [1, 65535]; samples are one byte for maxval < 256, otherwise two
//            bytes big-endian. Values load as raw sample values (255 -> 255.0).
//
//   RAWF64   "SPKF", width (u32 LE), height (u32 LE), width*height IEEE-754
//            doubles (LE), row-major. Round-trips bit-exactly.
enum class ImageFormat { pgm, rawf64 };

struct PgmOptions {
  std::uint32_t maxval = 255;
};

inline std::optional<ImageFormat> format_from_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (ext == ".pgm") return ImageFormat::pgm;
  if (ext == ".spkf") return ImageFormat::rawf64;
  return std::nullopt;
}

inline std::optional<ImageFormat> parse_format(std::string_view name) {
  if (name == "pgm") return ImageFormat::pgm;
  if (name == "rawf64" || name == "spkf") return ImageFormat::rawf64;
  return std::nullopt;
}

namespace detail {

inline void skip_pgm_separators(std::istream& in) {
  for (;;) {
    const int ch = in.peek();
    if (ch == '#') {
      std::string discard;
      std::getline(in, discard);
    } else if (ch != EOF && std::isspace(ch)) {
      in.get();
    } else {
      return;
    }
  }
}

inline std::uint64_t read_pgm_number(std::istream& in, const char* field) {
  skip_pgm_separators(in);
  std::uint64_t value = 0;
  int digits = 0;
  while (std::isdigit(in.peek())) {
    value = value * 10 + static_cast<std::uint64_t>(in.get() - '0');
    if (++digits > 10) {
      throw IoError(IoError::Kind::malformed_header, std::string("PGM: ") + field + " too long");
    }
  }
  if (digits == 0) {
    throw IoError(IoError::Kind::malformed_header,
                  std::string("PGM: expected a number for ") + field);
  }
  return value;
}

inline std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void write_u32_le(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

inline constexpr std::array<char, 4> kRawMagic = {'S', 'P', 'K', 'F'};

}  // namespace detail

inline ImageGrid read_pgm(std::istream& in) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (in.gcount() != 2 || magic[0] != 'P' || magic[1] != '5') {
    throw IoError(IoError::Kind::malformed_header, "PGM: missing P5 magic");
  }
  const auto width = detail::read_pgm_number(in, "width");
  const auto height = detail::read_pgm_number(in, "height");
  const auto maxval = detail::read_pgm_number(in, "maxval");
  if (width == 0 || height == 0 || width > 0xFFFFFFFFull || height > 0xFFFFFFFFull) {
    throw IoError(IoError::Kind::malformed_header, "PGM: invalid dimensions");
  }
  if (maxval == 0 || maxval > 65535) {
    throw IoError(IoError::Kind::unsupported_maxval,
                  "PGM: unsupported maxval " + std::to_string(maxval));
  }
  const int sep = in.get();
  if (sep == EOF || !std::isspace(sep)) {
    throw IoError(IoError::Kind::malformed_header, "PGM: header not terminated by whitespace");
  }

  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const std::size_t bytes_per_sample = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> raw(n * bytes_per_sample);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw IoError(IoError::Kind::truncated_payload,
                  "PGM: expected " + std::to_string(raw.size()) + " payload bytes, got " +
                      std::to_string(in.gcount()));
  }
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = bytes_per_sample == 1
                  ? static_cast<double>(raw[i])
                  : static_cast<double>((static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1]);
  }
  return ImageGrid(static_cast<std::size_t>(width), static_cast<std::size_t>(height),
                   std::move(data));
}

/// Values are rounded to the nearest integer and clamped to [0, maxval].
inline void write_pgm(std::ostream& out, const ImageGrid& img, PgmOptions opts = {}) {
  if (opts.maxval == 0 || opts.maxval > 65535) {
    throw IoError(IoError::Kind::unsupported_maxval,
                  "PGM: unsupported maxval " + std::to_string(opts.maxval));
  }
  out << "P5\n" << img.width() << ' ' << img.height() << '\n' << opts.maxval << '\n';
  const bool wide = opts.maxval > 255;
  std::vector<unsigned char> raw;
  raw.reserve(img.size() * (wide ? 2 : 1));
  const double top = static_cast<double>(opts.maxval);
  for (double v : img.values()) {
    const auto q = static_cast<unsigned>(std::clamp(std::round(v), 0.0, top));
    if (wide) raw.push_back(static_cast<unsigned char>(q >> 8));
    raw.push_back(static_cast<unsigned char>(q & 0xFF));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

inline ImageGrid read_rawf64(std::istream& in) {
  unsigned char header[12];
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (in.gcount() != static_cast<std::streamsize>(sizeof header) ||
      std::memcmp(header, detail::kRawMagic.data(), 4) != 0) {
    throw IoError(IoError::Kind::malformed_header, "RAWF64: missing SPKF header");
  }
  const std::uint32_t width = detail::read_u32_le(header + 4);
  const std::uint32_t height = detail::read_u32_le(header + 8);
  if (width == 0 || height == 0) {
    throw IoError(IoError::Kind::malformed_header, "RAWF64: zero dimension");
  }
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<unsigned char> raw(n * 8);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw IoError(IoError::Kind::truncated_payload,
                  "RAWF64: expected " + std::to_string(raw.size()) + " payload bytes, got " +
                      std::to_string(in.gcount()));
  }
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | raw[8 * i + static_cast<std::size_t>(b)];
    data[i] = std::bit_cast<double>(bits);
    if (!std::isfinite(data[i])) {
      throw IoError(IoError::Kind::non_finite_payload,
                    "RAWF64: non-finite value at index " + std::to_string(i));
    }
  }
  return ImageGrid(width, height, std::move(data));
}

inline void write_rawf64(std::ostream& out, const ImageGrid& img) {
  if (img.width() > 0xFFFFFFFFull || img.height() > 0xFFFFFFFFull) {
    throw IoError(IoError::Kind::write_failed, "RAWF64: dimensions exceed 32 bits");
  }
  std::vector<unsigned char> raw(12 + img.size() * 8);
  std::memcpy(raw.data(), detail::kRawMagic.data(), 4);
  detail::write_u32_le(raw.data() + 4, static_cast<std::uint32_t>(img.width()));
  detail::write_u32_le(raw.data() + 8, static_cast<std::uint32_t>(img.height()));
  unsigned char* p = raw.data() + 12;
  for (double v : img.values()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) *p++ = static_cast<unsigned char>(bits >> (8 * b));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

inline ImageGrid load_image(const std::filesystem::path& path, ImageFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoError::Kind::open_failed, "cannot open " + path.string());
  return format == ImageFormat::pgm ? read_pgm(in) : read_rawf64(in);
}

/// Format is taken from the extension (.pgm, .spkf).
inline ImageGrid load_image(const std::filesystem::path& path) {
  const auto format = format_from_extension(path);
  if (!format) {
    throw IoError(IoError::Kind::open_failed,
                  "cannot infer image format from extension of " + path.string());
  }
  return load_image(path, *format);
}

inline void save_image(const ImageGrid& img, const std::filesystem::path& path,
                       ImageFormat format, PgmOptions pgm = {}) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::open_failed, "cannot open " + path.string());
  if (format == ImageFormat::pgm) {
    write_pgm(out, img, pgm);
  } else {
    write_rawf64(out, img);
  }
  out.flush();
  if (!out) throw IoError(IoError::Kind::write_failed, "write failed for " + path.string());
}

inline void save_image(const ImageGrid& img, const std::filesystem::path& path) {
  const auto format = format_from_extension(path);
  if (!format) {
    throw IoError(IoError::Kind::open_failed,
                  "cannot infer image format from extension of " + path.string());
  }
  save_image(img, path, *format);
}

}  // namespace speckle
