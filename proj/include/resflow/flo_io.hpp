#pragma once

// Middlebury .flo interchange: "PIEH" sentinel (float 202021.25), int32 width,
// int32 height, then row-major interleaved (u, v) float32 pairs. Little-endian.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "resflow/error.hpp"
#include "resflow/flow_field.hpp"

namespace resflow {

inline constexpr float kFloMagic = 202021.25f;
inline constexpr std::int32_t kFloMaxDimension = 99999;
inline constexpr std::size_t kFloHeaderBytes = 12;

namespace detail {

template <typename T>
inline void put_le(std::vector<char>& out, T value) {
  static_assert(sizeof(T) == 4);
  auto bits = std::bit_cast<std::uint32_t>(value);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

template <typename T>
inline T get_le(const char* p) {
  static_assert(sizeof(T) == 4);
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace detail

inline std::uintmax_t flo_file_size(int width, int height) {
  return kFloHeaderBytes + 8ull * static_cast<std::uintmax_t>(width) * static_cast<std::uintmax_t>(height);
}

inline std::vector<char> encode_flo(const FlowField& field) {
  if (!field.u.same_shape(field.v)) throw Error(Errc::InvalidField, "u and v differ in shape");
  if (field.width() < 1 || field.height() < 1)
    throw Error(Errc::InvalidField, "cannot write an empty flow field");
  std::vector<char> out;
  out.reserve(flo_file_size(field.width(), field.height()));
  detail::put_le(out, kFloMagic);
  detail::put_le(out, static_cast<std::int32_t>(field.width()));
  detail::put_le(out, static_cast<std::int32_t>(field.height()));
  for (std::size_t i = 0; i < field.u.size(); ++i) {
    detail::put_le(out, field.u.values()[i]);
    detail::put_le(out, field.v.values()[i]);
  }
  return out;
}

inline FlowField decode_flo(const std::vector<char>& bytes, const std::string& origin = "<memory>") {
  if (bytes.size() < 4) throw Error(Errc::TruncatedFile, origin + ": shorter than the magic");
  if (std::bit_cast<std::uint32_t>(detail::get_le<float>(bytes.data())) !=
      std::bit_cast<std::uint32_t>(kFloMagic))
    throw Error(Errc::BadMagic, origin + ": missing PIEH sentinel");
  if (bytes.size() < kFloHeaderBytes) throw Error(Errc::TruncatedFile, origin + ": header cut short");
  const auto width = detail::get_le<std::int32_t>(bytes.data() + 4);
  const auto height = detail::get_le<std::int32_t>(bytes.data() + 8);
  if (width < 1 || height < 1 || width > kFloMaxDimension || height > kFloMaxDimension)
    throw Error(Errc::OversizeDimensions,
                origin + ": implausible size " + std::to_string(width) + "x" + std::to_string(height));
  const auto expected = flo_file_size(width, height);
  if (bytes.size() < expected) throw Error(Errc::TruncatedFile, origin + ": payload cut short");
  if (bytes.size() > expected) throw Error(Errc::ParseError, origin + ": trailing bytes after payload");

  FlowField f(width, height);
  const char* p = bytes.data() + kFloHeaderBytes;
  for (std::size_t i = 0; i < f.u.size(); ++i, p += 8) {
    const float a = detail::get_le<float>(p);
    const float b = detail::get_le<float>(p + 4);
    f.u.values()[i] = a;
    f.v.values()[i] = b;
    f.valid.values()[i] = (std::fabs(a) > kUnknownFlowThreshold || std::fabs(b) > kUnknownFlowThreshold ||
                           std::isnan(a) || std::isnan(b))
                              ? 0
                              : 1;
  }
  return f;
}

inline void write_flo(const FlowField& field, const std::filesystem::path& path) {
  const auto bytes = encode_flo(field);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoError, "short write to " + path.string());
}

inline FlowField read_flo(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingFile, "cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_flo(bytes, path.string());
}

}  // namespace resflow
