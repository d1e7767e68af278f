#pragma once

// 8-bit RGB PNG via libpng's simplified API.

#include <png.h>

#include <filesystem>
#include <string>

#include "resflow/error.hpp"
#include "resflow/grid.hpp"

namespace resflow {

inline RgbImage read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw Error(Errc::DecodeError, path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  RgbImage out(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(Errc::DecodeError, path.string() + ": " + msg);
  }
  return out;
}

inline void write_png(const RgbImage& img, const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.pixels.data(), 0, nullptr))
    throw Error(Errc::IoError, path.string() + ": " + image.message);
}

}  // namespace resflow
