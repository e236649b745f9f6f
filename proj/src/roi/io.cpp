/* Copyright 2026 The NMIL Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "nmil/roi/io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "nmil/common/error.hpp"

namespace nmil::roi {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  *what = msg;
  std::longjmp(png_jmpbuf(png), 1);
}

void png_warn(png_structp, png_const_charp) {}

void append_bytes(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void no_flush(png_structp) {}

}  // namespace

GrayImage read_gray_png(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(name.c_str(), "rb"));
  if (!file) throw DataError(name + ": cannot open file");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw DataError(name + ": not a PNG file");
  }
  std::string what;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &what, png_fail, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DataError(name + ": libpng initialization failed");
  }
  GrayImage image;
  std::vector<png_bytep> rows;
  int color = 0, depth = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError(name + ": " + what);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  color = png_get_color_type(png, info);
  depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY || depth != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError(name + ": expected an 8-bit single-channel PNG");
  }
  image.width = png_get_image_width(png, info);
  image.height = png_get_image_height(png, info);
  image.pixels.assign(image.width * image.height, 0);
  rows.resize(image.height);
  for (std::size_t y = 0; y < image.height; ++y) rows[y] = image.pixels.data() + y * image.width;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

std::vector<std::uint8_t> encode_gray_png(const GrayImage& image) {
  if (image.width == 0 || image.height == 0 ||
      image.pixels.size() != image.width * image.height) {
    throw DataError("cannot encode a malformed image");
  }
  std::string what;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &what, png_fail, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, nullptr);
    throw DataError("libpng initialization failed");
  }
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> rows(image.height);
  for (std::size_t y = 0; y < image.height; ++y) {
    rows[y] = const_cast<png_bytep>(image.pixels.data() + y * image.width);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("PNG encoding failed: " + what);
  }
  png_set_write_fn(png, &out, append_bytes, no_flush);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 9);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_gray_png(const std::filesystem::path& path, const GrayImage& image) {
  const std::vector<std::uint8_t> bytes = encode_gray_png(image);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(path.string() + ": cannot open for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw DataError(path.string() + ": write failed");
}

Sidecar parse_sidecar(const std::string& text, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(source + ": invalid JSON (" + e.what() + ")");
  }
  if (!j.is_object() || !j.contains("mpp") || !j.contains("magnification")) {
    throw DataError(source + ": expected keys 'mpp' and 'magnification'");
  }
  Sidecar s;
  const auto& mpp = j["mpp"];
  if (mpp.is_number()) {
    s.mpp = mpp.get<double>();
  } else if (mpp.is_array() && mpp.size() == 2 && mpp[0].is_number() && mpp[1].is_number()) {
    const double mx = mpp[0].get<double>(), my = mpp[1].get<double>();
    if (mx != my) {
      throw DataError(source + ": anisotropic pixel size (" + std::to_string(mx) + ", " +
                      std::to_string(my) + ") is not supported");
    }
    s.mpp = mx;
  } else {
    throw DataError(source + ": 'mpp' must be a number or an [x, y] pair");
  }
  if (!(s.mpp > 0.0) || !std::isfinite(s.mpp)) throw DataError(source + ": 'mpp' must be positive");
  if (!j["magnification"].is_string()) throw DataError(source + ": 'magnification' must be a string");
  s.magnification = parse_magnification(j["magnification"].get<std::string>());
  return s;
}

Sidecar read_sidecar(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError(path.string() + ": cannot open file");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_sidecar(ss.str(), path.string());
}

SegMask load_segmask(const std::filesystem::path& png, const std::filesystem::path& sidecar) {
  const Sidecar meta = read_sidecar(sidecar);
  GrayImage img = read_gray_png(png);
  SegMask mask;
  mask.width = img.width;
  mask.height = img.height;
  mask.labels = std::move(img.pixels);
  mask.mpp = meta.mpp;
  mask.magnification = meta.magnification;
  try {
    mask.validate();
  } catch (const DataError& e) {
    throw DataError(png.string() + ": " + e.what());
  }
  return mask;
}

GrayImage roi_image(const RoiMask& roi) {
  GrayImage img{roi.width, roi.height, std::vector<std::uint8_t>(roi.inside.size())};
  for (std::size_t i = 0; i < roi.inside.size(); ++i) img.pixels[i] = roi.inside[i] ? 255 : 0;
  return img;
}

}  // namespace nmil::roi
