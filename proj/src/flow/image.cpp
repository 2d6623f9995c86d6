// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/flow/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "stimkit/error.hpp"

#if defined(STIMKIT_HAVE_PNG)
#include <png.h>
#endif

namespace stimkit::flow {

double GrayImage::sample(double x, double y) const {
  x = std::clamp(x, 0.0, static_cast<double>(width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(height - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, width - 1);
  const int y1 = std::min(y0 + 1, height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * at(x0, y0) + fx * at(x1, y0);
  const double bottom = (1.0 - fx) * at(x0, y1) + fx * at(x1, y1);
  return (1.0 - fy) * top + fy * bottom;
}

void RgbImage::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
  data[i] = r;
  data[i + 1] = g;
  data[i + 2] = b;
}

GrayImage transpose(const GrayImage& img) {
  GrayImage out(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) out.at(y, x) = img.at(x, y);
  }
  return out;
}

namespace {

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot read image " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Netpbm header tokens, skipping comments.
struct PnmReader {
  const std::string& bytes;
  std::size_t pos = 0;

  std::string token() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    std::string t;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) t += bytes[pos++];
    return t;
  }
  int integer(const std::string& source) {
    const std::string t = token();
    try {
      return std::stoi(t);
    } catch (const std::exception&) {
      fail(ErrorKind::kFormat, source + ": bad netpbm header");
    }
  }
};

GrayImage read_pnm(const std::string& bytes, const std::string& source) {
  PnmReader r{bytes};
  const std::string magic = r.token();
  const bool gray = magic == "P5" || magic == "P2";
  const bool ascii = magic == "P2" || magic == "P3";
  if (!gray && magic != "P6" && magic != "P3") {
    fail(ErrorKind::kFormat, source + ": unsupported netpbm type " + magic);
  }
  const int w = r.integer(source);
  const int h = r.integer(source);
  const int maxval = r.integer(source);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
    fail(ErrorKind::kFormat, source + ": bad netpbm dimensions");
  }
  const int channels = gray ? 1 : 3;
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(channels);
  std::vector<double> values(count);
  if (ascii) {
    for (auto& v : values) v = r.integer(source);
  } else {
    ++r.pos;  // single whitespace after maxval
    const std::size_t bps = maxval > 255 ? 2 : 1;
    if (r.pos + count * bps > bytes.size()) fail(ErrorKind::kFormat, source + ": truncated image");
    for (std::size_t i = 0; i < count; ++i) {
      const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + r.pos + i * bps);
      values[i] = bps == 2 ? (p[0] << 8 | p[1]) : p[0];
    }
  }
  GrayImage img(w, h);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    double v = gray ? values[i]
                    : 0.299 * values[3 * i] + 0.587 * values[3 * i + 1] + 0.114 * values[3 * i + 2];
    img.data[i] = static_cast<float>(v / maxval);
  }
  return img;
}

#if defined(STIMKIT_HAVE_PNG)
GrayImage read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    fail(ErrorKind::kFormat, path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    fail(ErrorKind::kFormat, path.string() + ": " + image.message);
  }
  GrayImage img(static_cast<int>(image.width), static_cast<int>(image.height));
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = buffer[i] / 255.0f;
  return img;
}
#endif

void write_bytes(const std::filesystem::path& path, const std::string& header,
                 const std::uint8_t* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << header;
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) fail(ErrorKind::kIo, "write failed: " + path.string());
}

}  // namespace

GrayImage read_gray_image(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".png" || ext == ".PNG") {
#if defined(STIMKIT_HAVE_PNG)
    return read_png(path);
#else
    fail(ErrorKind::kFormat, path.string() + ": built without PNG support");
#endif
  }
  return read_pnm(read_all(path), path.string());
}

void write_ppm(const RgbImage& img, const std::filesystem::path& path) {
  const std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  write_bytes(path, header, img.data.data(), img.data.size());
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes(img.data.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<std::uint8_t>(std::lround(std::clamp(img.data[i], 0.0f, 1.0f) * 255.0f));
  }
  const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  write_bytes(path, header, bytes.data(), bytes.size());
}

bool png_supported() {
#if defined(STIMKIT_HAVE_PNG)
  return true;
#else
  return false;
#endif
}

void write_png(const RgbImage& img, const std::filesystem::path& path) {
#if defined(STIMKIT_HAVE_PNG)
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, img.data.data(), 0, nullptr)) {
    fail(ErrorKind::kIo, path.string() + ": " + image.message);
  }
#else
  (void)img;
  fail(ErrorKind::kConfig, path.string() + ": built without PNG support; use PPM output");
#endif
}

}  // namespace stimkit::flow
