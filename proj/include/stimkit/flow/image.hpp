// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace stimkit::flow {

/// Row-major single-channel image with values in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  GrayImage() = default;
  GrayImage(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }
  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }

  // Bilinear sample with clamp-to-edge addressing.
  double sample(double x, double y) const;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // interleaved RGB

  RgbImage() = default;
  RgbImage(int w, int h)
      : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, 0) {}

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
  std::uint8_t channel(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3 + static_cast<std::size_t>(c)];
  }
};

GrayImage transpose(const GrayImage& img);

/// PGM (P2/P5), PPM (P3/P6, converted to luma) and, when built with libpng,
/// PNG.
GrayImage read_gray_image(const std::filesystem::path& path);

void write_ppm(const RgbImage& img, const std::filesystem::path& path);
void write_pgm(const GrayImage& img, const std::filesystem::path& path);
bool png_supported();
void write_png(const RgbImage& img, const std::filesystem::path& path);

}  // namespace stimkit::flow
