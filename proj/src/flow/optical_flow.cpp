// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/flow/optical_flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "stimkit/error.hpp"

namespace stimkit::flow {
namespace {

void require_same_size(const GrayImage& a, const GrayImage& b) {
  if (a.width != b.width || a.height != b.height) {
    fail(ErrorKind::kSize, "flow inputs differ in size: " + std::to_string(a.width) + "x" +
                               std::to_string(a.height) + " vs " + std::to_string(b.width) +
                               "x" + std::to_string(b.height));
  }
}

// Mean over a (2r+1)^2 window clipped to the image.
std::vector<double> box_mean(const std::vector<double>& src, int w, int h, int r) {
  std::vector<double> rows(src.size());
  std::vector<double> prefix(static_cast<std::size_t>(std::max(w, h)) + 1);
  for (int y = 0; y < h; ++y) {
    prefix[0] = 0.0;
    for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + src[static_cast<std::size_t>(y) * w + x];
    for (int x = 0; x < w; ++x) {
      const int lo = std::max(0, x - r);
      const int hi = std::min(w - 1, x + r);
      rows[static_cast<std::size_t>(y) * w + x] = (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1);
    }
  }
  std::vector<double> out(src.size());
  for (int x = 0; x < w; ++x) {
    prefix[0] = 0.0;
    for (int y = 0; y < h; ++y) prefix[y + 1] = prefix[y] + rows[static_cast<std::size_t>(y) * w + x];
    for (int y = 0; y < h; ++y) {
      const int lo = std::max(0, y - r);
      const int hi = std::min(h - 1, y + r);
      out[static_cast<std::size_t>(y) * w + x] = (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1);
    }
  }
  return out;
}

// In-place Gauss-Jordan inverse of a small dense matrix.
template <std::size_t N>
std::array<std::array<double, N>, N> invert(std::array<std::array<double, N>, N> m) {
  std::array<std::array<double, N>, N> inv{};
  for (std::size_t i = 0; i < N; ++i) inv[i][i] = 1.0;
  for (std::size_t c = 0; c < N; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < N; ++r) {
      if (std::abs(m[r][c]) > std::abs(m[pivot][c])) pivot = r;
    }
    std::swap(m[c], m[pivot]);
    std::swap(inv[c], inv[pivot]);
    const double d = m[c][c];
    for (std::size_t k = 0; k < N; ++k) {
      m[c][k] /= d;
      inv[c][k] /= d;
    }
    for (std::size_t r = 0; r < N; ++r) {
      if (r == c) continue;
      const double f = m[r][c];
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < N; ++k) {
        m[r][k] -= f * m[c][k];
        inv[r][k] -= f * inv[c][k];
      }
    }
  }
  return inv;
}

double sample_field(const std::vector<double>& field, std::size_t stride, std::size_t channel,
                    int w, int h, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  auto at = [&](int xx, int yy) {
    return field[(static_cast<std::size_t>(yy) * static_cast<std::size_t>(w) + static_cast<std::size_t>(xx)) * stride + channel];
  };
  return (1 - fy) * ((1 - fx) * at(x0, y0) + fx * at(x1, y0)) +
         fy * ((1 - fx) * at(x0, y1) + fx * at(x1, y1));
}

}  // namespace

std::size_t FlowField::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

std::pair<GrayImage, GrayImage> image_gradients(const GrayImage& img) {
  if (img.width < 3 || img.height < 3) {
    fail(ErrorKind::kSize, "image_gradients needs at least 3x3, got " +
                               std::to_string(img.width) + "x" + std::to_string(img.height));
  }
  GrayImage ix(img.width, img.height);
  GrayImage iy(img.width, img.height);
  const int w = img.width;
  const int h = img.height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x == 0) {
        ix.at(x, y) = img.at(1, y) - img.at(0, y);
      } else if (x == w - 1) {
        ix.at(x, y) = img.at(w - 1, y) - img.at(w - 2, y);
      } else {
        ix.at(x, y) = (img.at(x + 1, y) - img.at(x - 1, y)) * 0.5f;
      }
      if (y == 0) {
        iy.at(x, y) = img.at(x, 1) - img.at(x, 0);
      } else if (y == h - 1) {
        iy.at(x, y) = img.at(x, h - 1) - img.at(x, h - 2);
      } else {
        iy.at(x, y) = (img.at(x, y + 1) - img.at(x, y - 1)) * 0.5f;
      }
    }
  }
  return {std::move(ix), std::move(iy)};
}

FlowField lucas_kanade_grid(const GrayImage& prev, const GrayImage& next,
                            const LucasKanadeParams& params) {
  require_same_size(prev, next);
  if (params.spacing < 1 || params.window < 1) {
    fail(ErrorKind::kConfig, "lucas_kanade_grid needs spacing >= 1 and window >= 1");
  }
  const auto [ix, iy] = image_gradients(prev);
  const int w = prev.width;
  const int h = prev.height;
  const int half = params.window / 2;

  FlowField flow;
  flow.kind = FlowKind::kSparseGrid;
  flow.width = w;
  flow.height = h;
  flow.grid_cols = (w - 1) / params.spacing + 1;
  flow.grid_rows = (h - 1) / params.spacing + 1;

  for (int py = 0; py < h; py += params.spacing) {
    for (int px = 0; px < w; px += params.spacing) {
      const int x0 = std::max(0, px - half);
      const int x1 = std::min(w - 1, px + half);
      const int y0 = std::max(0, py - half);
      const int y1 = std::min(h - 1, py + half);
      double gxx = 0.0, gxy = 0.0, gyy = 0.0;
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double gx = ix.at(x, y);
          const double gy = iy.at(x, y);
          gxx += gx * gx;
          gxy += gx * gy;
          gyy += gy * gy;
        }
      }
      const double mean = 0.5 * (gxx + gyy);
      const double radius = std::sqrt(0.25 * (gxx - gyy) * (gxx - gyy) + gxy * gxy);
      const double min_eig = mean - radius;

      FlowVector vec;
      std::uint8_t ok = 0;
      if (min_eig >= params.min_eigen) {
        ok = 1;
        const double det = gxx * gyy - gxy * gxy;
        double u = 0.0, v = 0.0;
        for (int it = 0; it < std::max(1, params.iterations); ++it) {
          double bx = 0.0, by = 0.0;
          for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
              const double it_val = next.sample(x + u, y + v) - prev.at(x, y);
              bx -= ix.at(x, y) * it_val;
              by -= iy.at(x, y) * it_val;
            }
          }
          const double du = (gyy * bx - gxy * by) / det;
          const double dv = (gxx * by - gxy * bx) / det;
          u += du;
          v += dv;
          if (du * du + dv * dv < 1e-8) break;
        }
        vec = FlowVector{static_cast<float>(u), static_cast<float>(v)};
      }
      flow.points.push_back(FlowPoint{static_cast<float>(px), static_cast<float>(py)});
      flow.vectors.push_back(vec);
      flow.valid.push_back(ok);
    }
  }
  return flow;
}

PolynomialExpansion polynomial_expansion(const GrayImage& img, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(2.0 * sigma)));
  const int side = 2 * radius + 1;
  const std::size_t taps = static_cast<std::size_t>(side) * static_cast<std::size_t>(side);

  // Weighted least squares on the basis {1, x, y, x^2, y^2, xy}: the
  // projection matrix (B^T W B)^-1 B^T W is the same for every pixel.
  std::vector<std::array<double, 6>> basis(taps);
  std::vector<double> weight(taps);
  std::array<std::array<double, 6>, 6> gram{};
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const std::size_t k = static_cast<std::size_t>((dy + radius) * side + (dx + radius));
      basis[k] = {1.0, double(dx), double(dy), double(dx * dx), double(dy * dy), double(dx * dy)};
      weight[k] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j) gram[i][j] += weight[k] * basis[k][i] * basis[k][j];
      }
    }
  }
  const auto gram_inv = invert(gram);
  std::vector<std::array<double, 6>> projection(taps);
  for (std::size_t k = 0; k < taps; ++k) {
    for (std::size_t i = 0; i < 6; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 6; ++j) s += gram_inv[i][j] * basis[k][j];
      projection[k][i] = s * weight[k];
    }
  }

  PolynomialExpansion out;
  out.width = img.width;
  out.height = img.height;
  out.coeffs.assign(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height) * 5, 0.0);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      std::array<double, 6> r{};
      for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = std::clamp(y + dy, 0, img.height - 1);
        for (int dx = -radius; dx <= radius; ++dx) {
          const int xx = std::clamp(x + dx, 0, img.width - 1);
          const double f = img.at(xx, yy);
          const auto& p = projection[static_cast<std::size_t>((dy + radius) * side + (dx + radius))];
          for (std::size_t i = 0; i < 6; ++i) r[i] += p[i] * f;
        }
      }
      double* c = &out.coeffs[(static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width) + static_cast<std::size_t>(x)) * 5];
      c[0] = r[3];
      c[1] = 0.5 * r[5];
      c[2] = r[4];
      c[3] = r[1];
      c[4] = r[2];
    }
  }
  return out;
}

FlowField farneback_dense(const GrayImage& prev, const GrayImage& next,
                          const FarnebackParams& params) {
  require_same_size(prev, next);
  if (prev.width < 16 || prev.height < 16) {
    fail(ErrorKind::kSize, "farneback_dense needs images of at least 16x16");
  }
  const int w = prev.width;
  const int h = prev.height;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const PolynomialExpansion e1 = polynomial_expansion(prev, params.sigma_expansion);
  const PolynomialExpansion e2 = polynomial_expansion(next, params.sigma_expansion);

  std::vector<double> du(n, 0.0), dv(n, 0.0);
  std::vector<std::uint8_t> valid(n, 0);
  std::vector<double> g11(n), g12(n), g22(n), h1(n), h2(n);
  const int r = params.avg_window / 2;

  for (int iter = 0; iter < std::max(1, params.iterations); ++iter) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
        const double* c1 = &e1.coeffs[i * 5];
        const double sx = x + du[i];
        const double sy = y + dv[i];
        double c2[5];
        for (std::size_t k = 0; k < 5; ++k) c2[k] = sample_field(e2.coeffs, 5, k, w, h, sx, sy);
        const double a11 = 0.5 * (c1[0] + c2[0]);
        const double a12 = 0.5 * (c1[1] + c2[1]);
        const double a22 = 0.5 * (c1[2] + c2[2]);
        const double db1 = -0.5 * (c2[3] - c1[3]) + a11 * du[i] + a12 * dv[i];
        const double db2 = -0.5 * (c2[4] - c1[4]) + a12 * du[i] + a22 * dv[i];
        g11[i] = a11 * a11 + a12 * a12;
        g12[i] = a11 * a12 + a12 * a22;
        g22[i] = a12 * a12 + a22 * a22;
        h1[i] = a11 * db1 + a12 * db2;
        h2[i] = a12 * db1 + a22 * db2;
      }
    }
    const auto s11 = box_mean(g11, w, h, r);
    const auto s12 = box_mean(g12, w, h, r);
    const auto s22 = box_mean(g22, w, h, r);
    const auto t1 = box_mean(h1, w, h, r);
    const auto t2 = box_mean(h2, w, h, r);
    for (std::size_t i = 0; i < n; ++i) {
      const double det = s11[i] * s22[i] - s12[i] * s12[i];
      if (std::abs(det) < params.min_determinant) {
        valid[i] = 0;
        continue;
      }
      valid[i] = 1;
      du[i] = (s22[i] * t1[i] - s12[i] * t2[i]) / det;
      dv[i] = (s11[i] * t2[i] - s12[i] * t1[i]) / det;
    }
  }

  FlowField flow;
  flow.kind = FlowKind::kDense;
  flow.width = w;
  flow.height = h;
  flow.points.reserve(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
      flow.points.push_back(FlowPoint{static_cast<float>(x), static_cast<float>(y)});
      flow.vectors.push_back(valid[i] ? FlowVector{static_cast<float>(du[i]), static_cast<float>(dv[i])}
                                      : FlowVector{});
      flow.valid.push_back(valid[i]);
    }
  }
  return flow;
}

}  // namespace stimkit::flow
