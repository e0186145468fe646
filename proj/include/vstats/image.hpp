#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "common.hpp"

namespace vstats {

// Interleaved 8-bit RGB, row-major.
struct ImageU8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  ImageU8() = default;
  ImageU8(int w, int h) : width(w), height(h), data(std::size_t(w) * h * 3, 0) {}
  ImageU8(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b)
      : width(w), height(h), data(std::size_t(w) * h * 3) {
    for (std::size_t i = 0; i < data.size(); i += 3) {
      data[i] = r;
      data[i + 1] = g;
      data[i + 2] = b;
    }
  }

  std::uint8_t& at(int x, int y, int c) {
    return data[(std::size_t(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return data[(std::size_t(y) * width + x) * 3 + c];
  }
};

// Single-channel float plane, row-major.
struct PlaneF {
  int width = 0;
  int height = 0;
  std::vector<float> v;

  PlaneF() = default;
  PlaneF(int w, int h, float fill = 0.f)
      : width(w), height(h), v(std::size_t(w) * h, fill) {}

  float& at(int x, int y) { return v[std::size_t(y) * width + x]; }
  float at(int x, int y) const { return v[std::size_t(y) * width + x]; }
};

// Rec.601 luma of normalized RGB; output in [0,1].
inline PlaneF luma(const ImageU8& im) {
  PlaneF p(im.width, im.height);
  std::size_t n = std::size_t(im.width) * im.height;
  for (std::size_t i = 0; i < n; ++i) {
    double r = im.data[i * 3], g = im.data[i * 3 + 1], b = im.data[i * 3 + 2];
    p.v[i] = float((0.299 * r + 0.587 * g + 0.114 * b) / 255.0);
  }
  return p;
}

namespace detail {
// Endpoint-aligned source coordinate for bilinear resize.
inline double src_coord(int j, int dst, int src) {
  if (dst <= 1) return 0.0;
  return double(j) * double(src - 1) / double(dst - 1);
}
}  // namespace detail

inline ImageU8 resize_bilinear(const ImageU8& im, int w, int h) {
  if (w < 2 || h < 2) throw GeometryError("resize target must be at least 2");
  if (im.width < 1 || im.height < 1) throw GeometryError("resize of empty image");
  ImageU8 out(w, h);
  for (int y = 0; y < h; ++y) {
    double sy = detail::src_coord(y, h, im.height);
    int y0 = int(sy);
    int y1 = std::min(y0 + 1, im.height - 1);
    double fy = sy - y0;
    for (int x = 0; x < w; ++x) {
      double sx = detail::src_coord(x, w, im.width);
      int x0 = int(sx);
      int x1 = std::min(x0 + 1, im.width - 1);
      double fx = sx - x0;
      for (int c = 0; c < 3; ++c) {
        double v00 = im.at(x0, y0, c), v10 = im.at(x1, y0, c);
        double v01 = im.at(x0, y1, c), v11 = im.at(x1, y1, c);
        double v = (1 - fy) * ((1 - fx) * v00 + fx * v10) +
                   fy * ((1 - fx) * v01 + fx * v11);
        out.at(x, y, c) = std::uint8_t(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

inline PlaneF resize_bilinear(const PlaneF& p, int w, int h) {
  if (w < 2 || h < 2) throw GeometryError("resize target must be at least 2");
  PlaneF out(w, h);
  for (int y = 0; y < h; ++y) {
    double sy = detail::src_coord(y, h, p.height);
    int y0 = int(sy);
    int y1 = std::min(y0 + 1, p.height - 1);
    double fy = sy - y0;
    for (int x = 0; x < w; ++x) {
      double sx = detail::src_coord(x, w, p.width);
      int x0 = int(sx);
      int x1 = std::min(x0 + 1, p.width - 1);
      double fx = sx - x0;
      double v = (1 - fy) * ((1 - fx) * p.at(x0, y0) + fx * p.at(x1, y0)) +
                 fy * ((1 - fx) * p.at(x0, y1) + fx * p.at(x1, y1));
      out.at(x, y) = float(v);
    }
  }
  return out;
}

inline ImageU8 crop(const ImageU8& im, int left, int top, int w, int h) {
  if (left < 0 || top < 0 || w < 1 || h < 1 || left + w > im.width ||
      top + h > im.height)
    throw GeometryError("crop window outside image");
  ImageU8 out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = im.at(left + x, top + y, c);
  return out;
}

inline ImageU8 center_crop(const ImageU8& im, int w, int h) {
  return crop(im, (im.width - w) / 2, (im.height - h) / 2, w, h);
}

inline ImageU8 hflip(const ImageU8& im) {
  ImageU8 out(im.width, im.height);
  for (int y = 0; y < im.height; ++y)
    for (int x = 0; x < im.width; ++x)
      for (int c = 0; c < 3; ++c)
        out.at(x, y, c) = im.at(im.width - 1 - x, y, c);
  return out;
}

}  // namespace vstats
