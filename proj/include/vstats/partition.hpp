#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "common.hpp"

namespace vstats {

struct RegionMap {
  int width = 0;
  int height = 0;
  int regions = 0;
  std::vector<std::uint8_t> idx;  // row-major region id per pixel

  RegionMap() = default;
  RegionMap(int w, int h, int k)
      : width(w), height(h), regions(k), idx(std::size_t(w) * h, 0) {}
  std::uint8_t& at(int x, int y) { return idx[std::size_t(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return idx[std::size_t(y) * width + x]; }
};

namespace detail {

inline void check_nonempty(const RegionMap& m, const char* name) {
  std::vector<int> count(m.regions, 0);
  for (auto r : m.idx) ++count[r];
  for (int k = 0; k < m.regions; ++k)
    if (count[k] == 0)
      throw GeometryError(std::string(name) + ": empty region at this size");
}

}  // namespace detail

// 4x4 axis-aligned blocks, row-major ids 0..15.
inline RegionMap grid4x4(int w, int h) {
  if (w < 4 || h < 4) throw GeometryError("grid4x4 needs at least 4x4 pixels");
  RegionMap m(w, h, 16);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      m.at(x, y) = std::uint8_t(4 * (4 * y / h) + (4 * x / w));
  detail::check_nonempty(m, "grid4x4");
  return m;
}

// Four concentric rectangular rings, outermost id 0 to innermost id 3.
// Ring width g = min(w,h)/8; the centre block absorbs insets >= 3g.
inline RegionMap rings4(int w, int h) {
  int g = std::min(w, h) / 8;
  if (g == 0) throw GeometryError("rings4 needs min(w,h) >= 8");
  RegionMap m(w, h, 4);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int inset = std::min(std::min(x, y), std::min(w - 1 - x, h - 1 - y));
      m.at(x, y) = std::uint8_t(std::min(inset / g, 3));
    }
  detail::check_nonempty(m, "rings4");
  return m;
}

// Eight 45-degree sectors around the image centre, id 0 starting at the
// positive-x axis and increasing counter-clockwise (y-up convention).
// Pixel angles are classified exactly on the integer lattice scaled by 2:
// X = 2x-(w-1), Y = (h-1)-2y, and the diagonal tests compare against the
// centre-to-corner lines Y*(w-1) = +-X*(h-1) so corner pixels land on
// sector boundaries regardless of aspect ratio.
inline RegionMap wedges8(int w, int h) {
  if (w < 3 || h < 3) throw GeometryError("wedges8 needs at least 3x3 pixels");
  RegionMap m(w, h, 8);
  std::int64_t W = w - 1, H = h - 1;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::int64_t X = 2 * std::int64_t(x) - W;
      std::int64_t Y = H - 2 * std::int64_t(y);
      std::int64_t d1 = Y * W - X * H;  // >0 above the main diagonal
      std::int64_t d2 = Y * W + X * H;  // >0 above the anti-diagonal
      int s;
      if (X == 0 && Y == 0) s = 0;
      else if (X > 0 && Y == 0) s = 0;
      else if (X > 0 && Y > 0) s = d1 <= 0 ? 0 : 1;
      else if (X == 0 && Y > 0) s = 1;
      else if (X < 0 && Y > 0) s = d2 >= 0 ? 2 : 3;
      else if (X < 0 && Y == 0) s = 3;
      else if (X < 0 && Y < 0) s = d1 >= 0 ? 4 : 5;
      else if (X == 0 && Y < 0) s = 5;
      else s = d2 <= 0 ? 6 : 7;  // X > 0 && Y < 0
      m.at(x, y) = std::uint8_t(s);
    }
  detail::check_nonempty(m, "wedges8");
  return m;
}

}  // namespace vstats
