#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "common.hpp"
#include "flow.hpp"
#include "partition.hpp"

namespace vstats {

// Per-pixel 2-vector field: x- and y-derivative sums of one flow component.
struct BoundaryField {
  int width = 0;
  int height = 0;
  std::vector<double> gx, gy;

  BoundaryField() = default;
  BoundaryField(int w, int h)
      : width(w), height(h), gx(std::size_t(w) * h, 0.0), gy(gx) {}
  double mag(int x, int y) const {
    std::size_t i = std::size_t(y) * width + x;
    return std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
  }
};

namespace detail {

// Central differences with replicated borders; constant input -> exact zero.
inline void accumulate_gradients(const std::vector<float>& f, int w, int h,
                                 std::vector<double>& gx,
                                 std::vector<double>& gy) {
  auto v = [&](int x, int y) { return double(f[std::size_t(y) * w + x]); };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int xm = x > 0 ? x - 1 : 0, xp = x < w - 1 ? x + 1 : w - 1;
      int ym = y > 0 ? y - 1 : 0, yp = y < h - 1 ? y + 1 : h - 1;
      std::size_t i = std::size_t(y) * w + x;
      gx[i] += (v(xp, y) - v(xm, y)) / 2.0;
      gy[i] += (v(x, yp) - v(x, ym)) / 2.0;
    }
}

}  // namespace detail

struct SummedBoundaries {
  BoundaryField Mu, Mv;
  std::vector<double> pair_mean_u;  // mean boundary magnitude per frame pair
  std::vector<double> pair_mean_v;
};

inline SummedBoundaries sum_motion_boundaries(
    const std::vector<FlowField>& flows) {
  if (flows.empty()) throw GeometryError("no flow fields");
  int w = flows[0].width, h = flows[0].height;
  for (const auto& f : flows)
    if (f.width != w || f.height != h)
      throw GeometryError("flow fields differ in size");

  SummedBoundaries sb;
  sb.Mu = BoundaryField(w, h);
  sb.Mv = BoundaryField(w, h);
  std::size_t n = std::size_t(w) * h;
  for (const auto& f : flows) {
    BoundaryField bu(w, h), bv(w, h);
    detail::accumulate_gradients(f.u, w, h, bu.gx, bu.gy);
    detail::accumulate_gradients(f.v, w, h, bv.gx, bv.gy);
    double su = 0.0, sv = 0.0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        su += bu.mag(x, y);
        sv += bv.mag(x, y);
      }
    sb.pair_mean_u.push_back(su / double(n));
    sb.pair_mean_v.push_back(sv / double(n));
    for (std::size_t i = 0; i < n; ++i) {
      sb.Mu.gx[i] += bu.gx[i];
      sb.Mu.gy[i] += bu.gy[i];
      sb.Mv.gx[i] += bv.gx[i];
      sb.Mv.gy[i] += bv.gy[i];
    }
  }
  return sb;
}

// 45-degree orientation bins, counterclockwise from the positive x-axis with
// the image y-axis flipped (screen-down vectors point to negative angles).
// Classified by exact sign and octant comparisons rather than atan2, so bin
// boundaries (e.g. an exactly diagonal vector) never depend on libm rounding.
// Returns -1 for the zero vector.
inline int orientation_bin(double gx, double gy) {
  double a = gx, b = -gy;
  if (b == 0.0) {
    if (a > 0.0) return 0;
    if (a < 0.0) return 4;
    return -1;
  }
  if (b > 0.0) {
    if (a > 0.0) return b < a ? 0 : 1;
    if (a == 0.0) return 2;
    return b > -a ? 2 : 3;
  }
  // b < 0
  if (a < 0.0) return -b < -a ? 4 : 5;
  if (a == 0.0) return 6;
  return -b > a ? 6 : 7;
}

// Mean boundary-vector magnitude per region, accumulated row-major.
inline std::vector<double> region_mean_magnitudes(const BoundaryField& f,
                                                  const RegionMap& map) {
  if (f.width != map.width || f.height != map.height)
    throw GeometryError("field/region map size mismatch");
  std::vector<double> sum(map.regions, 0.0);
  std::vector<std::int64_t> count(map.regions, 0);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      int r = map.at(x, y);
      sum[r] += f.mag(x, y);
      ++count[r];
    }
  for (int r = 0; r < map.regions; ++r)
    sum[r] = count[r] ? sum[r] / double(count[r]) : 0.0;
  return sum;
}

template <typename T>
inline int argmax_low(const std::vector<T>& v) {
  int best = 0;
  for (int i = 1; i < int(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

template <typename T>
inline int argmin_low(const std::vector<T>& v) {
  int best = 0;
  for (int i = 1; i < int(v.size()); ++i)
    if (v[i] < v[best]) best = i;
  return best;
}

inline int largest_motion_block(const BoundaryField& f, const RegionMap& map) {
  return argmax_low(region_mean_magnitudes(f, map));
}

// Magnitude-weighted orientation histogram of one region; zero vectors carry
// no weight and contribute nothing.
inline std::array<double, 8> orientation_histogram(const BoundaryField& f,
                                                   const RegionMap& map,
                                                   int region) {
  std::array<double, 8> bins{};
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      if (map.at(x, y) != region) continue;
      std::size_t i = std::size_t(y) * f.width + x;
      int b = orientation_bin(f.gx[i], f.gy[i]);
      if (b >= 0) bins[b] += f.mag(x, y);
    }
  return bins;
}

inline int dominant_orientation(const BoundaryField& f, const RegionMap& map,
                                int region) {
  auto bins = orientation_histogram(f, map, region);
  int best = 0;
  for (int b = 1; b < 8; ++b)
    if (bins[b] > bins[best]) best = b;
  return best;
}

inline std::pair<int, int> global_largest_motion_frame(
    const SummedBoundaries& sb) {
  return {argmax_low(sb.pair_mean_u), argmax_low(sb.pair_mean_v)};
}

// 14 labels: [grid: u_l,u_o,v_l,v_o | rings: same | wedges: same | g_u, g_v].
inline std::array<int, 14> motion_labels(const SummedBoundaries& sb,
                                         const RegionMap& grid,
                                         const RegionMap& rings,
                                         const RegionMap& wedges) {
  std::array<int, 14> out{};
  int k = 0;
  for (const RegionMap* map : {&grid, &rings, &wedges}) {
    int ul = largest_motion_block(sb.Mu, *map);
    out[k++] = ul;
    out[k++] = dominant_orientation(sb.Mu, *map, ul);
    int vl = largest_motion_block(sb.Mv, *map);
    out[k++] = vl;
    out[k++] = dominant_orientation(sb.Mv, *map, vl);
  }
  auto [gu, gv] = global_largest_motion_frame(sb);
  out[k++] = gu;
  out[k++] = gv;
  return out;
}

inline std::array<int, 14> motion_labels(const std::vector<FlowField>& flows,
                                         const RegionMap& grid,
                                         const RegionMap& rings,
                                         const RegionMap& wedges) {
  return motion_labels(sum_motion_boundaries(flows), grid, rings, wedges);
}

}  // namespace vstats
