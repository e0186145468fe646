#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "common.hpp"
#include "flow.hpp"
#include "videoio.hpp"

namespace vstats {

enum class ShapeKind { circle, triangle, rectangle };

struct ShapeSpec {
  ShapeKind kind;
  std::array<std::uint8_t, 3> color;
  double cx, cy;  // centre at frame 0, subpixel
  double vx, vy;  // pixels per frame
  double size;    // radius or half-extent
};

struct SynthClip {
  Clip clip;
  std::vector<FlowField> flows;  // analytic, one per consecutive pair
  std::array<int, 14> motion{};
  std::array<bool, 14> motion_valid{};  // false = ambiguous, no assertion
  std::array<int, 13> appearance{};
  std::array<bool, 13> appearance_valid{};
};

namespace detail {

inline bool shape_contains(const ShapeSpec& s, double t, int x, int y) {
  double cx = s.cx + s.vx * t, cy = s.cy + s.vy * t;
  double dx = x - cx, dy = y - cy;
  switch (s.kind) {
    case ShapeKind::circle:
      return dx * dx + dy * dy <= s.size * s.size;
    case ShapeKind::rectangle:
      return std::abs(dx) <= s.size && std::abs(dy) <= s.size;
    case ShapeKind::triangle: {
      // apex-up: v0=(cx,cy-s), v1=(cx-s,cy+s), v2=(cx+s,cy+s), edges inclusive
      double x0 = cx, y0 = cy - s.size;
      double x1 = cx - s.size, y1 = cy + s.size;
      double x2 = cx + s.size, y2 = cy + s.size;
      double e0 = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0);
      double e1 = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1);
      double e2 = (x0 - x2) * (y - y2) - (y0 - y2) * (x - x2);
      return (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
    }
  }
  return false;
}

}  // namespace detail

// --------------------------------------------------------- truth computation
//
// Ground-truth labels are computed here with standalone loops — no calls into
// the label modules — so that pipeline-vs-truth comparisons exercise two
// unrelated code paths. Fields whose winner is decided by less than one part
// in 1e9 (or an exact tie) are marked invalid rather than asserted.

namespace truth_detail {

inline int grid_region(int x, int y, int w, int h) {
  return (4 * y / h) * 4 + (4 * x / w);
}

inline int ring_region(int x, int y, int w, int h) {
  int g = (w < h ? w : h) / 8;
  int inset = std::min(std::min(x, y), std::min(w - 1 - x, h - 1 - y));
  int k = inset / g;
  return k > 3 ? 3 : k;
}

inline int wedge_region(int x, int y, int w, int h) {
  long long W = w - 1, H = h - 1;
  long long X = 2LL * x - W, Y = H - 2LL * y;
  long long c1 = Y * W - X * H;  // main diagonal through corners
  long long c2 = Y * W + X * H;  // anti diagonal
  if (X > 0 && Y >= 0) return Y == 0 ? 0 : (c1 <= 0 ? 0 : 1);
  if (X <= 0 && Y > 0) return X == 0 ? 1 : (c2 >= 0 ? 2 : 3);
  if (X < 0 && Y <= 0) return Y == 0 ? 3 : (c1 >= 0 ? 4 : 5);
  if (X >= 0 && Y < 0) return X == 0 ? 5 : (c2 <= 0 ? 6 : 7);
  return 0;  // exact centre
}

// 45-degree bin of the y-up vector (a, b); -1 for zero.
inline int angle_bin8(double a, double b) {
  if (a == 0.0 && b == 0.0) return -1;
  if (b >= 0.0) {
    if (a > 0.0) return b == 0.0 ? 0 : (b < a ? 0 : 1);
    if (a == 0.0) return 2;
    return b > -a ? 2 : (b > 0.0 ? 3 : 4);
  }
  if (a < 0.0) return -b < -a ? 4 : 5;
  if (a == 0.0) return 6;
  return -b > a ? 6 : 7;
}

inline bool near_tie(double best, double runner) {
  double scale = std::max({std::abs(best), std::abs(runner), 1e-12});
  return best - runner <= 1e-9 * scale;
}

struct Pick {
  int idx = 0;
  bool ok = false;
};

inline Pick pick_max(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < int(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  double runner = -1e300;
  for (int i = 0; i < int(v.size()); ++i)
    if (i != best) runner = std::max(runner, v[i]);
  return {best, v.size() > 1 && !near_tie(v[best], runner)};
}

inline Pick pick_min(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < int(v.size()); ++i)
    if (v[i] < v[best]) best = i;
  double runner = 1e300;
  for (int i = 0; i < int(v.size()); ++i)
    if (i != best) runner = std::min(runner, v[i]);
  return {best, v.size() > 1 && !near_tie(-v[best], -runner)};
}

using RegionFn = int (*)(int, int, int, int);

struct Truth {
  std::array<int, 14> motion{};
  std::array<bool, 14> motion_ok{};
  std::array<int, 13> app{};
  std::array<bool, 13> app_ok{};
};

inline Truth compute_truth(const Clip& clip, const std::vector<FlowField>& flows,
                           int bins) {
  int w = clip.width(), h = clip.height(), N = clip.size();
  std::size_t n = std::size_t(w) * h;
  const RegionFn fns[3] = {grid_region, ring_region, wedge_region};
  const int ks[3] = {16, 4, 8};

  // summed derivative fields of u and of v, plus per-pair mean magnitudes
  std::vector<double> ugx(n, 0), ugy(n, 0), vgx(n, 0), vgy(n, 0);
  std::vector<double> pair_u, pair_v;
  for (const auto& f : flows) {
    double su = 0, sv = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        int xl = x ? x - 1 : 0, xr = x + 1 < w ? x + 1 : w - 1;
        int yu = y ? y - 1 : 0, yd = y + 1 < h ? y + 1 : h - 1;
        double a = (double(f.u_at(xr, y)) - double(f.u_at(xl, y))) / 2.0;
        double b = (double(f.u_at(x, yd)) - double(f.u_at(x, yu))) / 2.0;
        double c = (double(f.v_at(xr, y)) - double(f.v_at(xl, y))) / 2.0;
        double d = (double(f.v_at(x, yd)) - double(f.v_at(x, yu))) / 2.0;
        std::size_t i = std::size_t(y) * w + x;
        ugx[i] += a;
        ugy[i] += b;
        vgx[i] += c;
        vgy[i] += d;
        su += std::sqrt(a * a + b * b);
        sv += std::sqrt(c * c + d * d);
      }
    pair_u.push_back(su / double(n));
    pair_v.push_back(sv / double(n));
  }

  Truth out;
  int mi = 0;
  for (int p = 0; p < 3; ++p) {
    for (int comp = 0; comp < 2; ++comp) {
      const auto& gx = comp == 0 ? ugx : vgx;
      const auto& gy = comp == 0 ? ugy : vgy;
      std::vector<double> sum(ks[p], 0.0);
      std::vector<long long> cnt(ks[p], 0);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          int r = fns[p](x, y, w, h);
          std::size_t i = std::size_t(y) * w + x;
          sum[r] += std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
          ++cnt[r];
        }
      for (int r = 0; r < ks[p]; ++r) sum[r] = cnt[r] ? sum[r] / cnt[r] : 0.0;
      Pick loc = pick_max(sum);
      bool has_motion = sum[loc.idx] > 0.0;
      out.motion[mi] = loc.idx;
      out.motion_ok[mi] = loc.ok && has_motion;
      ++mi;

      std::vector<double> obins(8, 0.0);
      bool any = false;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          if (fns[p](x, y, w, h) != loc.idx) continue;
          std::size_t i = std::size_t(y) * w + x;
          int ob = angle_bin8(gx[i], -gy[i]);
          if (ob < 0) continue;
          obins[ob] += std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
          any = true;
        }
      Pick ori = pick_max(obins);
      out.motion[mi] = ori.idx;
      out.motion_ok[mi] = out.motion_ok[mi - 1] && any && ori.ok;
      ++mi;
    }
  }
  Pick gu = pick_max(pair_u), gv = pick_max(pair_v);
  bool moving_u = pair_u[gu.idx] > 0.0, moving_v = pair_v[gv.idx] > 0.0;
  out.motion[12] = gu.idx;
  out.motion_ok[12] = flows.size() > 1 && gu.ok && moving_u;
  out.motion[13] = gv.idx;
  out.motion_ok[13] = flows.size() > 1 && gv.ok && moving_v;

  // appearance
  int ai = 0;
  for (int p = 0; p < 3; ++p) {
    int K = ks[p];
    std::vector<long long> hist(std::size_t(K) * N * 3 * bins, 0);
    for (int t = 0; t < N; ++t)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          int r = fns[p](x, y, w, h);
          for (int c = 0; c < 3; ++c) {
            int b = int(clip.frames[t].at(x, y, c)) * bins / 256;
            ++hist[((std::size_t(r) * N + t) * 3 + c) * bins + b];
          }
        }
    std::vector<double> score(K, 0.0);
    for (int r = 0; r < K; ++r) {
      double acc = 0.0;
      for (int c = 0; c < 3; ++c) {
        long long inter = 0, uni = 0;
        for (int b = 0; b < bins; ++b) {
          long long mn = hist[((std::size_t(r) * N) * 3 + c) * bins + b];
          long long mx = mn;
          for (int t = 1; t < N; ++t) {
            long long v = hist[((std::size_t(r) * N + t) * 3 + c) * bins + b];
            mn = std::min(mn, v);
            mx = std::max(mx, v);
          }
          inter += mn;
          uni += mx;
        }
        acc += uni == 0 ? 0.0 : double(inter) / double(uni);
      }
      score[r] = acc / 3.0;
    }
    Pick pd = pick_min(score), ps = pick_max(score);

    auto octants = [&](int region) {
      std::array<long long, 8> cts{};
      for (int t = 0; t < N; ++t)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) {
            if (region >= 0 && fns[p](x, y, w, h) != region) continue;
            const ImageU8& im = clip.frames[t];
            int oc = (im.at(x, y, 0) >= 128 ? 4 : 0) +
                     (im.at(x, y, 1) >= 128 ? 2 : 0) +
                     (im.at(x, y, 2) >= 128 ? 1 : 0);
            ++cts[oc];
          }
      return cts;
    };
    auto pick_color = [&](int region) {
      auto cts = octants(region);
      int best = 0;
      long long runner = -1;
      for (int b = 1; b < 8; ++b)
        if (cts[b] > cts[best]) best = b;
      for (int b = 0; b < 8; ++b)
        if (b != best) runner = std::max(runner, cts[b]);
      return std::pair<int, bool>(best, cts[best] > runner);
    };

    out.app[ai] = pd.idx;
    out.app_ok[ai] = pd.ok;
    ++ai;
    auto cd = pick_color(pd.idx);
    out.app[ai] = cd.first;
    out.app_ok[ai] = pd.ok && cd.second;
    ++ai;
    out.app[ai] = ps.idx;
    out.app_ok[ai] = ps.ok;
    ++ai;
    auto cs = pick_color(ps.idx);
    out.app[ai] = cs.first;
    out.app_ok[ai] = ps.ok && cs.second;
    ++ai;
    if (p == 0) {
      auto cg = pick_color(-1);
      out.app[12] = cg.first;
      out.app_ok[12] = cg.second;
    }
  }
  return out;
}

}  // namespace truth_detail

// ------------------------------------------------------------- generators

inline SynthClip gen_moving_shapes(const std::vector<ShapeSpec>& specs,
                                   std::array<std::uint8_t, 3> background,
                                   int n, int h, int w, int bins = 16) {
  if (n < 2) throw GeometryError("need at least 2 frames");
  if (w < 8 || h < 8) throw GeometryError("frame too small for all patterns");
  for (const auto& s : specs) {
    if (s.size <= 0) throw GeometryError("non-positive shape size");
    for (int t = 0; t < n; ++t) {
      double cx = s.cx + s.vx * t, cy = s.cy + s.vy * t;
      if (cx - s.size < 0 || cx + s.size > w - 1 || cy - s.size < 0 ||
          cy + s.size > h - 1)
        throw GeometryError("shape exits frame at t=" + std::to_string(t));
    }
  }

  SynthClip sc;
  for (int t = 0; t < n; ++t) {
    ImageU8 im(w, h, background[0], background[1], background[2]);
    for (const auto& s : specs)  // painter order, later specs on top
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          if (detail::shape_contains(s, t, x, y)) {
            im.at(x, y, 0) = s.color[0];
            im.at(x, y, 1) = s.color[1];
            im.at(x, y, 2) = s.color[2];
          }
    sc.clip.frames.push_back(std::move(im));
  }
  for (int t = 0; t + 1 < n; ++t) {
    FlowField f(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int k = int(specs.size()) - 1; k >= 0; --k)
          if (detail::shape_contains(specs[k], t, x, y)) {
            f.u_at(x, y) = float(specs[k].vx);
            f.v_at(x, y) = float(specs[k].vy);
            break;
          }
    sc.flows.push_back(std::move(f));
  }

  auto tr = truth_detail::compute_truth(sc.clip, sc.flows, bins);
  sc.motion = tr.motion;
  sc.motion_valid = tr.motion_ok;
  sc.appearance = tr.app;
  sc.appearance_valid = tr.app_ok;
  return sc;
}

// Smooth periodic random texture: two bilinear value-noise octaves.
struct NoisePattern {
  int coarse_cells, fine_cells;
  std::vector<std::array<double, 3>> coarse, fine;

  explicit NoisePattern(std::uint64_t seed, int coarse_n = 14, int fine_n = 47)
      : coarse_cells(coarse_n), fine_cells(fine_n) {
    std::mt19937_64 eng(seed);
    auto fill = [&](std::vector<std::array<double, 3>>& lat, int cells) {
      lat.resize(std::size_t(cells) * cells);
      for (auto& c : lat)
        for (int k = 0; k < 3; ++k)
          c[k] = double(eng() >> 11) * (255.0 / 9007199254740992.0);
    };
    fill(coarse, coarse_cells);
    fill(fine, fine_cells);
  }

  std::array<double, 3> sample(double x, double y, int w, int h) const {
    auto lat_sample = [&](const std::vector<std::array<double, 3>>& lat,
                          int cells) {
      double lx = x * cells / w, ly = y * cells / h;
      int ix = int(std::floor(lx)), iy = int(std::floor(ly));
      double fx = lx - ix, fy = ly - iy;
      auto wrap = [cells](int i) { return ((i % cells) + cells) % cells; };
      int x0 = wrap(ix), x1 = wrap(ix + 1), y0 = wrap(iy), y1 = wrap(iy + 1);
      std::array<double, 3> out{};
      for (int k = 0; k < 3; ++k) {
        double a = lat[std::size_t(y0) * cells + x0][k];
        double b = lat[std::size_t(y0) * cells + x1][k];
        double c = lat[std::size_t(y1) * cells + x0][k];
        double d = lat[std::size_t(y1) * cells + x1][k];
        out[k] = (1 - fy) * ((1 - fx) * a + fx * b) +
                 fy * ((1 - fx) * c + fx * d);
      }
      return out;
    };
    auto lo = lat_sample(coarse, coarse_cells);
    auto hi = lat_sample(fine, fine_cells);
    std::array<double, 3> out{};
    for (int k = 0; k < 3; ++k) out[k] = 0.7 * lo[k] + 0.3 * hi[k];
    return out;
  }

  ImageU8 render(int w, int h, double shift_x, double shift_y) const {
    ImageU8 im(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double sx = std::fmod(x - shift_x, double(w));
        double sy = std::fmod(y - shift_y, double(h));
        if (sx < 0) sx += w;
        if (sy < 0) sy += h;
        auto c = sample(sx, sy, w, h);
        for (int k = 0; k < 3; ++k)
          im.at(x, y, k) =
              std::uint8_t(std::lround(std::clamp(c[k], 0.0, 255.0)));
      }
    return im;
  }
};

// Uniform camera pan over a toroidal noise texture; flow is the exact
// constant velocity. Velocity must be zero (static clip) or >= 0.5 px/frame.
inline SynthClip gen_global_pan(std::uint64_t texture_seed, double vx,
                                double vy, int n, int h, int w,
                                int bins = 16) {
  double speed = std::hypot(vx, vy);
  if (speed != 0.0 && speed < 0.5)
    throw ConfigError("pan speed must be 0 or >= 0.5 px/frame");
  if (n < 2) throw GeometryError("need at least 2 frames");
  if (w < 8 || h < 8) throw GeometryError("frame too small for all patterns");

  NoisePattern pat(texture_seed);
  SynthClip sc;
  for (int t = 0; t < n; ++t)
    sc.clip.frames.push_back(pat.render(w, h, vx * t, vy * t));
  for (int t = 0; t + 1 < n; ++t) {
    FlowField f(w, h);
    std::fill(f.u.begin(), f.u.end(), float(vx));
    std::fill(f.v.begin(), f.v.end(), float(vy));
    sc.flows.push_back(std::move(f));
  }
  auto tr = truth_detail::compute_truth(sc.clip, sc.flows, bins);
  sc.motion = tr.motion;
  sc.motion_valid = tr.motion_ok;
  sc.appearance = tr.app;
  sc.appearance_valid = tr.app_ok;
  return sc;
}

// ---------------------------------------------------------------- scenarios

// Two-object scene: blue circle crossing grid blocks 3 -> 6 at a 210-degree
// velocity angle, yellow triangle drifting left within the bottom row, white
// background. Constants are tuned so every asserted label wins its region
// contest by a healthy margin on the pixel lattice.
inline SynthClip fig2_scenario() {
  std::vector<ShapeSpec> shapes = {
      {ShapeKind::circle, {0, 0, 255}, 95.0, 27.82, -3.0, std::sqrt(3.0), 16.0},
      {ShapeKind::triangle, {255, 255, 0}, 98.0, 70.0, -1.25, 0.0, 5.0},
  };
  return gen_moving_shapes(shapes, {255, 255, 255}, 13, 112, 112);
}

inline SynthClip pan_scenario(std::uint64_t seed) {
  return gen_global_pan(seed, 2.0, 0.0, 4, 112, 112);
}

// 1-3 non-overlapping shapes, each confined to its own quadrant of a 96x96
// frame, with speeds in [0.5, 2.5] px/frame per axis.
inline SynthClip random_scenario(std::uint64_t seed) {
  std::mt19937_64 eng(seed ^ 0x9e3779b97f4a7c15ull);
  const int W = 96, H = 96, N = 6;
  int count = 1 + int(eng() % 3);

  std::array<int, 4> quads = {0, 1, 2, 3};
  for (int i = 3; i > 0; --i)
    std::swap(quads[i], quads[eng() % std::uint64_t(i + 1)]);

  const std::array<std::array<std::uint8_t, 3>, 6> palette = {{
      {220, 30, 30},
      {30, 120, 220},
      {30, 200, 80},
      {240, 200, 40},
      {180, 60, 200},
      {40, 40, 40},
  }};
  std::array<int, 6> pal_order = {0, 1, 2, 3, 4, 5};
  for (int i = 5; i > 0; --i)
    std::swap(pal_order[i], pal_order[eng() % std::uint64_t(i + 1)]);

  std::vector<ShapeSpec> shapes;
  for (int s = 0; s < count; ++s) {
    int q = quads[s];
    double qx = (q % 2) * 48.0, qy = (q / 2) * 48.0;
    ShapeKind kind = ShapeKind(eng() % 3);
    double size = 6.0 + double(eng() % 7);
    auto vel = [&] {
      double m = 0.5 + 0.25 * double(eng() % 9);
      return (eng() & 1) ? m : -m;
    };
    double vx = vel(), vy = vel();
    double span = double(N - 1);
    auto start = [&](double v, double q0) {
      double lo = q0 + 1 + size + std::max(0.0, -v * span);
      double hi = q0 + 46 - size - std::max(0.0, v * span);
      int steps = int((hi - lo) / 0.25) + 1;
      return lo + 0.25 * double(eng() % std::uint64_t(steps));
    };
    shapes.push_back(
        {kind, palette[pal_order[s]], start(vx, qx), start(vy, qy), vx, vy,
         size});
  }
  return gen_moving_shapes(shapes, {255, 255, 255}, N, H, W);
}

inline SynthClip make_scenario(const std::string& name, std::uint64_t seed) {
  if (name == "fig2") return fig2_scenario();
  if (name == "pan") return pan_scenario(seed);
  if (name == "random") return random_scenario(seed);
  throw ConfigError("unknown scenario: " + name);
}

}  // namespace vstats
