#pragma once

// Independent reference implementations of the 27 labels, written straight
// from the definitions with their own region classifiers, angle binning and
// histogram code. Used to cross-check the library; nothing here calls into
// the label modules.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include <vstats/flow.hpp>
#include <vstats/videoio.hpp>

namespace oracle {

inline int grid_id(int x, int y, int w, int h) {
  return (4 * y / h) * 4 + (4 * x / w);
}

inline int ring_id(int x, int y, int w, int h) {
  int g = (w < h ? w : h) / 8;
  int inset = x;
  if (y < inset) inset = y;
  if (w - 1 - x < inset) inset = w - 1 - x;
  if (h - 1 - y < inset) inset = h - 1 - y;
  int ring = inset / g;
  return ring > 3 ? 3 : ring;
}

inline int wedge_id(int x, int y, int w, int h) {
  long long W = w - 1, H = h - 1;
  long long X = 2LL * x - W, Y = H - 2LL * y;
  if (X == 0 && Y == 0) return 0;
  long long main_d = Y * W - X * H;  // 0 on the top-right diagonal ray
  long long anti_d = Y * W + X * H;  // 0 on the top-left diagonal ray
  if (Y > 0) {
    if (X > 0) return main_d <= 0 ? 0 : 1;
    if (X == 0) return 1;
    return anti_d >= 0 ? 2 : 3;
  }
  if (Y == 0) return X > 0 ? 0 : 3;
  if (X < 0) return main_d >= 0 ? 4 : 5;
  if (X == 0) return 5;
  return anti_d <= 0 ? 6 : 7;
}

inline int region_of(int part, int x, int y, int w, int h) {
  if (part == 0) return grid_id(x, y, w, h);
  if (part == 1) return ring_id(x, y, w, h);
  return wedge_id(x, y, w, h);
}

inline constexpr int kRegions[3] = {16, 4, 8};

// 45-degree bin of the boundary vector, counterclockwise from +x with the
// image y-axis negated; -1 for the zero vector. Decided by quadrant plus a
// three-way |a|-vs-|b| comparison so boundaries never touch libm.
inline int angle_bin(double gx, double gy) {
  double a = gx, b = -gy;
  if (a == 0.0 && b == 0.0) return -1;
  double aa = a < 0 ? -a : a, ab = b < 0 ? -b : b;
  int diag = ab < aa ? 0 : (ab == aa ? 1 : 2);  // below / on / above 45 deg
  if (b == 0.0) return a > 0 ? 0 : 4;
  if (a == 0.0) return b > 0 ? 2 : 6;
  if (a > 0 && b > 0) return diag == 0 ? 0 : 1;
  if (a < 0 && b > 0) return diag == 2 ? 2 : 3;
  if (a < 0 && b < 0) return diag == 0 ? 4 : 5;
  return diag == 2 ? 6 : 7;
}

struct Grad {
  std::vector<double> gx, gy;
};

inline Grad gradients(const std::vector<float>& f, int w, int h) {
  Grad g{std::vector<double>(std::size_t(w) * h, 0.0),
         std::vector<double>(std::size_t(w) * h, 0.0)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int xm = x > 0 ? x - 1 : 0, xp = x < w - 1 ? x + 1 : w - 1;
      int ym = y > 0 ? y - 1 : 0, yp = y < h - 1 ? y + 1 : h - 1;
      std::size_t i = std::size_t(y) * w + x;
      g.gx[i] = (double(f[std::size_t(y) * w + xp]) -
                 double(f[std::size_t(y) * w + xm])) /
                2.0;
      g.gy[i] = (double(f[std::size_t(yp) * w + x]) -
                 double(f[std::size_t(ym) * w + x])) /
                2.0;
    }
  return g;
}

inline std::array<int, 14> motion_labels(
    const std::vector<vstats::FlowField>& flows) {
  int w = flows.at(0).width, h = flows[0].height;
  std::size_t n = std::size_t(w) * h;
  std::vector<double> ugx(n, 0.0), ugy(n, 0.0), vgx(n, 0.0), vgy(n, 0.0);
  std::vector<double> pair_u, pair_v;
  for (const auto& f : flows) {
    Grad gu = gradients(f.u, w, h), gv = gradients(f.v, w, h);
    double su = 0.0, sv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      su += std::sqrt(gu.gx[i] * gu.gx[i] + gu.gy[i] * gu.gy[i]);
      sv += std::sqrt(gv.gx[i] * gv.gx[i] + gv.gy[i] * gv.gy[i]);
    }
    pair_u.push_back(su / double(n));
    pair_v.push_back(sv / double(n));
    for (std::size_t i = 0; i < n; ++i) {
      ugx[i] += gu.gx[i];
      ugy[i] += gu.gy[i];
      vgx[i] += gv.gx[i];
      vgy[i] += gv.gy[i];
    }
  }

  std::array<int, 14> out{};
  int k = 0;
  for (int part = 0; part < 3; ++part) {
    int K = kRegions[part];
    for (int comp = 0; comp < 2; ++comp) {
      const std::vector<double>& gx = comp ? vgx : ugx;
      const std::vector<double>& gy = comp ? vgy : ugy;
      int best = 0;
      double best_mean = -1.0;
      for (int r = 0; r < K; ++r) {
        double s = 0.0;
        long long c = 0;
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) {
            if (region_of(part, x, y, w, h) != r) continue;
            std::size_t i = std::size_t(y) * w + x;
            s += std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
            ++c;
          }
        double mean = c ? s / double(c) : 0.0;
        if (r == 0) {
          best_mean = mean;
          best = 0;
        } else if (mean > best_mean) {
          best_mean = mean;
          best = r;
        }
      }
      double hist[8] = {};
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          if (region_of(part, x, y, w, h) != best) continue;
          std::size_t i = std::size_t(y) * w + x;
          int b = angle_bin(gx[i], gy[i]);
          if (b >= 0) hist[b] += std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
        }
      int ori = 0;
      for (int b = 1; b < 8; ++b)
        if (hist[b] > hist[ori]) ori = b;
      out[k++] = best;
      out[k++] = ori;
    }
  }

  int gu = 0, gv = 0;
  for (int i = 1; i < int(pair_u.size()); ++i) {
    if (pair_u[i] > pair_u[gu]) gu = i;
    if (pair_v[i] > pair_v[gv]) gv = i;
  }
  out[k++] = gu;
  out[k++] = gv;
  return out;
}

inline std::array<int, 13> appearance_labels(const vstats::Clip& clip,
                                             int bins) {
  int w = clip.width(), h = clip.height(), N = clip.size();

  auto octant = [](const vstats::ImageU8& im, int x, int y) {
    return ((im.at(x, y, 0) >> 7) << 2) | ((im.at(x, y, 1) >> 7) << 1) |
           (im.at(x, y, 2) >> 7);
  };
  auto dominant = [&](int part, int region) {  // region < 0: whole frame
    long long counts[8] = {};
    for (const auto& im : clip.frames)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          if (region >= 0 && region_of(part, x, y, w, h) != region) continue;
          ++counts[octant(im, x, y)];
        }
    int best = 0;
    for (int b = 1; b < 8; ++b)
      if (counts[b] > counts[best]) best = b;
    return best;
  };

  std::array<int, 13> out{};
  int k = 0;
  for (int part = 0; part < 3; ++part) {
    int K = kRegions[part];
    std::vector<double> score(K, 0.0);
    for (int r = 0; r < K; ++r) {
      double acc = 0.0;
      for (int c = 0; c < 3; ++c) {
        std::vector<std::vector<long long>> hs(
            N, std::vector<long long>(bins, 0));
        for (int t = 0; t < N; ++t)
          for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
              if (region_of(part, x, y, w, h) != r) continue;
              ++hs[t][(int(clip.frames[t].at(x, y, c)) * bins) >> 8];
            }
        long long inter = 0, uni = 0;
        for (int b = 0; b < bins; ++b) {
          long long mn = hs[0][b], mx = hs[0][b];
          for (int t = 1; t < N; ++t) {
            if (hs[t][b] < mn) mn = hs[t][b];
            if (hs[t][b] > mx) mx = hs[t][b];
          }
          inter += mn;
          uni += mx;
        }
        acc += uni == 0 ? 0.0 : double(inter) / double(uni);
      }
      score[r] = acc / 3.0;
    }
    int pd = 0, ps = 0;
    for (int r = 1; r < K; ++r) {
      if (score[r] < score[pd]) pd = r;
      if (score[r] > score[ps]) ps = r;
    }
    out[k++] = pd;
    out[k++] = dominant(part, pd);
    out[k++] = ps;
    out[k++] = dominant(part, ps);
  }
  out[k++] = dominant(0, -1);
  return out;
}

}  // namespace oracle
