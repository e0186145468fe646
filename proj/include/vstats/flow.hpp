#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "common.hpp"
#include "image.hpp"
#include "videoio.hpp"

namespace vstats {

struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> u, v;  // displacement in pixels: +u right, +v down

  FlowField() = default;
  FlowField(int w, int h)
      : width(w), height(h), u(std::size_t(w) * h, 0.f), v(u) {}
  float& u_at(int x, int y) { return u[std::size_t(y) * width + x]; }
  float& v_at(int x, int y) { return v[std::size_t(y) * width + x]; }
  float u_at(int x, int y) const { return u[std::size_t(y) * width + x]; }
  float v_at(int x, int y) const { return v[std::size_t(y) * width + x]; }
};

// ------------------------------------------------------------------- .flo

namespace detail {
constexpr float kFloMagic = 202021.25f;  // reads as "PIEH" in ASCII
}

inline FlowField read_flo(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  float tag = 0.f;
  std::int32_t w = 0, h = 0;
  in.read(reinterpret_cast<char*>(&tag), 4);
  in.read(reinterpret_cast<char*>(&w), 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  if (!in || tag != detail::kFloMagic)
    throw FormatError("not a .flo file: " + path.string());
  if (w <= 0 || h <= 0 || w > 100000 || h > 100000)
    throw FormatError("implausible .flo dimensions");
  FlowField f(w, h);
  std::vector<float> row(std::size_t(w) * 2);
  for (int y = 0; y < h; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size() * 4));
    if (!in) throw FormatError("truncated .flo: " + path.string());
    for (int x = 0; x < w; ++x) {
      f.u_at(x, y) = row[2 * std::size_t(x)];
      f.v_at(x, y) = row[2 * std::size_t(x) + 1];
    }
  }
  return f;
}

inline void write_flo(const std::filesystem::path& path, const FlowField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  float tag = detail::kFloMagic;
  std::int32_t w = f.width, h = f.height;
  out.write(reinterpret_cast<const char*>(&tag), 4);
  out.write(reinterpret_cast<const char*>(&w), 4);
  out.write(reinterpret_cast<const char*>(&h), 4);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float uv[2] = {f.u_at(x, y), f.v_at(x, y)};
      out.write(reinterpret_cast<const char*>(uv), 8);
    }
  if (!out) throw IoError("short write: " + path.string());
}

// ------------------------------------------------------------------ solver

struct FlowParams {
  double alpha = 30.0;             // smoothness weight
  double gamma = 10.0;             // gradient-constancy weight
  double pyramid_factor = 0.5;     // per-level downscale, in (0,1)
  int min_level_size = 16;         // stop pyramid below this dimension
  int warp_iterations = 3;         // outer warps per level
  int fixed_point_iterations = 5;  // robust-weight relinearizations per warp
  int sor_iterations = 25;         // SOR sweeps per fixed-point step
  double sor_omega = 1.8;
  double epsilon_psi = 1e-3;       // Psi(s^2) = sqrt(s^2 + eps^2)

  void validate() const {
    if (alpha <= 0) throw ConfigError("alpha must be positive");
    if (gamma < 0) throw ConfigError("gamma must be non-negative");
    if (pyramid_factor <= 0 || pyramid_factor >= 1)
      throw ConfigError("pyramid_factor must be in (0,1)");
    if (min_level_size < 4) throw ConfigError("min_level_size too small");
    if (warp_iterations < 1 || fixed_point_iterations < 1 || sor_iterations < 1)
      throw ConfigError("iteration counts must be >= 1");
    if (sor_omega <= 0 || sor_omega >= 2)
      throw ConfigError("sor_omega must be in (0,2)");
    if (epsilon_psi <= 0) throw ConfigError("epsilon_psi must be positive");
  }
};

// Energies at the finest pyramid level: entry value, then one per warp.
struct EnergyTrace {
  std::vector<double> finest_energies;
};

namespace detail {

struct PD {
  int w = 0, h = 0;
  std::vector<double> v;
  PD() = default;
  PD(int W, int H) : w(W), h(H), v(std::size_t(W) * H, 0.0) {}
  double& at(int x, int y) { return v[std::size_t(y) * w + x]; }
  double at(int x, int y) const { return v[std::size_t(y) * w + x]; }
  double atc(int x, int y) const {  // clamped
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return v[std::size_t(y) * w + x];
  }
};

inline PD to_pd(const PlaneF& p) {
  PD d(p.width, p.height);
  for (std::size_t i = 0; i < d.v.size(); ++i) d.v[i] = double(p.v[i]);
  return d;
}

inline PD gauss_blur(const PD& in, double sigma) {
  if (sigma <= 0) return in;
  int radius = std::max(1, int(std::ceil(2.5 * sigma)));
  std::vector<double> k(std::size_t(radius) + 1);
  double norm = 0.0;
  for (int i = 0; i <= radius; ++i) {
    k[i] = std::exp(-0.5 * double(i) * i / (sigma * sigma));
    norm += i == 0 ? k[i] : 2 * k[i];
  }
  for (auto& x : k) x /= norm;

  PD tmp(in.w, in.h), out(in.w, in.h);
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x) {
      double s = k[0] * in.at(x, y);
      for (int i = 1; i <= radius; ++i)
        s += k[i] * (in.atc(x - i, y) + in.atc(x + i, y));
      tmp.at(x, y) = s;
    }
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x) {
      double s = k[0] * tmp.at(x, y);
      for (int i = 1; i <= radius; ++i)
        s += k[i] * (tmp.atc(x, y - i) + tmp.atc(x, y + i));
      out.at(x, y) = s;
    }
  return out;
}

inline PD resize_pd(const PD& in, int nw, int nh) {
  PD out(nw, nh);
  for (int y = 0; y < nh; ++y) {
    double sy = src_coord(y, nh, in.h);
    int y0 = int(sy);
    int y1 = std::min(y0 + 1, in.h - 1);
    double fy = sy - y0;
    for (int x = 0; x < nw; ++x) {
      double sx = src_coord(x, nw, in.w);
      int x0 = int(sx);
      int x1 = std::min(x0 + 1, in.w - 1);
      double fx = sx - x0;
      out.at(x, y) = (1 - fy) * ((1 - fx) * in.at(x0, y0) + fx * in.at(x1, y0)) +
                     fy * ((1 - fx) * in.at(x0, y1) + fx * in.at(x1, y1));
    }
  }
  return out;
}

// Fourth-order derivative stencil [1,-8,0,8,-1]/12, replicated borders.
inline PD dx5(const PD& in) {
  PD out(in.w, in.h);
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x)
      out.at(x, y) = (in.atc(x - 2, y) - 8 * in.atc(x - 1, y) +
                      8 * in.atc(x + 1, y) - in.atc(x + 2, y)) /
                     12.0;
  return out;
}

inline PD dy5(const PD& in) {
  PD out(in.w, in.h);
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x)
      out.at(x, y) = (in.atc(x, y - 2) - 8 * in.atc(x, y - 1) +
                      8 * in.atc(x, y + 1) - in.atc(x, y + 2)) /
                     12.0;
  return out;
}

inline double sample_bilinear(const PD& img, double x, double y) {
  x = std::clamp(x, 0.0, double(img.w - 1));
  y = std::clamp(y, 0.0, double(img.h - 1));
  int x0 = std::min(int(x), img.w - 1);
  int y0 = std::min(int(y), img.h - 1);
  int x1 = std::min(x0 + 1, img.w - 1);
  int y1 = std::min(y0 + 1, img.h - 1);
  double fx = x - x0, fy = y - y0;
  return (1 - fy) * ((1 - fx) * img.at(x0, y0) + fx * img.at(x1, y0)) +
         fy * ((1 - fx) * img.at(x0, y1) + fx * img.at(x1, y1));
}

inline PD warp_pd(const PD& img, const PD& u, const PD& v) {
  PD out(img.w, img.h);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      out.at(x, y) = sample_bilinear(img, x + u.at(x, y), y + v.at(x, y));
  return out;
}

inline double psi(double s2, double eps) { return std::sqrt(s2 + eps * eps); }
inline double dpsi(double s2, double eps) {
  return 0.5 / std::sqrt(s2 + eps * eps);
}

// E = sum Psi(Iz^2) + gamma*Psi(|grad Iz|^2) + alpha*Psi(|grad u|^2+|grad v|^2)
inline double flow_energy(const PD& I1, const PD& I1x, const PD& I1y,
                          const PD& I2, const PD& I2x, const PD& I2y,
                          const PD& u, const PD& v, const FlowParams& p) {
  PD I2w = warp_pd(I2, u, v), I2xw = warp_pd(I2x, u, v),
     I2yw = warp_pd(I2y, u, v);
  double e = 0.0;
  for (int y = 0; y < I1.h; ++y)
    for (int x = 0; x < I1.w; ++x) {
      double iz = I2w.at(x, y) - I1.at(x, y);
      double izx = I2xw.at(x, y) - I1x.at(x, y);
      double izy = I2yw.at(x, y) - I1y.at(x, y);
      double ux = (u.atc(x + 1, y) - u.atc(x - 1, y)) / 2.0;
      double uy = (u.atc(x, y + 1) - u.atc(x, y - 1)) / 2.0;
      double vx = (v.atc(x + 1, y) - v.atc(x - 1, y)) / 2.0;
      double vy = (v.atc(x, y + 1) - v.atc(x, y - 1)) / 2.0;
      e += psi(iz * iz, p.epsilon_psi) +
           p.gamma * psi(izx * izx + izy * izy, p.epsilon_psi) +
           p.alpha * psi(ux * ux + uy * uy + vx * vx + vy * vy, p.epsilon_psi);
    }
  return e;
}

inline void solve_level(const PD& I1, const PD& I2, PD& u, PD& v,
                        const FlowParams& p, std::vector<double>* trace) {
  int w = I1.w, h = I1.h;
  PD I1x = dx5(I1), I1y = dy5(I1);
  PD I2x = dx5(I2), I2y = dy5(I2);
  PD I2xx = dx5(I2x), I2xy = dy5(I2x), I2yy = dy5(I2y);

  if (trace)
    trace->push_back(flow_energy(I1, I1x, I1y, I2, I2x, I2y, u, v, p));

  PD du(w, h), dv(w, h);
  PD psid(w, h), psig(w, h), psis(w, h);
  for (int warp = 0; warp < p.warp_iterations; ++warp) {
    PD I2w = warp_pd(I2, u, v), I2xw = warp_pd(I2x, u, v),
       I2yw = warp_pd(I2y, u, v), I2xxw = warp_pd(I2xx, u, v),
       I2xyw = warp_pd(I2xy, u, v), I2yyw = warp_pd(I2yy, u, v);
    std::fill(du.v.begin(), du.v.end(), 0.0);
    std::fill(dv.v.begin(), dv.v.end(), 0.0);

    for (int fp = 0; fp < p.fixed_point_iterations; ++fp) {
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double D = du.at(x, y), V = dv.at(x, y);
          double iz = I2w.at(x, y) - I1.at(x, y) + I2xw.at(x, y) * D +
                      I2yw.at(x, y) * V;
          psid.at(x, y) = dpsi(iz * iz, p.epsilon_psi);
          double izx = I2xw.at(x, y) - I1x.at(x, y) + I2xxw.at(x, y) * D +
                       I2xyw.at(x, y) * V;
          double izy = I2yw.at(x, y) - I1y.at(x, y) + I2xyw.at(x, y) * D +
                       I2yyw.at(x, y) * V;
          psig.at(x, y) = dpsi(izx * izx + izy * izy, p.epsilon_psi);
          auto tu = [&](int X, int Y) { return u.atc(X, Y) + du.atc(X, Y); };
          auto tv = [&](int X, int Y) { return v.atc(X, Y) + dv.atc(X, Y); };
          double ux = (tu(x + 1, y) - tu(x - 1, y)) / 2.0;
          double uy = (tu(x, y + 1) - tu(x, y - 1)) / 2.0;
          double vx = (tv(x + 1, y) - tv(x - 1, y)) / 2.0;
          double vy = (tv(x, y + 1) - tv(x, y - 1)) / 2.0;
          psis.at(x, y) =
              dpsi(ux * ux + uy * uy + vx * vx + vy * vy, p.epsilon_psi);
        }

      for (int it = 0; it < p.sor_iterations; ++it) {
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) {
            double Iz = I2w.at(x, y) - I1.at(x, y);
            double Ixz = I2xw.at(x, y) - I1x.at(x, y);
            double Iyz = I2yw.at(x, y) - I1y.at(x, y);
            double Ix = I2xw.at(x, y), Iy = I2yw.at(x, y);
            double Ixx = I2xxw.at(x, y), Ixy = I2xyw.at(x, y),
                   Iyy = I2yyw.at(x, y);
            double pd_ = psid.at(x, y), pg = psig.at(x, y);

            double wsum = 0.0, fluxU = 0.0, fluxV = 0.0;
            const int nx[4] = {x - 1, x + 1, x, x};
            const int ny[4] = {y, y, y - 1, y + 1};
            for (int n = 0; n < 4; ++n) {
              int X = nx[n], Y = ny[n];
              if (X < 0 || X >= w || Y < 0 || Y >= h) continue;
              double wq = 0.5 * (psis.at(x, y) + psis.at(X, Y));
              wsum += wq;
              fluxU += wq * (u.at(X, Y) + du.at(X, Y) - u.at(x, y));
              fluxV += wq * (v.at(X, Y) + dv.at(X, Y) - v.at(x, y));
            }

            double D = du.at(x, y), V = dv.at(x, y);
            double numU = -pd_ * Ix * (Iz + Iy * V) -
                          p.gamma * pg * (Ixx * (Ixz + Ixy * V) +
                                          Ixy * (Iyz + Iyy * V)) +
                          p.alpha * fluxU;
            double denU = pd_ * Ix * Ix +
                          p.gamma * pg * (Ixx * Ixx + Ixy * Ixy) +
                          p.alpha * wsum;
            D = (1 - p.sor_omega) * D + p.sor_omega * numU / denU;
            du.at(x, y) = D;

            double numV = -pd_ * Iy * (Iz + Ix * D) -
                          p.gamma * pg * (Iyy * (Iyz + Ixy * D) +
                                          Ixy * (Ixz + Ixx * D)) +
                          p.alpha * fluxV;
            double denV = pd_ * Iy * Iy +
                          p.gamma * pg * (Iyy * Iyy + Ixy * Ixy) +
                          p.alpha * wsum;
            dv.at(x, y) = (1 - p.sor_omega) * V + p.sor_omega * numV / denV;
          }
      }
    }

    for (std::size_t i = 0; i < u.v.size(); ++i) {
      u.v[i] += du.v[i];
      v.v[i] += dv.v[i];
    }
    if (trace)
      trace->push_back(flow_energy(I1, I1x, I1y, I2, I2x, I2y, u, v, p));
  }
}

}  // namespace detail

// Backward-warps `img` by the flow: out(x,y) = img(x+u, y+v), bilinear,
// coordinates clamped to the frame.
inline PlaneF warp_bilinear(const PlaneF& img, const FlowField& flow) {
  if (img.width != flow.width || img.height != flow.height)
    throw GeometryError("warp: image and flow sizes differ");
  detail::PD p = detail::to_pd(img);
  PlaneF out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      out.at(x, y) = float(detail::sample_bilinear(
          p, x + flow.u_at(x, y), y + flow.v_at(x, y)));
  return out;
}

// Presmoothed image pyramid as used by the flow solver; level 0 is the
// input, each coarser level scales by `factor` until a side would drop
// below `min_level_size`.
inline std::vector<PlaneF> gaussian_pyramid(const PlaneF& base, double factor,
                                            int min_level_size) {
  if (!(factor > 0.0 && factor < 1.0))
    throw ConfigError("pyramid factor must be in (0,1)");
  if (min_level_size < 2) throw ConfigError("min_level_size must be >= 2");
  double sigma = 0.6 * std::sqrt(1.0 / (factor * factor) - 1.0);
  std::vector<detail::PD> levels{detail::to_pd(base)};
  while (true) {
    int cw = levels.back().w, ch = levels.back().h;
    int nw = std::max(1, int(std::lround(cw * factor)));
    int nh = std::max(1, int(std::lround(ch * factor)));
    if (nw < min_level_size || nh < min_level_size) break;
    if (nw >= cw || nh >= ch) break;
    levels.push_back(
        detail::resize_pd(detail::gauss_blur(levels.back(), sigma), nw, nh));
  }
  std::vector<PlaneF> out;
  out.reserve(levels.size());
  for (const auto& l : levels) {
    PlaneF p(l.w, l.h);
    for (std::size_t i = 0; i < l.v.size(); ++i) p.v[i] = float(l.v[i]);
    out.push_back(std::move(p));
  }
  return out;
}

// Coarse-to-fine warping solver for the robust energy
//   E(u,v) = sum Psi(|I2(x+w)-I1|^2) + gamma Psi(|grad I2(x+w)-grad I1|^2)
//          + alpha Psi(|grad u|^2+|grad v|^2),   Psi(s^2)=sqrt(s^2+eps^2).
// Deterministic; expects luma planes in [0,1].
inline FlowField solve_flow(const PlaneF& prev, const PlaneF& next,
                            const FlowParams& params = {},
                            EnergyTrace* trace = nullptr) {
  params.validate();
  if (prev.width != next.width || prev.height != next.height)
    throw GeometryError("frame sizes differ");
  if (prev.width < 4 || prev.height < 4)
    throw GeometryError("frames too small for flow");

  double sigma =
      0.6 * std::sqrt(1.0 / (params.pyramid_factor * params.pyramid_factor) -
                      1.0);
  std::vector<detail::PD> p1{detail::to_pd(prev)}, p2{detail::to_pd(next)};
  // Work in 8-bit intensity units: the stock alpha/gamma weights balance the
  // data and smoothness terms at that scale, not on [0,1] values.
  for (auto& x : p1[0].v) x *= 255.0;
  for (auto& x : p2[0].v) x *= 255.0;
  while (true) {
    int cw = p1.back().w, ch = p1.back().h;
    int nw = std::max(1, int(std::lround(cw * params.pyramid_factor)));
    int nh = std::max(1, int(std::lround(ch * params.pyramid_factor)));
    if (nw < params.min_level_size || nh < params.min_level_size) break;
    if (nw >= cw || nh >= ch) break;
    p1.push_back(detail::resize_pd(detail::gauss_blur(p1.back(), sigma), nw, nh));
    p2.push_back(detail::resize_pd(detail::gauss_blur(p2.back(), sigma), nw, nh));
  }

  int levels = int(p1.size());
  detail::PD u(p1.back().w, p1.back().h), v(u);
  for (int lvl = levels - 1; lvl >= 0; --lvl) {
    if (lvl != levels - 1) {
      u = detail::resize_pd(u, p1[lvl].w, p1[lvl].h);
      v = detail::resize_pd(v, p1[lvl].w, p1[lvl].h);
      double s = 1.0 / params.pyramid_factor;
      for (auto& x : u.v) x *= s;
      for (auto& x : v.v) x *= s;
    }
    detail::solve_level(p1[lvl], p2[lvl], u, v, params,
                        (lvl == 0 && trace) ? &trace->finest_energies : nullptr);
    for (std::size_t i = 0; i < u.v.size(); ++i)
      if (!std::isfinite(u.v[i]) || !std::isfinite(v.v[i]))
        throw NumericalError("non-finite flow at pyramid level " +
                             std::to_string(lvl) + " (" +
                             std::to_string(p1[lvl].w) + "x" +
                             std::to_string(p1[lvl].h) + ")");
  }

  FlowField f(prev.width, prev.height);
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    f.u[i] = float(u.v[i]);
    f.v[i] = float(v.v[i]);
  }
  return f;
}

// ---------------------------------------------------------------- provider

using FlowProvider = std::function<FlowField(const PlaneF&, const PlaneF&)>;

inline FlowProvider variational_provider(const FlowParams& params = {}) {
  return [params](const PlaneF& a, const PlaneF& b) {
    return solve_flow(a, b, params);
  };
}

inline std::vector<FlowField> clip_flows(const Clip& clip,
                                         const FlowProvider& provider) {
  if (clip.size() < 2) throw GeometryError("clip needs >= 2 frames");
  std::vector<PlaneF> lumas;
  lumas.reserve(clip.frames.size());
  for (const auto& f : clip.frames) lumas.push_back(luma(f));
  std::vector<FlowField> flows;
  for (int i = 0; i + 1 < clip.size(); ++i) {
    FlowField f;
    try {
      f = provider(lumas[i], lumas[i + 1]);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("flow provider failed on frame pair " +
                               std::to_string(i) + ": " + e.what());
    }
    if (f.width != clip.width() || f.height != clip.height())
      throw GeometryError("provider returned wrong flow size at pair " +
                          std::to_string(i));
    flows.push_back(std::move(f));
  }
  return flows;
}

}  // namespace vstats
