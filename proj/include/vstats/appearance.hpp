#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "common.hpp"
#include "partition.hpp"
#include "videoio.hpp"

namespace vstats {

// Temporal histogram IoU for one region and one channel: per-frame B-bin
// histograms reduced as sum(min over frames) / sum(max over frames).
// Counts are exact integers; only the final ratio is floating point.
inline double temporal_iou(const std::vector<std::vector<std::int64_t>>& hists) {
  if (hists.size() < 2) throw GeometryError("temporal_iou needs >= 2 frames");
  std::size_t B = hists[0].size();
  std::int64_t total = 0;
  for (auto c : hists[0]) total += c;
  for (const auto& h : hists) {
    if (h.size() != B) throw GeometryError("histogram bin counts differ");
    std::int64_t t = 0;
    for (auto c : h) t += c;
    if (t != total) throw GeometryError("histogram totals differ");
  }
  std::int64_t inter = 0, uni = 0;
  for (std::size_t b = 0; b < B; ++b) {
    std::int64_t mn = hists[0][b], mx = hists[0][b];
    for (std::size_t i = 1; i < hists.size(); ++i) {
      mn = std::min(mn, hists[i][b]);
      mx = std::max(mx, hists[i][b]);
    }
    inter += mn;
    uni += mx;
  }
  return uni == 0 ? 0.0 : double(inter) / double(uni);
}

// Per-channel temporal IoU for every region: out[region] = {R, G, B}.
inline std::vector<std::array<double, 3>> region_channel_ious(
    const Clip& clip, const RegionMap& map, int bins) {
  if (clip.size() < 2) throw GeometryError("need >= 2 frames");
  if (clip.width() != map.width || clip.height() != map.height)
    throw GeometryError("clip/region map size mismatch");
  if (bins < 1 || bins > 256) throw ConfigError("histogram bins out of range");

  int K = map.regions, N = clip.size();
  // hist[region][frame][channel][bin]
  std::vector<std::int64_t> hist(std::size_t(K) * N * 3 * bins, 0);
  auto slot = [&](int r, int t, int c, int b) -> std::int64_t& {
    return hist[((std::size_t(r) * N + t) * 3 + c) * bins + b];
  };
  for (int t = 0; t < N; ++t) {
    const ImageU8& im = clip.frames[t];
    for (int y = 0; y < map.height; ++y)
      for (int x = 0; x < map.width; ++x) {
        int r = map.at(x, y);
        for (int c = 0; c < 3; ++c)
          ++slot(r, t, c, int(im.at(x, y, c)) * bins / 256);
      }
  }

  std::vector<std::array<double, 3>> out(K);
  for (int r = 0; r < K; ++r)
    for (int c = 0; c < 3; ++c) {
      std::vector<std::vector<std::int64_t>> stack(
          N, std::vector<std::int64_t>(bins));
      for (int t = 0; t < N; ++t)
        for (int b = 0; b < bins; ++b) stack[t][b] = slot(r, t, c, b);
      out[r][c] = temporal_iou(stack);
    }
  return out;
}

// Mean of the per-channel temporal IoU over R, G, B. Low score = the block's
// color distribution churns over time; high score = static block.
inline std::vector<double> region_diversity_scores(const Clip& clip,
                                                   const RegionMap& map,
                                                   int bins) {
  auto chans = region_channel_ious(clip, map, bins);
  std::vector<double> scores(chans.size());
  for (std::size_t r = 0; r < chans.size(); ++r)
    scores[r] = (chans[r][0] + chans[r][1] + chans[r][2]) / 3.0;
  return scores;
}

// RGB octant id: 4*[R>=128] + 2*[G>=128] + [B>=128].
inline int rgb_octant(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return 4 * (r >= 128) + 2 * (g >= 128) + (b >= 128);
}

// Pixel counts per RGB octant over all frames of one region (region < 0:
// whole frame).
inline std::array<std::int64_t, 8> octant_counts(const Clip& clip,
                                                 const RegionMap& map,
                                                 int region) {
  std::array<std::int64_t, 8> counts{};
  for (const auto& im : clip.frames)
    for (int y = 0; y < im.height; ++y)
      for (int x = 0; x < im.width; ++x) {
        if (region >= 0 && map.at(x, y) != region) continue;
        ++counts[rgb_octant(im.at(x, y, 0), im.at(x, y, 1), im.at(x, y, 2))];
      }
  return counts;
}

inline int dominant_color(const Clip& clip, const RegionMap& map, int region) {
  auto counts = octant_counts(clip, map, region);
  std::int64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw GeometryError("dominant_color over empty pixel set");
  int best = 0;
  for (int b = 1; b < 8; ++b)
    if (counts[b] > counts[best]) best = b;
  return best;
}

template <typename T>
inline int amax_low(const std::vector<T>& v) {
  int best = 0;
  for (int i = 1; i < int(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

template <typename T>
inline int amin_low(const std::vector<T>& v) {
  int best = 0;
  for (int i = 1; i < int(v.size()); ++i)
    if (v[i] < v[best]) best = i;
  return best;
}

// 13 labels: [grid: p_d,c_d,p_s,c_s | rings: same | wedges: same | c_g].
// p_d = region with the most diverse color over time (smallest IoU),
// p_s = most stable; c_* = dominant color of that region across all frames.
inline std::array<int, 13> appearance_labels(const Clip& clip,
                                             const RegionMap& grid,
                                             const RegionMap& rings,
                                             const RegionMap& wedges,
                                             int bins = 16) {
  std::array<int, 13> out{};
  int k = 0;
  for (const RegionMap* map : {&grid, &rings, &wedges}) {
    auto scores = region_diversity_scores(clip, *map, bins);
    int pd = amin_low(scores);
    int ps = amax_low(scores);
    out[k++] = pd;
    out[k++] = dominant_color(clip, *map, pd);
    out[k++] = ps;
    out[k++] = dominant_color(clip, *map, ps);
  }
  out[k++] = dominant_color(clip, grid, -1);
  return out;
}

}  // namespace vstats
