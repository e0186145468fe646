#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "appearance.hpp"
#include "common.hpp"
#include "flow.hpp"
#include "motion.hpp"
#include "partition.hpp"
#include "synth.hpp"
#include "videoio.hpp"

namespace vstats {

enum class CropMode { center, none, random_crop };
enum class FlowKind { variational, injected };

struct RunConfig {
  SourceFormat format = SourceFormat::y4m;
  int clip_len = 16;
  int stride = 16;
  bool do_resize = true;
  int resize_w = 171, resize_h = 128;
  CropMode crop = CropMode::center;
  int crop_w = 112, crop_h = 112;
  FlowKind flow = FlowKind::variational;
  FlowParams flow_params;
  int hist_bins = 16;
  bool normalize = false;
  bool flip_jitter = false;
  bool has_seed = false;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const {
    if (clip_len < 2) throw ConfigError("clip length must be >= 2");
    if (stride < 1) throw ConfigError("stride must be >= 1");
    if (hist_bins < 1 || hist_bins > 256)
      throw ConfigError("bins must be in [1,256]");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (crop == CropMode::random_crop && !has_seed)
      throw ConfigError("random crop requires an explicit --seed");
    if (flip_jitter && !has_seed)
      throw ConfigError("flip jitter requires an explicit --seed");
    if (flow == FlowKind::injected) {
      if (format != SourceFormat::frames)
        throw ConfigError("injected flow requires --format frames");
      if (do_resize || crop != CropMode::none)
        throw ConfigError(
            "injected flow requires --resize none and --crop none");
      if (flip_jitter)
        throw ConfigError("flip jitter is incompatible with injected flow");
    }
    flow_params.validate();
  }
};

struct LabelRecord {
  std::string clip_id;
  std::string source;
  int begin = 0, end = 0;  // half-open frame range in the source
  std::array<int, 14> motion{};
  std::array<int, 13> appearance{};
};

// ---------------------------------------------------------------- encoding

inline std::string params_digest(const std::string& flow_kind,
                                 const FlowParams& p, int bins) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "flow=%s;alpha=%.17g;gamma=%.17g;factor=%.17g;min=%d;warp=%d;"
                "fixed=%d;sor=%d;omega=%.17g;eps=%.17g;bins=%d;conv=%s",
                flow_kind.c_str(), p.alpha, p.gamma, p.pyramid_factor,
                p.min_level_size, p.warp_iterations, p.fixed_point_iterations,
                p.sor_iterations, p.sor_omega, p.epsilon_psi, bins,
                kConventionsVersion);
  return to_hex(fnv1a64(std::string(buf)));
}

// Divisors mapping each label to [0,1]: region count - 1 per pattern,
// 7 for 8-way orientation/color bins, N-2 for frame-pair indices.
inline std::array<double, 27> normalize_labels(const std::array<int, 14>& m,
                                               const std::array<int, 13>& a,
                                               int clip_len) {
  const double loc_div[3] = {15.0, 3.0, 7.0};
  std::array<double, 27> out{};
  int k = 0;
  for (int p = 0; p < 3; ++p) {
    out[k] = m[k] / loc_div[p];
    ++k;
    out[k] = m[k] / 7.0;
    ++k;
    out[k] = m[k] / loc_div[p];
    ++k;
    out[k] = m[k] / 7.0;
    ++k;
  }
  double gdiv = double(clip_len - 2);
  out[12] = gdiv > 0 ? m[12] / gdiv : 0.0;
  out[13] = gdiv > 0 ? m[13] / gdiv : 0.0;
  k = 14;
  for (int p = 0; p < 3; ++p) {
    out[k] = a[k - 14] / loc_div[p];
    ++k;
    out[k] = a[k - 14] / 7.0;
    ++k;
    out[k] = a[k - 14] / loc_div[p];
    ++k;
    out[k] = a[k - 14] / 7.0;
    ++k;
  }
  out[26] = a[12] / 7.0;
  return out;
}

inline std::pair<std::array<int, 14>, std::array<int, 13>> denormalize_labels(
    const std::array<double, 27>& v, int clip_len) {
  const double loc_div[3] = {15.0, 3.0, 7.0};
  std::array<int, 14> m{};
  std::array<int, 13> a{};
  int k = 0;
  for (int p = 0; p < 3; ++p) {
    m[k] = int(std::lround(v[k] * loc_div[p]));
    ++k;
    m[k] = int(std::lround(v[k] * 7.0));
    ++k;
    m[k] = int(std::lround(v[k] * loc_div[p]));
    ++k;
    m[k] = int(std::lround(v[k] * 7.0));
    ++k;
  }
  double gdiv = double(clip_len - 2);
  m[12] = int(std::lround(v[12] * gdiv));
  m[13] = int(std::lround(v[13] * gdiv));
  k = 14;
  for (int p = 0; p < 3; ++p) {
    a[k - 14] = int(std::lround(v[k] * loc_div[p]));
    ++k;
    a[k - 14] = int(std::lround(v[k] * 7.0));
    ++k;
    a[k - 14] = int(std::lround(v[k] * loc_div[p]));
    ++k;
    a[k - 14] = int(std::lround(v[k] * 7.0));
    ++k;
  }
  a[12] = int(std::lround(v[26] * 7.0));
  return {m, a};
}

inline nlohmann::ordered_json pattern_set_json() {
  return nlohmann::ordered_json::array({"grid4x4", "rings4", "wedges8"});
}

inline nlohmann::ordered_json record_json(const LabelRecord& r,
                                          const std::string& digest,
                                          bool with_normalized, int clip_len) {
  nlohmann::ordered_json j;
  j["clip_id"] = r.clip_id;
  j["source"] = r.source;
  j["frame_range"] = {r.begin, r.end};
  j["pattern_set"] = pattern_set_json();
  j["motion"] = r.motion;
  j["appearance"] = r.appearance;
  if (with_normalized)
    j["normalized"] = normalize_labels(r.motion, r.appearance, clip_len);
  j["params_digest"] = digest;
  j["conventions"] = kConventionsVersion;
  return j;
}

inline const char* kCsvHeader =
    "grid_u_l,grid_u_o,grid_v_l,grid_v_o,rings_u_l,rings_u_o,rings_v_l,"
    "rings_v_o,wedges_u_l,wedges_u_o,wedges_v_l,wedges_v_o,g_u,g_v,"
    "grid_p_d,grid_c_d,grid_p_s,grid_c_s,rings_p_d,rings_c_d,rings_p_s,"
    "rings_c_s,wedges_p_d,wedges_c_d,wedges_p_s,wedges_c_s,c_g";

inline std::string record_csv(const LabelRecord& r) {
  std::string line;
  for (int i = 0; i < 14; ++i) {
    if (i) line += ',';
    line += std::to_string(r.motion[i]);
  }
  for (int i = 0; i < 13; ++i) {
    line += ',';
    line += std::to_string(r.appearance[i]);
  }
  return line;
}

// --------------------------------------------------------------- scenarios

// Frames as PPM, analytic flows as .flo, truth record as JSONL with an
// "analytic" flag; labels the generator cannot assert are null.
inline void write_scenario(const std::filesystem::path& dir,
                           const SynthClip& sc, const std::string& name,
                           int bins = 16) {
  std::filesystem::create_directories(dir);
  char buf[32];
  for (int t = 0; t < sc.clip.size(); ++t) {
    std::snprintf(buf, sizeof buf, "frame_%04d.ppm", t);
    write_ppm(dir / buf, sc.clip.frames[t]);
  }
  for (std::size_t i = 0; i < sc.flows.size(); ++i) {
    std::snprintf(buf, sizeof buf, "flow_%04zu.flo", i);
    write_flo(dir / buf, sc.flows[i]);
  }

  nlohmann::ordered_json j;
  j["clip_id"] = name;
  j["source"] = dir.string();
  j["frame_range"] = {0, sc.clip.size()};
  j["pattern_set"] = pattern_set_json();
  auto arr = [](const int* vals, const bool* ok, int n) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (int i = 0; i < n; ++i)
      if (ok[i])
        a.push_back(vals[i]);
      else
        a.push_back(nullptr);
    return a;
  };
  j["motion"] = arr(sc.motion.data(), sc.motion_valid.data(), 14);
  j["appearance"] = arr(sc.appearance.data(), sc.appearance_valid.data(), 13);
  j["analytic"] = true;
  j["params_digest"] = params_digest("injected", FlowParams{}, bins);
  j["conventions"] = kConventionsVersion;
  std::ofstream out(dir / "truth.jsonl", std::ios::binary);
  if (!out) throw IoError("cannot write truth.jsonl");
  out << j.dump() << "\n";
}

// --------------------------------------------------------------- extraction

namespace detail {

struct SourceData {
  std::filesystem::path path;
  Clip clip;
  std::vector<std::filesystem::path> flo_files;  // injected mode only
};

struct ClipTask {
  int source = 0;
  int begin = 0, end = 0;
};

inline std::string clip_identifier(const std::filesystem::path& src, int begin,
                                    int end) {
  return src.stem().string() + ":" + std::to_string(begin) + "-" +
         std::to_string(end);
}

inline LabelRecord process_clip(const SourceData& sd, const ClipTask& task,
                                const RunConfig& cfg) {
  Clip window;
  window.frames.assign(sd.clip.frames.begin() + task.begin,
                       sd.clip.frames.begin() + task.end);

  std::string clip_id = clip_identifier(sd.path, task.begin, task.end);
  std::mt19937_64 eng(cfg.seed ^
                      fnv1a64(sd.path.string() + "#" +
                              std::to_string(task.begin)));

  if (cfg.do_resize)
    for (auto& f : window.frames)
      f = resize_bilinear(f, cfg.resize_w, cfg.resize_h);
  if (cfg.crop == CropMode::center) {
    for (auto& f : window.frames) f = center_crop(f, cfg.crop_w, cfg.crop_h);
  } else if (cfg.crop == CropMode::random_crop) {
    int spanx = window.width() - cfg.crop_w + 1;
    int spany = window.height() - cfg.crop_h + 1;
    if (spanx < 1 || spany < 1)
      throw GeometryError("crop larger than frame for " + clip_id);
    int left = int(eng() % std::uint64_t(spanx));
    int top = int(eng() % std::uint64_t(spany));
    for (auto& f : window.frames) f = crop(f, left, top, cfg.crop_w, cfg.crop_h);
  }
  if (cfg.flip_jitter && (eng() & 1))
    for (auto& f : window.frames) f = hflip(f);

  std::vector<FlowField> flows;
  if (cfg.flow == FlowKind::injected) {
    for (int i = task.begin; i < task.end - 1; ++i) {
      FlowField f = read_flo(sd.flo_files[i]);
      if (f.width != window.width() || f.height != window.height())
        throw GeometryError("injected flow size mismatch at pair " +
                            std::to_string(i));
      flows.push_back(std::move(f));
    }
  } else {
    flows = clip_flows(window, variational_provider(cfg.flow_params));
  }

  RegionMap g = grid4x4(window.width(), window.height());
  RegionMap r = rings4(window.width(), window.height());
  RegionMap wd = wedges8(window.width(), window.height());

  LabelRecord rec;
  rec.clip_id = clip_id;
  rec.source = sd.path.string();
  rec.begin = task.begin;
  rec.end = task.end;
  rec.motion = motion_labels(flows, g, r, wd);
  rec.appearance = appearance_labels(window, g, r, wd, cfg.hist_bins);
  return rec;
}

}  // namespace detail

// Processes every source in order, windows each into clips, labels them
// (concurrently if cfg.workers > 1), and writes records in input order.
// Returns 0 on full success, 1 if any source or clip failed.
inline int run_extraction(const std::vector<std::filesystem::path>& inputs,
                          const RunConfig& cfg, std::ostream& out,
                          std::ostream& err, bool csv = false) {
  cfg.validate();
  if (cfg.normalize && csv)
    throw ConfigError("--normalize requires JSONL output");

  bool failed = false;
  std::vector<detail::SourceData> sources;
  std::vector<detail::ClipTask> tasks;
  for (const auto& input : inputs) {
    detail::SourceData sd;
    sd.path = input;
    try {
      sd.clip = load_source(input, cfg.format);
      if (cfg.flow == FlowKind::injected) {
        for (const auto& e : std::filesystem::directory_iterator(input))
          if (e.path().extension() == ".flo") sd.flo_files.push_back(e.path());
        std::sort(sd.flo_files.begin(), sd.flo_files.end());
        if (int(sd.flo_files.size()) != sd.clip.size() - 1)
          throw FormatError("expected " + std::to_string(sd.clip.size() - 1) +
                            " .flo files, found " +
                            std::to_string(sd.flo_files.size()));
      }
    } catch (const std::exception& e) {
      err << "error: " << input.string() << ": " << e.what() << "\n";
      failed = true;
      continue;
    }
    int idx = int(sources.size());
    for (auto [b, e] : clip_windows(sd.clip.size(), cfg.clip_len, cfg.stride))
      tasks.push_back({idx, b, e});
    sources.push_back(std::move(sd));
  }

  std::vector<std::optional<LabelRecord>> results(tasks.size());
  std::vector<std::string> task_errors(tasks.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t i; (i = cursor.fetch_add(1)) < tasks.size();) {
      try {
        results[i] = detail::process_clip(sources[tasks[i].source], tasks[i],
                                          cfg);
      } catch (const std::exception& e) {
        task_errors[i] = e.what();
      }
    }
  };
  if (cfg.workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < cfg.workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::string digest = params_digest(
      cfg.flow == FlowKind::injected ? "injected" : "variational",
      cfg.flow_params, cfg.hist_bins);
  if (csv) out << kCsvHeader << "\n";
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!results[i]) {
      err << "error: "
          << sources[tasks[i].source].path.string() << " ["
          << tasks[i].begin << "," << tasks[i].end
          << "): " << task_errors[i] << "\n";
      failed = true;
      continue;
    }
    if (csv)
      out << record_csv(*results[i]) << "\n";
    else
      out << record_json(*results[i], digest, cfg.normalize, cfg.clip_len)
                 .dump()
          << "\n";
  }
  return failed ? 1 : 0;
}

// ------------------------------------------------------------ visualization

// First clip of a source: Mu/Mv magnitude maps (PGM, rescaled to 0..255),
// the three region maps (PGM), and per-region diversity scores (CSV).
inline void visualize_source(const std::filesystem::path& input,
                             const RunConfig& cfg,
                             const std::string& out_prefix) {
  cfg.validate();
  Clip src = load_source(input, cfg.format);
  auto windows = clip_windows(src.size(), cfg.clip_len, cfg.stride);
  if (windows.empty())
    throw GeometryError("source shorter than one clip length");

  detail::SourceData sd;
  sd.path = input;
  sd.clip = std::move(src);
  if (cfg.flow == FlowKind::injected) {
    for (const auto& e : std::filesystem::directory_iterator(input))
      if (e.path().extension() == ".flo") sd.flo_files.push_back(e.path());
    std::sort(sd.flo_files.begin(), sd.flo_files.end());
  }

  Clip window;
  auto [b, e] = windows[0];
  window.frames.assign(sd.clip.frames.begin() + b, sd.clip.frames.begin() + e);
  if (cfg.do_resize)
    for (auto& f : window.frames)
      f = resize_bilinear(f, cfg.resize_w, cfg.resize_h);
  if (cfg.crop == CropMode::center)
    for (auto& f : window.frames) f = center_crop(f, cfg.crop_w, cfg.crop_h);

  std::vector<FlowField> flows;
  if (cfg.flow == FlowKind::injected) {
    for (int i = b; i < e - 1; ++i) flows.push_back(read_flo(sd.flo_files[i]));
  } else {
    flows = clip_flows(window, variational_provider(cfg.flow_params));
  }
  auto sb = sum_motion_boundaries(flows);

  int w = window.width(), h = window.height();
  auto dump_mag = [&](const BoundaryField& f, const std::string& tag) {
    double mx = 0.0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) mx = std::max(mx, f.mag(x, y));
    std::vector<std::uint8_t> gray(std::size_t(w) * h, 0);
    if (mx > 0)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          gray[std::size_t(y) * w + x] =
              std::uint8_t(std::lround(f.mag(x, y) / mx * 255.0));
    write_pgm(out_prefix + tag + ".pgm", gray, w, h);
  };
  dump_mag(sb.Mu, "mu_mag");
  dump_mag(sb.Mv, "mv_mag");

  struct Named {
    const char* name;
    RegionMap map;
  };
  Named maps[3] = {{"grid4x4", grid4x4(w, h)},
                   {"rings4", rings4(w, h)},
                   {"wedges8", wedges8(w, h)}};
  for (const auto& nm : maps) {
    std::vector<std::uint8_t> gray(std::size_t(w) * h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        gray[std::size_t(y) * w + x] =
            std::uint8_t(int(nm.map.at(x, y)) * 255 / (nm.map.regions - 1));
    write_pgm(out_prefix + std::string(nm.name) + ".pgm", gray, w, h);
  }

  std::ofstream csv(out_prefix + "diversity.csv", std::ios::binary);
  if (!csv) throw IoError("cannot write diversity csv");
  csv << "pattern,region,r_iou,g_iou,b_iou,mean\n";
  char buf[160];
  for (const auto& nm : maps) {
    auto chans = region_channel_ious(window, nm.map, cfg.hist_bins);
    for (int r = 0; r < nm.map.regions; ++r) {
      double mean = (chans[r][0] + chans[r][1] + chans[r][2]) / 3.0;
      std::snprintf(buf, sizeof buf, "%s,%d,%.12g,%.12g,%.12g,%.12g\n",
                    nm.name, r, chans[r][0], chans[r][1], chans[r][2], mean);
      csv << buf;
    }
  }
}

}  // namespace vstats
