// Acceptance gate: one pass/fail line per shipped guarantee. Each check is
// self-contained and timed; the binary exits nonzero if any line fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "testutil.hpp"

using namespace vstats;
using testutil::TempDir;

namespace {

int g_failed = 0;

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

void report(int idx, const char* what, bool ok, double secs,
            const std::string& why) {
  std::printf("[%s] C%d %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", idx, what,
              secs, why.empty() ? "" : " -- ", why.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failed;
}

std::string first_line(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

// ---------------------------------------------------------------- criterion 1
// Storyboard scene through the installed binary: synth, then injected-flow
// extraction; the five labels with unambiguous ground truth must match, and
// the extraction itself must finish within a second.

void criterion1() {
  auto t0 = clock_type::now();
  bool ok = false;
  std::string why;
  double extract_secs = 0.0;
  try {
    const char* cli = std::getenv("VSTATS_CLI");
    if (!cli) throw ConfigError("VSTATS_CLI is not set");
    TempDir td;
    auto dir = td.path() / "fig2";
    auto out = td.path() / "labels.jsonl";
    std::string synth = std::string(cli) + " synth --scenario fig2 --out " +
                        dir.string();
    if (std::system(synth.c_str()) != 0) throw IoError("synth invocation failed");
    std::string extract = std::string(cli) + " extract --input " +
                          dir.string() +
                          " --format frames --clip-len 13 --stride 13"
                          " --resize none --crop none --flow injected --out " +
                          out.string();
    auto e0 = clock_type::now();
    if (std::system(extract.c_str()) != 0)
      throw IoError("extract invocation failed");
    extract_secs = seconds_since(e0);

    auto j = nlohmann::json::parse(first_line(out));
    ok = j["motion"][0] == 6 && j["motion"][1] == 4 &&
         j["appearance"][0] == 6 && j["appearance"][1] == 1 &&
         j["appearance"][3] == 7;
    if (!ok)
      why = "labels " + j["motion"].dump() + " " + j["appearance"].dump();
    if (ok && extract_secs >= 1.0) {
      ok = false;
      why = "extraction took " + std::to_string(extract_secs) + "s";
    }
  } catch (const std::exception& e) {
    ok = false;
    why = e.what();
  }
  report(1, "storyboard labels through the CLI", ok, seconds_since(t0), why);
}

// ---------------------------------------------------------------- criterion 2
// Uniform pan: analytic flows must produce exactly zero summed boundaries,
// and the variational solver's boundary residue must stay under 15% of the
// pan speed (0.3 px at 2 px/frame) away from the frame border.

void criterion2() {
  auto t0 = clock_type::now();
  bool ok = true;
  std::string why;
  try {
    SynthClip sc = pan_scenario(3);
    auto sb = sum_motion_boundaries(sc.flows);
    for (double g : sb.Mu.gx)
      if (g != 0.0) ok = false;
    for (double g : sb.Mu.gy)
      if (g != 0.0) ok = false;
    for (double g : sb.Mv.gx)
      if (g != 0.0) ok = false;
    for (double g : sb.Mv.gy)
      if (g != 0.0) ok = false;
    if (!ok) why = "analytic pan boundaries are not exactly zero";

    auto f0 = clock_type::now();
    auto flows = clip_flows(sc.clip, variational_provider(FlowParams{}));
    double solve_secs = seconds_since(f0);
    int w = sc.clip.width(), h = sc.clip.height();
    int bx = w / 10, by = h / 10;
    for (std::size_t i = 0; ok && i < flows.size(); ++i) {
      auto one = sum_motion_boundaries({flows[i]});
      double su = 0.0, sv = 0.0;
      long long cnt = 0;
      for (int y = by; y < h - by; ++y)
        for (int x = bx; x < w - bx; ++x) {
          su += one.Mu.mag(x, y);
          sv += one.Mv.mag(x, y);
          ++cnt;
        }
      su /= double(cnt);
      sv /= double(cnt);
      if (su >= 0.3 || sv >= 0.3) {
        ok = false;
        why = "pair " + std::to_string(i) + " boundary residue u=" +
              std::to_string(su) + " v=" + std::to_string(sv);
      }
    }
    if (ok && solve_secs >= 30.0) {
      ok = false;
      why = "variational pass took " + std::to_string(solve_secs) + "s";
    }
  } catch (const std::exception& e) {
    ok = false;
    why = e.what();
  }
  report(2, "uniform pan boundary residue", ok, seconds_since(t0), why);
}

// ---------------------------------------------------------------- criterion 3
// 120 randomized small clips with injected smooth flows: the full pipeline
// must reproduce a naive single-pass reference implementation exactly.

void criterion3() {
  auto t0 = clock_type::now();
  bool ok = true;
  std::string why;
  try {
    TempDir td;
    std::mt19937_64 eng(1234);
    char buf[32];
    for (int i = 0; ok && i < 120; ++i) {
      int w = 8 + testutil::pick(eng, 25);
      int h = 8 + testutil::pick(eng, 25);
      int n = 4 + testutil::pick(eng, 5);
      Clip clip = testutil::random_clip(eng, w, h, n);
      auto flows = testutil::dyadic_flows(eng, w, h, n - 1);

      auto dir = td.path() / ("clip" + std::to_string(i));
      std::filesystem::create_directories(dir);
      for (int t = 0; t < n; ++t) {
        std::snprintf(buf, sizeof buf, "frame_%04d.ppm", t);
        write_ppm(dir / buf, clip.frames[t]);
      }
      for (int t = 0; t + 1 < n; ++t) {
        std::snprintf(buf, sizeof buf, "flow_%04d.flo", t);
        write_flo(dir / buf, flows[t]);
      }

      RunConfig cfg;
      cfg.format = SourceFormat::frames;
      cfg.flow = FlowKind::injected;
      cfg.do_resize = false;
      cfg.crop = CropMode::none;
      cfg.clip_len = n;
      cfg.stride = n;
      std::ostringstream out, err;
      if (run_extraction({dir}, cfg, out, err) != 0) {
        ok = false;
        why = "clip " + std::to_string(i) + ": " + err.str();
        break;
      }
      auto j = nlohmann::json::parse(out.str());
      auto m = oracle::motion_labels(flows);
      auto a = oracle::appearance_labels(clip, 16);
      for (int k = 0; k < 14; ++k)
        if (j["motion"][k].get<int>() != m[k]) ok = false;
      for (int k = 0; k < 13; ++k)
        if (j["appearance"][k].get<int>() != a[k]) ok = false;
      if (!ok)
        why = "clip " + std::to_string(i) + " (" + std::to_string(w) + "x" +
              std::to_string(h) + ") disagrees with the reference";
    }
    double secs = seconds_since(t0);
    if (ok && secs >= 60.0) {
      ok = false;
      why = "took " + std::to_string(secs) + "s";
    }
  } catch (const std::exception& e) {
    ok = false;
    why = e.what();
  }
  report(3, "120 random clips equal the naive reference", ok,
         seconds_since(t0), why);
}

// ---------------------------------------------------------------- criterion 4
// Textured 1.5 px/frame translation: endpoint error under half a pixel away
// from the border, with a non-increasing finest-level energy trace.

void criterion4() {
  auto t0 = clock_type::now();
  bool ok = true;
  std::string why;
  try {
    SynthClip sc = gen_global_pan(17, 1.5, 0.0, 2, 112, 112);
    PlaneF a = luma(sc.clip.frames[0]);
    PlaneF b = luma(sc.clip.frames[1]);
    EnergyTrace trace;
    FlowField f = solve_flow(a, b, FlowParams{}, &trace);

    int w = f.width, h = f.height, bx = w / 10, by = h / 10;
    double err = 0.0;
    long long cnt = 0;
    for (int y = by; y < h - by; ++y)
      for (int x = bx; x < w - bx; ++x) {
        err += std::hypot(double(f.u_at(x, y)) - 1.5, double(f.v_at(x, y)));
        ++cnt;
      }
    err /= double(cnt);
    if (err >= 0.5) {
      ok = false;
      why = "mean endpoint error " + std::to_string(err);
    }
    if (trace.finest_energies.size() < 2) {
      ok = false;
      why = "energy trace too short";
    }
    for (std::size_t i = 0; ok && i + 1 < trace.finest_energies.size(); ++i)
      if (trace.finest_energies[i + 1] >
          trace.finest_energies[i] * (1.0 + 1e-6)) {
        ok = false;
        why = "energy rose at step " + std::to_string(i);
      }
    double secs = seconds_since(t0);
    if (ok && secs >= 30.0) {
      ok = false;
      why = "took " + std::to_string(secs) + "s";
    }
  } catch (const std::exception& e) {
    ok = false;
    why = e.what();
  }
  report(4, "textured translation recovered", ok, seconds_since(t0), why);
}

// ---------------------------------------------------------------- criterion 5
// Property sweep, >= 1000 cases: label ranges; appearance is frame-order
// independent; motion labels ignore a constant flow offset; grid location
// labels mirror under a horizontal flip (checked only when the winning
// region leads by a clear margin, since a flip reorders the summation).

int mirror16(int idx) { return 4 * (idx / 4) + (3 - idx % 4); }

bool clear_lead(const std::vector<double>& v, bool want_max) {
  int best = 0;
  for (int i = 1; i < int(v.size()); ++i)
    if (want_max ? v[i] > v[best] : v[i] < v[best]) best = i;
  double runner = want_max ? -1e300 : 1e300;
  for (int i = 0; i < int(v.size()); ++i)
    if (i != best) runner = want_max ? std::max(runner, v[i])
                                     : std::min(runner, v[i]);
  double gap = want_max ? v[best] - runner : runner - v[best];
  double scale = std::max({std::abs(v[best]), std::abs(runner), 1e-12});
  return gap > 1e-9 * scale;
}

void criterion5() {
  auto t0 = clock_type::now();
  bool ok = true;
  std::string why;
  long long cases = 0, flip_checks = 0, flip_skips = 0;
  try {
    std::mt19937_64 eng(777);
    const int loc_max[3] = {15, 3, 7};
    for (int it = 0; ok && it < 260; ++it) {
      int w = 8 + 4 * testutil::pick(eng, 6);  // multiple of 4: grid blocks
      int h = 8 + testutil::pick(eng, 23);     // mirror onto each other
      int n = 3 + testutil::pick(eng, 4);
      Clip clip = testutil::random_clip(eng, w, h, n);
      auto flows = testutil::dyadic_flows(eng, w, h, n - 1);
      RegionMap g = grid4x4(w, h), r = rings4(w, h), wd = wedges8(w, h);
      auto m = motion_labels(flows, g, r, wd);
      auto a = appearance_labels(clip, g, r, wd, 16);

      // label ranges
      for (int p = 0; p < 3; ++p)
        for (int c = 0; c < 2; ++c) {
          int lm = m[4 * p + 2 * c], om = m[4 * p + 2 * c + 1];
          int la = a[4 * p + 2 * c], ca = a[4 * p + 2 * c + 1];
          if (lm < 0 || lm > loc_max[p] || om < 0 || om > 7) ok = false;
          if (la < 0 || la > loc_max[p] || ca < 0 || ca > 7) ok = false;
        }
      if (m[12] < 0 || m[12] > n - 2 || m[13] < 0 || m[13] > n - 2) ok = false;
      if (a[12] < 0 || a[12] > 7) ok = false;
      if (!ok) {
        why = "label out of range at iteration " + std::to_string(it);
        break;
      }
      ++cases;

      // frame order independence of appearance
      Clip shuffled;
      shuffled.frames = clip.frames;
      for (int i = n - 1; i > 0; --i)
        std::swap(shuffled.frames[i],
                  shuffled.frames[testutil::pick(eng, i + 1)]);
      if (appearance_labels(shuffled, g, r, wd, 16) != a) {
        ok = false;
        why = "appearance changed under frame shuffle at iteration " +
              std::to_string(it);
        break;
      }
      ++cases;

      // constant flow offset invariance
      float cu = float(testutil::pick(eng, 33) - 16) / 8.0f;
      float cv = float(testutil::pick(eng, 33) - 16) / 8.0f;
      auto shifted = flows;
      for (auto& f : shifted) {
        for (auto& u : f.u) u += cu;
        for (auto& v : f.v) v += cv;
      }
      if (motion_labels(shifted, g, r, wd) != m) {
        ok = false;
        why = "motion changed under constant offset at iteration " +
              std::to_string(it);
        break;
      }
      ++cases;

      // horizontal flip: grid location labels mirror
      Clip flipped;
      for (const auto& fr : clip.frames) flipped.frames.push_back(hflip(fr));
      std::vector<FlowField> fflows;
      for (const auto& f : flows) fflows.push_back(testutil::hflip_flow(f));
      auto mf = motion_labels(fflows, g, r, wd);
      auto af = appearance_labels(flipped, g, r, wd, 16);

      auto sb = sum_motion_boundaries(flows);
      auto mean_u = region_mean_magnitudes(sb.Mu, g);
      auto mean_v = region_mean_magnitudes(sb.Mv, g);
      auto scores = region_diversity_scores(clip, g, 16);
      struct GateCheck {
        bool gate;
        int got, want;
      } checks[4] = {
          {clear_lead(mean_u, true), mf[0], mirror16(m[0])},
          {clear_lead(mean_v, true), mf[2], mirror16(m[2])},
          {clear_lead(scores, false), af[0], mirror16(a[0])},
          {clear_lead(scores, true), af[2], mirror16(a[2])},
      };
      for (const auto& c : checks) {
        ++flip_checks;
        if (!c.gate) {
          ++flip_skips;
          continue;
        }
        if (c.got != c.want) {
          ok = false;
          why = "flip mismatch at iteration " + std::to_string(it);
        }
      }
      if (!ok) break;
      ++cases;
    }
    if (ok && cases < 1000) {
      ok = false;
      why = "only " + std::to_string(cases) + " cases";
    }
    if (ok && flip_skips * 5 > flip_checks) {
      ok = false;
      why = "flip gate skipped " + std::to_string(flip_skips) + "/" +
            std::to_string(flip_checks);
    }
    double secs = seconds_since(t0);
    if (ok && secs >= 300.0) {
      ok = false;
      why = "took " + std::to_string(secs) + "s";
    }
  } catch (const std::exception& e) {
    ok = false;
    why = e.what();
  }
  char label[64];
  std::snprintf(label, sizeof label, "property sweep (%lld cases)", cases);
  report(5, label, ok, seconds_since(t0), why);
}

// ---------------------------------------------------------------- criterion 6
// Determinism and serialization: reruns are byte-identical, flow files
// round-trip bit-exactly, normalized views invert exactly.

void criterion6() {
  auto t0 = clock_type::now();
  bool ok = true;
  std::string why;
  try {
    TempDir td;
    auto dir = td.path() / "fig2";
    write_scenario(dir, fig2_scenario(), "fig2");
    RunConfig cfg;
    cfg.format = SourceFormat::frames;
    cfg.flow = FlowKind::injected;
    cfg.do_resize = false;
    cfg.crop = CropMode::none;
    cfg.clip_len = 13;
    cfg.stride = 13;
    std::ostringstream o1, o2, err;
    if (run_extraction({dir}, cfg, o1, err) != 0 ||
        run_extraction({dir}, cfg, o2, err) != 0) {
      ok = false;
      why = err.str();
    } else if (o1.str() != o2.str() || o1.str().empty()) {
      ok = false;
      why = "reruns differ";
    }

    std::mt19937_64 eng(31);
    for (int i = 0; ok && i < 8; ++i) {
      FlowField f = testutil::dyadic_flow(eng, 5 + i * 7, 4 + i * 5);
      f.u[0] = -32768.25f;
      f.v.back() = 1048576.5f;
      auto p = td.path() / ("f" + std::to_string(i) + ".flo");
      write_flo(p, f);
      FlowField g = read_flo(p);
      if (g.u != f.u || g.v != f.v || g.width != f.width ||
          g.height != f.height) {
        ok = false;
        why = "flow file round trip changed values";
      }
    }

    const int loc_max[3] = {15, 3, 7};
    for (int i = 0; ok && i < 500; ++i) {
      int n = 3 + testutil::pick(eng, 38);
      std::array<int, 14> m{};
      std::array<int, 13> a{};
      int k = 0;
      for (int p = 0; p < 3; ++p) {
        m[k] = testutil::pick(eng, loc_max[p] + 1);
        a[k++] = testutil::pick(eng, loc_max[p] + 1);
        m[k] = testutil::pick(eng, 8);
        a[k++] = testutil::pick(eng, 8);
        m[k] = testutil::pick(eng, loc_max[p] + 1);
        a[k++] = testutil::pick(eng, loc_max[p] + 1);
        m[k] = testutil::pick(eng, 8);
        a[k++] = testutil::pick(eng, 8);
      }
      m[12] = testutil::pick(eng, n - 1);
      m[13] = testutil::pick(eng, n - 1);
      a[12] = testutil::pick(eng, 8);
      auto [m2, a2] = denormalize_labels(normalize_labels(m, a, n), n);
      if (m2 != m || a2 != a) {
        ok = false;
        why = "normalize round trip failed at case " + std::to_string(i);
      }
    }
  } catch (const std::exception& e) {
    ok = false;
    why = e.what();
  }
  report(6, "determinism and round trips", ok, seconds_since(t0), why);
}

// ---------------------------------------------------------------- criterion 7
// Stock configuration end to end: a 33-frame 160x120 panning texture yields
// exactly two records, windows [0,16) and [16,32), with frames resized to
// 171x128 and center-cropped to 112x112 before labeling.

void criterion7() {
  auto t0 = clock_type::now();
  bool ok = true;
  std::string why;
  try {
    TempDir td;
    NoisePattern pat(99);
    Clip clip;
    for (int t = 0; t < 33; ++t)
      clip.frames.push_back(pat.render(160, 120, 1.7 * t, 0.9 * t));
    auto path = td.path() / "pan.y4m";
    write_y4m(path, clip);

    ImageU8 staged = center_crop(resize_bilinear(clip.frames[0], 171, 128),
                                 112, 112);
    if (staged.width != 112 || staged.height != 112) {
      ok = false;
      why = "stock geometry is not 112x112";
    }

    RunConfig cfg;  // stock settings throughout
    std::ostringstream out, err;
    if (ok && run_extraction({path}, cfg, out, err) != 0) {
      ok = false;
      why = err.str();
    }
    if (ok) {
      std::istringstream lines(out.str());
      std::string l1, l2, extra;
      if (!std::getline(lines, l1) || !std::getline(lines, l2) ||
          std::getline(lines, extra)) {
        ok = false;
        why = "expected exactly 2 records";
      } else {
        auto j1 = nlohmann::json::parse(l1);
        auto j2 = nlohmann::json::parse(l2);
        if (j1["frame_range"] != nlohmann::json::array({0, 16}) ||
            j2["frame_range"] != nlohmann::json::array({16, 32})) {
          ok = false;
          why = "unexpected frame ranges " + j1["frame_range"].dump() + " " +
                j2["frame_range"].dump();
        }
      }
    }
  } catch (const std::exception& e) {
    ok = false;
    why = e.what();
  }
  report(7, "stock config windows and geometry", ok, seconds_since(t0), why);
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  if (g_failed)
    std::printf("%d criterion(s) failed\n", g_failed);
  else
    std::printf("all criteria passed\n");
  return g_failed ? 1 : 0;
}
