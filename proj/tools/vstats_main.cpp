#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include <vstats/vstats.hpp>

namespace {

void parse_resize(const std::string& s, vstats::RunConfig& cfg) {
  if (s == "none") {
    cfg.do_resize = false;
    return;
  }
  int w = 0, h = 0;
  if (std::sscanf(s.c_str(), "%dx%d", &w, &h) != 2 || w < 1 || h < 1)
    throw vstats::ConfigError("bad --resize value: " + s);
  cfg.do_resize = true;
  cfg.resize_w = w;
  cfg.resize_h = h;
}

void parse_crop(const std::string& s, vstats::RunConfig& cfg) {
  if (s == "center")
    cfg.crop = vstats::CropMode::center;
  else if (s == "none")
    cfg.crop = vstats::CropMode::none;
  else if (s == "random")
    cfg.crop = vstats::CropMode::random_crop;
  else
    throw vstats::ConfigError("bad --crop value: " + s);
}

void parse_flow(const std::string& s, vstats::RunConfig& cfg) {
  if (s == "variational")
    cfg.flow = vstats::FlowKind::variational;
  else if (s == "injected")
    cfg.flow = vstats::FlowKind::injected;
  else
    throw vstats::ConfigError("bad --flow value: " + s);
}

const char* kOrientationSpan[8] = {
    "[0,45)",    "[45,90)",   "[90,135)",  "[135,180)",
    "[180,225)", "[225,270)", "[270,315)", "[315,360)"};

std::string octant_text(int c) {
  std::string s;
  s += (c & 4) ? "R>=128 " : "R<128 ";
  s += (c & 2) ? "G>=128 " : "G<128 ";
  s += (c & 1) ? "B>=128" : "B<128";
  return s;
}

void print_label(const char* pattern, const char* name,
                 const nlohmann::json& v, const char* kind) {
  std::printf("  %-8s %-4s ", pattern, name);
  if (v.is_null()) {
    std::printf("n/a (masked)\n");
    return;
  }
  int x = v.get<int>();
  std::string k(kind);
  if (k == "region")
    std::printf("%d (block %d)\n", x, x + 1);
  else if (k == "orientation")
    std::printf("%d (piece %d, %s deg)\n", x, x + 1, kOrientationSpan[x]);
  else if (k == "color")
    std::printf("%d (bin %d: %s)\n", x, x + 1, octant_text(x).c_str());
  else
    std::printf("%d (pair %d)\n", x, x + 1);
}

int run_inspect(const std::string& path, int record) {
  std::ifstream in(path);
  if (!in) throw vstats::IoError("cannot open " + path);
  std::string line;
  for (int i = 0; i < record; ++i)
    if (!std::getline(in, line))
      throw vstats::IoError("file has fewer than " + std::to_string(record) +
                            " records");
  auto j = nlohmann::json::parse(line);

  std::printf("clip_id:   %s\n", j["clip_id"].get<std::string>().c_str());
  std::printf("source:    %s\n", j["source"].get<std::string>().c_str());
  std::printf("frames:    [%d,%d)\n", j["frame_range"][0].get<int>(),
              j["frame_range"][1].get<int>());
  if (j.contains("analytic") && j["analytic"].get<bool>())
    std::printf("analytic:  true (generator truth; masked fields are n/a)\n");

  const char* patterns[3] = {"grid4x4", "rings4", "wedges8"};
  std::printf("motion (0-based value, 1-based figure index):\n");
  const auto& m = j["motion"];
  for (int p = 0; p < 3; ++p) {
    print_label(patterns[p], "u_l", m[4 * p + 0], "region");
    print_label(patterns[p], "u_o", m[4 * p + 1], "orientation");
    print_label(patterns[p], "v_l", m[4 * p + 2], "region");
    print_label(patterns[p], "v_o", m[4 * p + 3], "orientation");
  }
  print_label("global", "g_u", m[12], "pair");
  print_label("global", "g_v", m[13], "pair");

  std::printf("appearance:\n");
  const auto& a = j["appearance"];
  for (int p = 0; p < 3; ++p) {
    print_label(patterns[p], "p_d", a[4 * p + 0], "region");
    print_label(patterns[p], "c_d", a[4 * p + 1], "color");
    print_label(patterns[p], "p_s", a[4 * p + 2], "region");
    print_label(patterns[p], "c_s", a[4 * p + 3], "color");
  }
  print_label("global", "c_g", a[12], "color");

  std::printf("params_digest: %s\nconventions:   %s\n",
              j["params_digest"].get<std::string>().c_str(),
              j["conventions"].get<std::string>().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"motion and appearance statistics labels from raw video"};
  app.require_subcommand(1);

  // extract
  std::vector<std::string> inputs;
  std::string format = "y4m", resize = "171x128", crop = "center";
  std::string flow = "variational", out_path;
  vstats::RunConfig cfg;
  auto* ex = app.add_subcommand("extract", "compute label records for clips");
  ex->add_option("--input", inputs, "video sources, processed in order")
      ->required();
  ex->add_option("--format", format, "y4m | frames | raw");
  ex->add_option("--clip-len", cfg.clip_len, "frames per clip");
  ex->add_option("--stride", cfg.stride, "frames between clip starts");
  ex->add_option("--resize", resize, "WxH pre-crop resize, or 'none'");
  ex->add_option("--crop", crop, "center | none | random (112x112)");
  ex->add_option("--flow", flow, "variational | injected");
  ex->add_option("--bins", cfg.hist_bins, "histogram bins per channel");
  ex->add_option("--out", out_path, "output .jsonl or .csv ('-' = stdout)")
      ->required();
  ex->add_flag("--normalize", cfg.normalize, "emit [0,1]-scaled label view");
  ex->add_flag("--flip-jitter", cfg.flip_jitter,
               "seeded random horizontal flips");
  auto* ex_seed = ex->add_option("--seed", cfg.seed, "rng seed");
  ex->add_option("--workers", cfg.workers, "parallel clip workers");

  // synth
  std::string scenario, synth_out;
  std::uint64_t synth_seed = 0;
  int synth_bins = 16;
  auto* sy = app.add_subcommand("synth", "generate a synthetic clip + truth");
  sy->add_option("--scenario", scenario, "fig2 | pan | random")->required();
  sy->add_option("--out", synth_out, "output directory")->required();
  sy->add_option("--seed", synth_seed, "generator seed");
  sy->add_option("--bins", synth_bins, "histogram bins in the truth record");

  // visualize
  std::string vis_input, vis_prefix;
  std::string vis_format = "y4m", vis_resize = "171x128", vis_crop = "center";
  std::string vis_flow = "variational";
  vstats::RunConfig vis_cfg;
  auto* vi = app.add_subcommand(
      "visualize", "dump boundary magnitudes, region maps, diversity scores");
  vi->add_option("--input", vis_input, "video source")->required();
  vi->add_option("--out-prefix", vis_prefix, "output path prefix")->required();
  vi->add_option("--format", vis_format, "y4m | frames | raw");
  vi->add_option("--resize", vis_resize, "WxH pre-crop resize, or 'none'");
  vi->add_option("--crop", vis_crop, "center | none");
  vi->add_option("--flow", vis_flow, "variational | injected");
  vi->add_option("--clip-len", vis_cfg.clip_len, "frames per clip");
  vi->add_option("--bins", vis_cfg.hist_bins, "histogram bins per channel");

  // inspect
  std::string ins_input;
  int ins_record = 1;
  auto* in = app.add_subcommand("inspect", "decode one record of a label file");
  in->add_option("--input", ins_input, "label .jsonl file")->required();
  in->add_option("--record", ins_record, "1-based line number");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (ex->parsed()) {
      cfg.format = vstats::parse_source_format(format);
      parse_resize(resize, cfg);
      parse_crop(crop, cfg);
      parse_flow(flow, cfg);
      cfg.has_seed = ex_seed->count() > 0;
      std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
      bool csv = out_path.size() > 4 &&
                 out_path.substr(out_path.size() - 4) == ".csv";
      std::ofstream file;
      std::ostream* out = &std::cout;
      if (out_path != "-") {
        file.open(out_path, std::ios::binary);
        if (!file) throw vstats::IoError("cannot write " + out_path);
        out = &file;
      }
      return vstats::run_extraction(paths, cfg, *out, std::cerr, csv);
    }
    if (sy->parsed()) {
      auto sc = vstats::make_scenario(scenario, synth_seed);
      vstats::write_scenario(synth_out, sc, scenario, synth_bins);
      return 0;
    }
    if (vi->parsed()) {
      vis_cfg.format = vstats::parse_source_format(vis_format);
      parse_resize(vis_resize, vis_cfg);
      parse_crop(vis_crop, vis_cfg);
      parse_flow(vis_flow, vis_cfg);
      if (vis_cfg.crop == vstats::CropMode::random_crop)
        throw vstats::ConfigError("visualize does not take --crop random");
      vstats::visualize_source(vis_input, vis_cfg, vis_prefix);
      return 0;
    }
    if (in->parsed()) {
      if (ins_record < 1) throw vstats::ConfigError("--record is 1-based");
      return run_inspect(ins_input, ins_record);
    }
  } catch (const vstats::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
