#pragma once

#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "image.hpp"

namespace vstats {

struct Clip {
  std::vector<ImageU8> frames;
  int width() const { return frames.empty() ? 0 : frames[0].width; }
  int height() const { return frames.empty() ? 0 : frames[0].height; }
  int size() const { return int(frames.size()); }
};

// Half-open [start, start+len) windows; trailing partial window dropped.
inline std::vector<std::pair<int, int>> clip_windows(int total, int len,
                                                     int stride) {
  if (len < 2) throw ConfigError("clip length must be at least 2");
  if (stride < 1) throw ConfigError("stride must be positive");
  std::vector<std::pair<int, int>> out;
  for (int s = 0; s + len <= total; s += stride) out.emplace_back(s, s + len);
  return out;
}

// ---------------------------------------------------------------- PPM / PGM

namespace detail {
inline int pnm_token(std::istream& in) {
  // skips whitespace and '#' comments, reads one non-negative integer
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c)) throw FormatError("bad pnm header");
  int v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    c = in.get();
  }
  return v;
}
}  // namespace detail

inline ImageU8 read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char m0 = char(in.get()), m1 = char(in.get());
  if (m0 != 'P' || m1 != '6') throw FormatError("not a P6 ppm: " + path.string());
  int w = detail::pnm_token(in);
  int h = detail::pnm_token(in);
  int maxv = detail::pnm_token(in);
  if (maxv != 255) throw FormatError("ppm maxval must be 255");
  ImageU8 im(w, h);
  in.read(reinterpret_cast<char*>(im.data.data()), std::streamsize(im.data.size()));
  if (std::size_t(in.gcount()) != im.data.size())
    throw FormatError("truncated ppm: " + path.string());
  return im;
}

inline void write_ppm(const std::filesystem::path& path, const ImageU8& im) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P6\n" << im.width << " " << im.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(im.data.data()),
            std::streamsize(im.data.size()));
  if (!out) throw IoError("short write: " + path.string());
}

inline void write_pgm(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& gray, int w, int h) {
  if (gray.size() != std::size_t(w) * h) throw GeometryError("pgm size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(gray.data()), std::streamsize(gray.size()));
  if (!out) throw IoError("short write: " + path.string());
}

// ------------------------------------------------------------------- PNG

namespace detail {

inline std::uint32_t be32(const unsigned char* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

inline std::vector<unsigned char> zlib_inflate(const unsigned char* src,
                                               std::size_t n,
                                               std::size_t expected) {
  std::vector<unsigned char> out(expected);
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw FormatError("inflateInit failed");
  zs.next_in = const_cast<unsigned char*>(src);
  zs.avail_in = uInt(n);
  zs.next_out = out.data();
  zs.avail_out = uInt(out.size());
  int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.avail_out != 0)
    throw FormatError("png: bad zlib stream");
  return out;
}

inline int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace detail

// Minimal PNG reader: 8-bit depth, color types 0 (gray), 2 (rgb), 6 (rgba);
// no interlacing, no palette. Alpha is dropped, gray is replicated.
inline ImageU8 read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> file((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (file.size() < 8 || std::memcmp(file.data(), sig, 8) != 0)
    throw FormatError("not a png: " + path.string());

  std::size_t pos = 8;
  int w = 0, h = 0, bitdepth = 0, colortype = 0;
  std::vector<unsigned char> idat;
  bool saw_ihdr = false, saw_iend = false;
  while (pos + 8 <= file.size()) {
    std::uint32_t len = detail::be32(&file[pos]);
    if (pos + 12 + len > file.size()) throw FormatError("truncated png chunk");
    std::string type(reinterpret_cast<const char*>(&file[pos + 4]), 4);
    const unsigned char* body = &file[pos + 8];
    if (type == "IHDR") {
      if (len != 13) throw FormatError("bad IHDR");
      w = int(detail::be32(body));
      h = int(detail::be32(body + 4));
      bitdepth = body[8];
      colortype = body[9];
      if (body[12] != 0) throw FormatError("interlaced png unsupported");
      if (bitdepth != 8) throw FormatError("png bit depth must be 8");
      if (colortype != 0 && colortype != 2 && colortype != 6)
        throw FormatError("png color type unsupported");
      saw_ihdr = true;
    } else if (type == "IDAT") {
      idat.insert(idat.end(), body, body + len);
    } else if (type == "IEND") {
      saw_iend = true;
      break;
    }
    pos += 12 + len;  // length + type + crc
  }
  if (!saw_ihdr || !saw_iend || w <= 0 || h <= 0)
    throw FormatError("malformed png: " + path.string());

  int ch = colortype == 2 ? 3 : colortype == 6 ? 4 : 1;
  std::size_t stride = std::size_t(w) * ch;
  std::vector<unsigned char> raw =
      detail::zlib_inflate(idat.data(), idat.size(), (stride + 1) * h);

  ImageU8 im(w, h);
  std::vector<unsigned char> prev(stride, 0), cur(stride);
  for (int y = 0; y < h; ++y) {
    unsigned char filter = raw[std::size_t(y) * (stride + 1)];
    const unsigned char* src = &raw[std::size_t(y) * (stride + 1) + 1];
    for (std::size_t i = 0; i < stride; ++i) {
      int a = i >= std::size_t(ch) ? cur[i - ch] : 0;
      int b = prev[i];
      int c = i >= std::size_t(ch) ? prev[i - ch] : 0;
      int x = src[i];
      switch (filter) {
        case 0: break;
        case 1: x += a; break;
        case 2: x += b; break;
        case 3: x += (a + b) / 2; break;
        case 4: x += detail::paeth(a, b, c); break;
        default: throw FormatError("png: unknown filter");
      }
      cur[i] = (unsigned char)(x & 0xff);
    }
    for (int x = 0; x < w; ++x) {
      const unsigned char* px = &cur[std::size_t(x) * ch];
      if (ch == 1) {
        im.at(x, y, 0) = im.at(x, y, 1) = im.at(x, y, 2) = px[0];
      } else {
        im.at(x, y, 0) = px[0];
        im.at(x, y, 1) = px[1];
        im.at(x, y, 2) = px[2];
      }
    }
    std::swap(prev, cur);
  }
  return im;
}

// ----------------------------------------------------------- raw + sidecar

// Headerless interleaved RGB24 with a "<file>.hdr" sidecar carrying
// width=/height=/frames= lines.
inline Clip read_raw(const std::filesystem::path& path) {
  std::filesystem::path hdr = path;
  hdr += ".hdr";
  std::ifstream hin(hdr);
  if (!hin) throw IoError("missing sidecar " + hdr.string());
  int w = -1, h = -1, n = -1;
  std::string line;
  while (std::getline(hin, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    int val = std::stoi(line.substr(eq + 1));
    if (key == "width") w = val;
    else if (key == "height") h = val;
    else if (key == "frames") n = val;
  }
  if (w <= 0 || h <= 0 || n <= 0) throw FormatError("bad sidecar " + hdr.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Clip clip;
  for (int t = 0; t < n; ++t) {
    ImageU8 im(w, h);
    in.read(reinterpret_cast<char*>(im.data.data()), std::streamsize(im.data.size()));
    if (std::size_t(in.gcount()) != im.data.size())
      throw FormatError("truncated raw stream: " + path.string());
    clip.frames.push_back(std::move(im));
  }
  return clip;
}

inline void write_raw(const std::filesystem::path& path, const Clip& clip) {
  if (clip.frames.empty()) throw GeometryError("empty clip");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& f : clip.frames) {
    if (f.width != clip.width() || f.height != clip.height())
      throw GeometryError("inconsistent frame sizes");
    out.write(reinterpret_cast<const char*>(f.data.data()),
              std::streamsize(f.data.size()));
  }
  std::filesystem::path hdr = path;
  hdr += ".hdr";
  std::ofstream hout(hdr);
  hout << "width=" << clip.width() << "\nheight=" << clip.height()
       << "\nframes=" << clip.size() << "\n";
  if (!hout) throw IoError("cannot write " + hdr.string());
}

// -------------------------------------------------------------------- Y4M

namespace detail {

// BT.601 studio-range YCbCr -> RGB, rounded and clamped.
inline void ycbcr_to_rgb(int Y, int Cb, int Cr, std::uint8_t* rgb) {
  double yn = (Y - 16) / 219.0;
  double pb = (Cb - 128) / 224.0;
  double pr = (Cr - 128) / 224.0;
  double r = yn + 1.402 * pr;
  double g = yn - 0.714136 * pr - 0.344136 * pb;
  double b = yn + 1.772 * pb;
  auto q = [](double v) {
    return std::uint8_t(std::lround(std::clamp(v * 255.0, 0.0, 255.0)));
  };
  rgb[0] = q(r);
  rgb[1] = q(g);
  rgb[2] = q(b);
}

}  // namespace detail

// YUV4MPEG2 reader. Chroma: C444 direct; C420/C420jpeg/C420mpeg2 decoded with
// box upsampling (each chroma sample covers its 2x2 luma block).
inline Clip read_y4m(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw FormatError("empty y4m");
  if (header.rfind("YUV4MPEG2", 0) != 0)
    throw FormatError("not a y4m stream: " + path.string());

  int w = 0, h = 0;
  std::string chroma = "420";
  std::istringstream hs(header);
  std::string tok;
  hs >> tok;  // magic
  while (hs >> tok) {
    if (tok.size() < 2) continue;
    switch (tok[0]) {
      case 'W': w = std::stoi(tok.substr(1)); break;
      case 'H': h = std::stoi(tok.substr(1)); break;
      case 'C': chroma = tok.substr(1); break;
      default: break;  // F/I/A/X ignored
    }
  }
  if (w <= 0 || h <= 0) throw FormatError("y4m missing geometry");
  bool c444 = chroma == "444";
  bool c420 = chroma == "420" || chroma == "420jpeg" || chroma == "420mpeg2";
  if (!c444 && !c420) throw FormatError("unsupported y4m chroma C" + chroma);
  if (c420 && (w % 2 || h % 2))
    throw FormatError("odd dimensions with 4:2:0 chroma");

  int cw = c444 ? w : w / 2;
  int chh = c444 ? h : h / 2;
  std::size_t ysz = std::size_t(w) * h;
  std::size_t csz = std::size_t(cw) * chh;
  std::vector<unsigned char> yp(ysz), cb(csz), cr(csz);

  Clip clip;
  std::string fl;
  while (std::getline(in, fl)) {
    if (fl.rfind("FRAME", 0) != 0)
      throw FormatError("y4m: expected FRAME marker");
    in.read(reinterpret_cast<char*>(yp.data()), std::streamsize(ysz));
    in.read(reinterpret_cast<char*>(cb.data()), std::streamsize(csz));
    in.read(reinterpret_cast<char*>(cr.data()), std::streamsize(csz));
    if (!in) throw FormatError("truncated y4m frame");
    ImageU8 im(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        std::size_t ci = c444 ? std::size_t(y) * w + x
                              : std::size_t(y / 2) * cw + x / 2;
        detail::ycbcr_to_rgb(yp[std::size_t(y) * w + x], cb[ci], cr[ci],
                             &im.at(x, y, 0));
      }
    clip.frames.push_back(std::move(im));
  }
  if (clip.frames.empty()) throw FormatError("y4m with no frames");
  return clip;
}

// C444 writer (exact RGB->YCbCr->RGB round-trips are not guaranteed; this
// exists for test fixtures and interchange).
inline void write_y4m(const std::filesystem::path& path, const Clip& clip) {
  if (clip.frames.empty()) throw GeometryError("empty clip");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  int w = clip.width(), h = clip.height();
  out << "YUV4MPEG2 W" << w << " H" << h << " F25:1 Ip A1:1 C444\n";
  std::vector<unsigned char> yp(std::size_t(w) * h), cb(yp.size()), cr(yp.size());
  for (const auto& f : clip.frames) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double r = f.at(x, y, 0) / 255.0;
        double g = f.at(x, y, 1) / 255.0;
        double b = f.at(x, y, 2) / 255.0;
        double yn = 0.299 * r + 0.587 * g + 0.114 * b;
        double pb = (b - yn) / 1.772;
        double pr = (r - yn) / 1.402;
        std::size_t i = std::size_t(y) * w + x;
        yp[i] = (unsigned char)std::lround(std::clamp(16 + 219 * yn, 0.0, 255.0));
        cb[i] = (unsigned char)std::lround(std::clamp(128 + 224 * pb, 0.0, 255.0));
        cr[i] = (unsigned char)std::lround(std::clamp(128 + 224 * pr, 0.0, 255.0));
      }
    out << "FRAME\n";
    out.write(reinterpret_cast<const char*>(yp.data()), std::streamsize(yp.size()));
    out.write(reinterpret_cast<const char*>(cb.data()), std::streamsize(cb.size()));
    out.write(reinterpret_cast<const char*>(cr.data()), std::streamsize(cr.size()));
  }
  if (!out) throw IoError("short write: " + path.string());
}

// ------------------------------------------------------------ frame sources

enum class SourceFormat { y4m, frames, raw };

inline SourceFormat parse_source_format(const std::string& s) {
  if (s == "y4m") return SourceFormat::y4m;
  if (s == "frames") return SourceFormat::frames;
  if (s == "raw") return SourceFormat::raw;
  throw ConfigError("unknown source format: " + s);
}

// frames = directory of .ppm/.png files, ordered by filename.
inline Clip load_source(const std::filesystem::path& path, SourceFormat fmt) {
  switch (fmt) {
    case SourceFormat::y4m:
      return read_y4m(path);
    case SourceFormat::raw:
      return read_raw(path);
    case SourceFormat::frames: {
      if (!std::filesystem::is_directory(path))
        throw IoError("not a directory: " + path.string());
      std::vector<std::filesystem::path> files;
      for (const auto& e : std::filesystem::directory_iterator(path)) {
        auto ext = e.path().extension().string();
        if (ext == ".ppm" || ext == ".png") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      if (files.empty()) throw IoError("no frames in " + path.string());
      Clip clip;
      for (const auto& f : files)
        clip.frames.push_back(f.extension() == ".ppm" ? read_ppm(f) : read_png(f));
      for (const auto& fr : clip.frames)
        if (fr.width != clip.width() || fr.height != clip.height())
          throw FormatError("frame sizes differ in " + path.string());
      return clip;
    }
  }
  throw ConfigError("unreachable");
}

}  // namespace vstats
