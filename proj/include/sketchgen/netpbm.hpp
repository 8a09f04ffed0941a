#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sketchgen {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Planar float image, values in [0,1]; c is 1 (grey) or 3 (RGB).
struct Img {
  int c = 0, h = 0, w = 0;
  std::vector<float> v;
  Img() = default;
  Img(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(size_t(c_) * h_ * w_) {}
  float& at(int ch, int y, int x) { return v[(size_t(ch) * h + y) * w + x]; }
  float at(int ch, int y, int x) const {
    return v[(size_t(ch) * h + y) * w + x];
  }
};

inline std::uint8_t quantize(float x) {
  const float c = x < 0.f ? 0.f : (x > 1.f ? 1.f : x);
  return std::uint8_t(c * 255.0f + 0.5f);
}

// P6, maxval 255
inline void write_ppm(const std::string& path, const Img& img) {
  if (img.c != 3) throw IoError("write_ppm: expected 3 channels");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("write_ppm: cannot open " + path);
  f << "P6\n" << img.w << " " << img.h << "\n255\n";
  std::vector<std::uint8_t> row(size_t(img.w) * 3);
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x)
      for (int ch = 0; ch < 3; ++ch)
        row[x * 3 + ch] = quantize(img.at(ch, y, x));
    f.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
  if (!f) throw IoError("write_ppm: write failed for " + path);
}

// P5, maxval 255. Sketches are stored dark-on-light: callers invert before
// writing and after reading.
inline void write_pgm(const std::string& path, const Img& img) {
  if (img.c != 1) throw IoError("write_pgm: expected 1 channel");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("write_pgm: cannot open " + path);
  f << "P5\n" << img.w << " " << img.h << "\n255\n";
  std::vector<std::uint8_t> row(img.w);
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x) row[x] = quantize(img.at(0, y, x));
    f.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
  if (!f) throw IoError("write_pgm: write failed for " + path);
}

namespace detail {

inline int pnm_token(std::istream& f) {
  // skips whitespace and '#' comments, reads one non-negative integer
  int ch = f.get();
  for (;;) {
    while (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') ch = f.get();
    if (ch == '#') {
      while (ch != '\n' && ch != EOF) ch = f.get();
      continue;
    }
    break;
  }
  if (ch == EOF) throw IoError("pnm: unexpected end of header");
  int val = 0;
  bool any = false;
  while (ch >= '0' && ch <= '9') {
    val = val * 10 + (ch - '0');
    any = true;
    ch = f.get();
  }
  if (!any) throw IoError("pnm: malformed header");
  return val;
}

}  // namespace detail

inline Img read_pnm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("read_pnm: cannot open " + path);
  char m0 = 0, m1 = 0;
  f.get(m0);
  f.get(m1);
  if (m0 != 'P' || (m1 != '5' && m1 != '6'))
    throw IoError("read_pnm: not a binary PGM/PPM file: " + path);
  const int channels = m1 == '6' ? 3 : 1;
  const int w = detail::pnm_token(f);
  const int h = detail::pnm_token(f);
  const int maxval = detail::pnm_token(f);
  if (maxval != 255) throw IoError("read_pnm: only maxval 255 supported");
  Img img(channels, h, w);
  std::vector<std::uint8_t> row(size_t(w) * channels);
  for (int y = 0; y < h; ++y) {
    f.read(reinterpret_cast<char*>(row.data()), row.size());
    if (!f) throw IoError("read_pnm: truncated pixel data in " + path);
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < channels; ++ch)
        img.at(ch, y, x) = float(row[x * channels + ch]) / 255.0f;
  }
  return img;
}

}  // namespace sketchgen
