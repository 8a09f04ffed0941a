#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "sketchgen/netpbm.hpp"
#include "sketchgen/rng.hpp"

namespace sketchgen {

// ---------------------------------------------------------------------------
// Geometry helpers
// ---------------------------------------------------------------------------

struct Vec2 {
  double x = 0, y = 0;
};
using Poly = std::vector<Vec2>;

struct Affine {
  // p' = (a p.x + b p.y + tx, c p.x + d p.y + ty)
  double a = 1, b = 0, c = 0, d = 1, tx = 0, ty = 0;
  Vec2 operator()(Vec2 p) const {
    return {a * p.x + b * p.y + tx, c * p.x + d * p.y + ty};
  }
  Affine then(const Affine& o) const {  // apply *this first, then o
    return {o.a * a + o.b * c,      o.a * b + o.b * d,
            o.c * a + o.d * c,      o.c * b + o.d * d,
            o.a * tx + o.b * ty + o.tx, o.c * tx + o.d * ty + o.ty};
  }
  Affine inverse() const {
    const double det = a * d - b * c;
    const double ia = d / det, ib = -b / det, ic = -c / det, id = a / det;
    return {ia, ib, ic, id, -(ia * tx + ib * ty), -(ic * tx + id * ty)};
  }
  static Affine translate(double x, double y) { return {1, 0, 0, 1, x, y}; }
  static Affine scale(double sx, double sy) { return {sx, 0, 0, sy, 0, 0}; }
  static Affine rotate(double rad) {
    const double co = std::cos(rad), si = std::sin(rad);
    return {co, -si, si, co, 0, 0};
  }
  static Affine shear_x(double k) { return {1, k, 0, 1, 0, 0}; }
};

inline Poly ellipse_arc(double cx, double cy, double rx, double ry,
                        double a0 = 0, double a1 = 6.283185307179586,
                        int n = 28) {
  Poly p;
  for (int i = 0; i <= n; ++i) {
    const double t = a0 + (a1 - a0) * double(i) / n;
    p.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
  }
  return p;
}

// anti-aliased stroke: coverage by distance to the segment
inline void draw_polyline(Img& canvas, const Poly& pts, const Affine& xf,
                          double thickness) {
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    const Vec2 p0 = xf(pts[s]);
    const Vec2 p1 = xf(pts[s + 1]);
    const double r = thickness * 0.5 + 1.0;
    const int x0 = std::max(0, int(std::floor(std::min(p0.x, p1.x) - r)));
    const int x1 =
        std::min(canvas.w - 1, int(std::ceil(std::max(p0.x, p1.x) + r)));
    const int y0 = std::max(0, int(std::floor(std::min(p0.y, p1.y) - r)));
    const int y1 =
        std::min(canvas.h - 1, int(std::ceil(std::max(p0.y, p1.y) + r)));
    const double dx = p1.x - p0.x, dy = p1.y - p0.y;
    const double len2 = dx * dx + dy * dy;
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double px = x - p0.x, py = y - p0.y;
        double t = len2 > 0 ? (px * dx + py * dy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double ex = px - t * dx, ey = py - t * dy;
        const double dist = std::sqrt(ex * ex + ey * ey);
        const double cov =
            std::clamp(thickness * 0.5 + 0.5 - dist, 0.0, 1.0);
        float& dst = canvas.at(0, y, x);
        dst = std::max(dst, float(cov));
      }
  }
}

// even-odd scanline fill at pixel centers
inline void fill_polygon(Img& img, const Poly& pts, const Affine& xf,
                         const std::array<float, 3>& color,
                         float blend = 1.0f) {
  Poly q(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) q[i] = xf(pts[i]);
  double miny = 1e9, maxy = -1e9;
  for (const auto& p : q) {
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  const int y0 = std::max(0, int(std::floor(miny)));
  const int y1 = std::min(img.h - 1, int(std::ceil(maxy)));
  std::vector<double> xs;
  for (int y = y0; y <= y1; ++y) {
    const double cy = y + 0.0;
    xs.clear();
    for (std::size_t i = 0; i < q.size(); ++i) {
      const Vec2& a = q[i];
      const Vec2& b = q[(i + 1) % q.size()];
      if ((a.y <= cy && b.y > cy) || (b.y <= cy && a.y > cy))
        xs.push_back(a.x + (cy - a.y) / (b.y - a.y) * (b.x - a.x));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
      const int xa = std::max(0, int(std::ceil(xs[i])));
      const int xb = std::min(img.w - 1, int(std::floor(xs[i + 1])));
      for (int x = xa; x <= xb; ++x)
        for (int ch = 0; ch < img.c; ++ch) {
          float& dst = img.at(ch, y, x);
          dst = (1.0f - blend) * dst + blend * color[ch % 3];
        }
    }
  }
}

// ---------------------------------------------------------------------------
// Class stroke programs. Shapes live in canonical [-1,1]^2 coordinates
// (y grows downward, matching image rows). `essential` strokes are never
// dropped by sketcher abstraction.
// ---------------------------------------------------------------------------

struct StrokeProgram {
  std::string name;
  std::vector<Poly> strokes;
  std::vector<bool> essential;
  std::vector<Poly> fills;              // silhouette polygons for the image
  std::array<float, 3> base_color{};    // object tint
};

namespace detail {

inline Poly rect(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
}

inline StrokeProgram make_class_program(int cls) {
  StrokeProgram p;
  auto add = [&](Poly s, bool ess = true) {
    p.strokes.push_back(std::move(s));
    p.essential.push_back(ess);
  };
  switch (cls) {
    case 0: {  // mug
      p.name = "mug";
      add(rect(-0.55, -0.6, 0.45, 0.6));
      add(ellipse_arc(0.45, 0.0, 0.38, 0.38, -1.5707, 1.5707, 16));
      add({{-0.55, -0.35}, {0.45, -0.35}}, false);  // rim line
      p.fills.push_back(rect(-0.55, -0.6, 0.45, 0.6));
      p.base_color = {0.75f, 0.25f, 0.2f};
      break;
    }
    case 1: {  // boat
      p.name = "boat";
      add({{-0.9, 0.25}, {0.9, 0.25}, {0.5, 0.7}, {-0.5, 0.7}, {-0.9, 0.25}});
      add({{0.0, 0.25}, {0.0, -0.85}});
      add({{0.0, -0.85}, {0.7, -0.15}, {0.0, -0.15}, {0.0, -0.85}});
      add({{-0.05, -0.5}, {-0.55, -0.2}, {-0.05, -0.2}}, false);  // jib
      p.fills.push_back(
          {{-0.9, 0.25}, {0.9, 0.25}, {0.5, 0.7}, {-0.5, 0.7}});
      p.fills.push_back({{0.0, -0.85}, {0.7, -0.15}, {0.0, -0.15}});
      p.base_color = {0.25f, 0.35f, 0.75f};
      break;
    }
    case 2: {  // house
      p.name = "house";
      add(rect(-0.6, -0.1, 0.6, 0.75));
      add({{-0.75, -0.1}, {0.0, -0.8}, {0.75, -0.1}, {-0.75, -0.1}});
      add(rect(-0.15, 0.25, 0.15, 0.75), false);  // door
      add(rect(0.25, 0.1, 0.45, 0.3), false);     // window
      p.fills.push_back(rect(-0.6, -0.1, 0.6, 0.75));
      p.fills.push_back({{-0.75, -0.1}, {0.0, -0.8}, {0.75, -0.1}});
      p.base_color = {0.8f, 0.65f, 0.3f};
      break;
    }
    case 3: {  // fish
      p.name = "fish";
      add(ellipse_arc(-0.15, 0.0, 0.6, 0.35));
      add({{0.4, 0.0}, {0.9, -0.4}, {0.9, 0.4}, {0.4, 0.0}});
      add(ellipse_arc(-0.55, -0.08, 0.06, 0.06, 0, 6.2832, 10));
      add({{-0.15, -0.35}, {0.0, -0.5}, {0.15, -0.33}}, false);  // top fin
      p.fills.push_back(ellipse_arc(-0.15, 0.0, 0.6, 0.35));
      p.fills.push_back({{0.4, 0.0}, {0.9, -0.4}, {0.9, 0.4}});
      p.base_color = {0.9f, 0.55f, 0.2f};
      break;
    }
    case 4: {  // tree
      p.name = "tree";
      add(rect(-0.1, 0.25, 0.1, 0.9));
      add(ellipse_arc(0.0, -0.25, 0.55, 0.55));
      add({{-0.3, -0.25}, {0.1, -0.05}}, false);  // branch hint
      p.fills.push_back(rect(-0.1, 0.25, 0.1, 0.9));
      p.fills.push_back(ellipse_arc(0.0, -0.25, 0.55, 0.55));
      p.base_color = {0.2f, 0.6f, 0.25f};
      break;
    }
    case 5: {  // star
      p.name = "star";
      Poly s;
      for (int i = 0; i <= 10; ++i) {
        const double r = (i % 2 == 0) ? 0.9 : 0.38;
        const double a = -1.5707 + i * 0.6283;
        s.push_back({r * std::cos(a), r * std::sin(a)});
      }
      add(s);
      p.fills.push_back(s);
      p.base_color = {0.9f, 0.85f, 0.2f};
      break;
    }
    case 6: {  // arrow
      p.name = "arrow";
      add(rect(-0.9, -0.12, 0.3, 0.12));
      add({{0.3, -0.45}, {0.9, 0.0}, {0.3, 0.45}, {0.3, -0.45}});
      add({{-0.9, 0.0}, {0.3, 0.0}}, false);  // shaft center line
      p.fills.push_back(rect(-0.9, -0.12, 0.3, 0.12));
      p.fills.push_back({{0.3, -0.45}, {0.9, 0.0}, {0.3, 0.45}});
      p.base_color = {0.6f, 0.25f, 0.7f};
      break;
    }
    default: {  // bird
      p.name = "bird";
      add(ellipse_arc(-0.1, 0.15, 0.5, 0.32));
      add(ellipse_arc(0.45, -0.3, 0.22, 0.22));
      add({{0.64, -0.35}, {0.9, -0.28}, {0.64, -0.2}, {0.64, -0.35}});
      add({{-0.35, 0.1}, {0.05, 0.3}, {0.25, 0.05}}, false);  // wing
      add({{-0.6, 0.25}, {-0.95, 0.05}}, false);              // tail
      p.fills.push_back(ellipse_arc(-0.1, 0.15, 0.5, 0.32));
      p.fills.push_back(ellipse_arc(0.45, -0.3, 0.22, 0.22));
      p.fills.push_back({{0.64, -0.35}, {0.9, -0.28}, {0.64, -0.2}});
      p.base_color = {0.35f, 0.6f, 0.75f};
      break;
    }
  }
  // center the program on its stroke centroid so the recorded pose position
  // coincides with the rendered stroke centroid
  double sx = 0, sy = 0;
  long n = 0;
  for (const auto& s : p.strokes)
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      // sample segment midpoints weighted by length
      const double len = std::hypot(s[i + 1].x - s[i].x, s[i + 1].y - s[i].y);
      const int steps = std::max(1, int(len * 20));
      for (int t = 0; t < steps; ++t) {
        const double u = (t + 0.5) / steps;
        sx += s[i].x + u * (s[i + 1].x - s[i].x);
        sy += s[i].y + u * (s[i + 1].y - s[i].y);
        ++n;
      }
    }
  sx /= n;
  sy /= n;
  for (auto& s : p.strokes)
    for (auto& v : s) {
      v.x -= sx;
      v.y -= sy;
    }
  for (auto& f : p.fills)
    for (auto& v : f) {
      v.x -= sx;
      v.y -= sy;
    }
  return p;
}

}  // namespace detail

inline int num_builtin_classes() { return 8; }

inline const StrokeProgram& class_program(int cls) {
  static std::vector<StrokeProgram> programs = [] {
    std::vector<StrokeProgram> v;
    for (int i = 0; i < num_builtin_classes(); ++i)
      v.push_back(detail::make_class_program(i));
    return v;
  }();
  return programs.at(cls);
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

struct Pose {
  double x = 0, y = 0;    // pixels
  double scale = 1;       // pixels per canonical unit
  double rot = 0;         // radians
};

struct SketchSample {
  int sample_id = 0;
  int label = 0;
  Pose pose;
  Img image;                 // RGB, [0,1]
  std::vector<Img> sketches; // single channel, strokes ~1 on background 0
};

struct SynthConfig {
  std::uint64_t seed = 1;
  int num_classes = 8;
  int images_per_class = 24;
  int sketches_per_image = 5;
  int size = 32;
};

namespace detail {

// low-frequency noise: bilinear interpolation of a random coarse grid
inline std::vector<float> coarse_noise(int h, int w, int grid, Rng& rng) {
  std::vector<float> g((grid + 1) * (grid + 1));
  for (auto& v : g) v = float(rng.uniform(-1, 1));
  std::vector<float> out(size_t(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gy = double(y) / h * grid, gx = double(x) / w * grid;
      const int iy = int(gy), ix = int(gx);
      const double ty = gy - iy, tx = gx - ix;
      auto at = [&](int yy, int xx) { return g[yy * (grid + 1) + xx]; };
      out[size_t(y) * w + x] =
          float((1 - ty) * ((1 - tx) * at(iy, ix) + tx * at(iy, ix + 1)) +
                ty * ((1 - tx) * at(iy + 1, ix) + tx * at(iy + 1, ix + 1)));
    }
  return out;
}

inline Affine pose_transform(const Pose& p) {
  return Affine::rotate(p.rot)
      .then(Affine::scale(p.scale, p.scale))
      .then(Affine::translate(p.x, p.y));
}

}  // namespace detail

inline Img render_scene(const StrokeProgram& prog, const Pose& pose, int size,
                        Rng& rng) {
  Img img(3, size, size);
  // layered background: base tone, low-frequency shading per channel
  const float base[3] = {float(rng.uniform(0.25, 0.75)),
                         float(rng.uniform(0.25, 0.75)),
                         float(rng.uniform(0.25, 0.75))};
  for (int ch = 0; ch < 3; ++ch) {
    auto noise = detail::coarse_noise(size, size, 3, rng);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        img.at(ch, y, x) =
            std::clamp(base[ch] + 0.18f * noise[size_t(y) * size + x], 0.f, 1.f);
  }
  // distractor blobs behind the object
  const int nblobs = 2 + int(rng.uniform_int(3));
  for (int i = 0; i < nblobs; ++i) {
    const std::array<float, 3> col = {float(rng.uniform(0.1, 0.9)),
                                      float(rng.uniform(0.1, 0.9)),
                                      float(rng.uniform(0.1, 0.9))};
    const Poly blob = ellipse_arc(rng.uniform(0, size), rng.uniform(0, size),
                                  rng.uniform(0.06, 0.22) * size,
                                  rng.uniform(0.06, 0.22) * size, 0, 6.2832,
                                  16);
    fill_polygon(img, blob, Affine{}, col, 0.8f);
  }
  // object silhouette with tint jitter and light texture
  const Affine xf = detail::pose_transform(pose);
  std::array<float, 3> tint = prog.base_color;
  for (auto& t : tint)
    t = std::clamp(t + float(rng.uniform(-0.15, 0.15)), 0.05f, 0.95f);
  for (const auto& f : prog.fills) fill_polygon(img, f, xf, tint, 1.0f);
  auto tex = detail::coarse_noise(size, size, 4, rng);
  // darker silhouette outline so object boundaries survive the clutter
  Img edge(1, size, size);
  for (const auto& f : prog.fills) {
    Poly closed = f;
    closed.push_back(f.front());
    draw_polyline(edge, closed, xf, 1.0);
  }
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const float e = edge.at(0, y, x);
      for (int ch = 0; ch < 3; ++ch) {
        float& v = img.at(ch, y, x);
        v = std::clamp(v * (1.0f + 0.08f * tex[size_t(y) * size + x]), 0.f,
                       1.f);
        v *= (1.0f - 0.6f * e);
      }
    }
  return img;
}

inline Img render_sketch(const StrokeProgram& prog, const Pose& pose, int size,
                         Rng& rng) {
  Img canvas(1, size, size);
  const double abstraction = rng.uniform(0.0, 1.0);
  const double noise_sigma = 0.01 + 0.05 * abstraction;  // canonical units
  const double thickness = 1.0 + rng.uniform(0.0, 0.6);
  const Affine xf = detail::pose_transform(pose);
  for (std::size_t s = 0; s < prog.strokes.size(); ++s) {
    if (!prog.essential[s] && rng.coin(0.25 * abstraction + 0.05)) continue;
    Poly jittered = prog.strokes[s];
    // smooth per-stroke drift plus pointwise wobble
    const double ox = rng.normal(0, noise_sigma);
    const double oy = rng.normal(0, noise_sigma);
    for (auto& v : jittered) {
      v.x += ox + rng.normal(0, noise_sigma * 0.6);
      v.y += oy + rng.normal(0, noise_sigma * 0.6);
    }
    draw_polyline(canvas, jittered, xf, thickness);
  }
  return canvas;
}

inline std::vector<SketchSample> generate_dataset(const SynthConfig& cfg) {
  if (cfg.num_classes < 1 || cfg.num_classes > num_builtin_classes())
    throw std::invalid_argument("generate_dataset: num_classes must be in [1," +
                                std::to_string(num_builtin_classes()) + "]");
  if (cfg.images_per_class < 1 || cfg.sketches_per_image < 1)
    throw std::invalid_argument("generate_dataset: counts must be positive");
  std::vector<SketchSample> out(size_t(cfg.num_classes) * cfg.images_per_class);
  for (int cls = 0; cls < cfg.num_classes; ++cls)
    for (int i = 0; i < cfg.images_per_class; ++i) {
      const int id = cls * cfg.images_per_class + i;
      // every sample owns its RNG stream: parallel generation by sample id
      // agrees bitwise with serial generation
      Rng rng(derive_stream(cfg.seed, std::uint64_t(id), 0x5A));
      SketchSample s;
      s.sample_id = id;
      s.label = cls;
      const double margin = 0.30 * cfg.size;
      s.pose.x = rng.uniform(margin, cfg.size - margin);
      s.pose.y = rng.uniform(margin, cfg.size - margin);
      s.pose.scale = rng.uniform(0.30, 0.42) * cfg.size * 0.5;
      s.pose.rot = rng.uniform(-0.26, 0.26);  // +-15 degrees
      const auto& prog = class_program(cls);
      s.image = render_scene(prog, s.pose, cfg.size, rng);
      for (int k = 0; k < cfg.sketches_per_image; ++k)
        s.sketches.push_back(render_sketch(prog, s.pose, cfg.size, rng));
      out[id] = std::move(s);
    }
  return out;
}

// intensity-weighted stroke centroid, the oracle for pose recording
inline Vec2 stroke_centroid(const Img& sketch) {
  double sx = 0, sy = 0, m = 0;
  for (int y = 0; y < sketch.h; ++y)
    for (int x = 0; x < sketch.w; ++x) {
      const double v = sketch.at(0, y, x);
      sx += v * x;
      sy += v * y;
      m += v;
    }
  return m > 0 ? Vec2{sx / m, sy / m} : Vec2{};
}

// ---------------------------------------------------------------------------
// Split
// ---------------------------------------------------------------------------

struct DatasetSplit {
  std::vector<int> train_ids, test_ids;
};

inline DatasetSplit split_dataset(const std::vector<SketchSample>& samples,
                                  double ratio, std::uint64_t seed) {
  if (ratio <= 0.0 || ratio >= 1.0)
    throw std::invalid_argument("split_dataset: ratio must be in (0,1)");
  std::map<int, std::vector<int>> by_class;
  for (const auto& s : samples) by_class[s.label].push_back(s.sample_id);
  DatasetSplit split;
  Rng rng(derive_stream(seed, 0x51137));
  for (auto& [cls, ids] : by_class) {
    if (ids.size() < 2)
      throw std::invalid_argument("split_dataset: class " +
                                  std::to_string(cls) +
                                  " has fewer than 2 images");
    shuffle(ids, rng);
    std::size_t n_train = std::size_t(std::lround(ratio * double(ids.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, ids.size() - 1);
    for (std::size_t i = 0; i < ids.size(); ++i)
      (i < n_train ? split.train_ids : split.test_ids).push_back(ids[i]);
  }
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

struct AugmentSpec {
  // sketch regime
  bool hflip = true;
  double rot_deg = 10.0;
  double translate_frac = 18.0 / 224.0;  // of image width, per the protocol
  double scale_frac = 0.10;
  double shear_deg = 10.0;
  // image regime
  double color_jitter = 0.10;
};

inline Img hflip_img(const Img& img) {
  Img out(img.c, img.h, img.w);
  for (int ch = 0; ch < img.c; ++ch)
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x)
        out.at(ch, y, x) = img.at(ch, y, img.w - 1 - x);
  return out;
}

namespace detail {

inline Img warp_bilinear(const Img& src, const Affine& fwd) {
  const Affine inv = fwd.inverse();
  Img out(src.c, src.h, src.w);
  for (int y = 0; y < src.h; ++y)
    for (int x = 0; x < src.w; ++x) {
      const Vec2 p = inv({double(x), double(y)});
      const int x0 = int(std::floor(p.x)), y0 = int(std::floor(p.y));
      const double tx = p.x - x0, ty = p.y - y0;
      for (int ch = 0; ch < src.c; ++ch) {
        auto sample = [&](int yy, int xx) -> double {
          if (xx < 0 || xx >= src.w || yy < 0 || yy >= src.h) return 0.0;
          return src.at(ch, yy, xx);
        };
        out.at(ch, y, x) = float(
            (1 - ty) * ((1 - tx) * sample(y0, x0) + tx * sample(y0, x0 + 1)) +
            ty * ((1 - tx) * sample(y0 + 1, x0) + tx * sample(y0 + 1, x0 + 1)));
      }
    }
  return out;
}

}  // namespace detail

inline Img augment_sketch(const Img& sketch, const AugmentSpec& spec,
                          Rng& rng) {
  if (sketch.c != 1)
    throw std::invalid_argument("augment_sketch: expected single channel");
  const double deg = 3.14159265358979 / 180.0;
  const bool flip = spec.hflip && rng.coin();
  const double rot = rng.uniform(-spec.rot_deg, spec.rot_deg) * deg;
  const double txr = spec.translate_frac * sketch.w;
  const double tx = rng.uniform(-txr, txr);
  const double ty = rng.uniform(-txr, txr);
  const double sc = 1.0 + rng.uniform(-spec.scale_frac, spec.scale_frac);
  const double sh = std::tan(rng.uniform(-spec.shear_deg, spec.shear_deg) * deg);
  const double cx = (sketch.w - 1) * 0.5, cy = (sketch.h - 1) * 0.5;
  Affine xf = Affine::translate(-cx, -cy);
  if (flip) xf = xf.then(Affine::scale(-1, 1));
  xf = xf.then(Affine::shear_x(sh))
           .then(Affine::scale(sc, sc))
           .then(Affine::rotate(rot))
           .then(Affine::translate(cx + tx, cy + ty));
  return detail::warp_bilinear(sketch, xf);
}

// Color jitter. When `flipped` is non-null a horizontal-flip coin is drawn
// and reported so the caller can mirror the target sketch with the same coin.
inline Img augment_image(const Img& image, const AugmentSpec& spec, Rng& rng,
                         bool* flipped = nullptr) {
  if (image.c != 3)
    throw std::invalid_argument("augment_image: expected RGB input");
  Img out = image;
  if (flipped) {
    *flipped = rng.coin();
    if (*flipped) out = hflip_img(out);
  }
  const double jb = rng.uniform(1.0 - spec.color_jitter, 1.0 + spec.color_jitter);
  const double jc = rng.uniform(1.0 - spec.color_jitter, 1.0 + spec.color_jitter);
  const double js = rng.uniform(1.0 - spec.color_jitter, 1.0 + spec.color_jitter);
  // brightness
  for (auto& v : out.v) v = float(v * jb);
  // contrast: blend with the per-image mean
  double mean = 0;
  for (float v : out.v) mean += v;
  mean /= double(out.v.size());
  for (auto& v : out.v) v = float(mean + jc * (v - mean));
  // saturation: blend with the per-pixel grayscale
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      const float grey = 0.299f * out.at(0, y, x) + 0.587f * out.at(1, y, x) +
                         0.114f * out.at(2, y, x);
      for (int ch = 0; ch < 3; ++ch) {
        float& v = out.at(ch, y, x);
        v = float(grey + js * (v - grey));
      }
    }
  for (auto& v : out.v) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

}  // namespace sketchgen
