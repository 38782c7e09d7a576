#include "strokeless/dataset.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <set>

#include "strokeless/batch.hpp"
#include "strokeless/png_io.hpp"

namespace strokeless {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;

using Polyline = std::vector<std::array<float, 2>>;

struct Glyph {
  float width;  // relative to height
  std::vector<Polyline> strokes;
};

Polyline arc(float cx, float cy, float rx, float ry, float deg0, float deg1, int steps = 16) {
  Polyline p;
  constexpr float kPi = 3.14159265358979f;
  for (int i = 0; i <= steps; ++i) {
    const float a = (deg0 + (deg1 - deg0) * static_cast<float>(i) / steps) * kPi / 180.0f;
    p.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
  return p;
}

const std::map<char, Glyph>& glyph_table() {
  static const std::map<char, Glyph> table = {
      {'A', {0.7f, {{{0, 1}, {0.5f, 0}, {1, 1}}, {{0.25f, 0.6f}, {0.75f, 0.6f}}}}},
      {'E', {0.6f, {{{1, 0}, {0, 0}, {0, 1}, {1, 1}}, {{0, 0.5f}, {0.8f, 0.5f}}}}},
      {'F', {0.6f, {{{1, 0}, {0, 0}, {0, 1}}, {{0, 0.5f}, {0.8f, 0.5f}}}}},
      {'H', {0.6f, {{{0, 0}, {0, 1}}, {{1, 0}, {1, 1}}, {{0, 0.5f}, {1, 0.5f}}}}},
      {'I', {0.4f, {{{0.5f, 0}, {0.5f, 1}}, {{0, 0}, {1, 0}}, {{0, 1}, {1, 1}}}}},
      {'K', {0.6f, {{{0, 0}, {0, 1}}, {{1, 0}, {0, 0.6f}}, {{0.3f, 0.4f}, {1, 1}}}}},
      {'L', {0.55f, {{{0, 0}, {0, 1}, {1, 1}}}}},
      {'M', {0.8f, {{{0, 1}, {0, 0}, {0.5f, 0.6f}, {1, 0}, {1, 1}}}}},
      {'N', {0.65f, {{{0, 1}, {0, 0}, {1, 1}, {1, 0}}}}},
      {'O', {0.7f, {arc(0.5f, 0.5f, 0.5f, 0.5f, 0, 360, 24)}}},
      {'C', {0.6f, {arc(0.6f, 0.5f, 0.6f, 0.5f, 50, 310, 20)}}},
      {'T', {0.6f, {{{0, 0}, {1, 0}}, {{0.5f, 0}, {0.5f, 1}}}}},
      {'U', {0.6f, {{{0, 0}, {0, 0.6f}}, arc(0.5f, 0.6f, 0.5f, 0.4f, 180, 0, 12),
                    {{1, 0.6f}, {1, 0}}}}},
      {'V', {0.65f, {{{0, 0}, {0.5f, 1}, {1, 0}}}}},
      {'W', {0.9f, {{{0, 0}, {0.25f, 1}, {0.5f, 0.4f}, {0.75f, 1}, {1, 0}}}}},
      {'X', {0.65f, {{{0, 0}, {1, 1}}, {{1, 0}, {0, 1}}}}},
      {'Y', {0.65f, {{{0, 0}, {0.5f, 0.5f}, {1, 0}}, {{0.5f, 0.5f}, {0.5f, 1}}}}},
      {'Z', {0.6f, {{{0, 0}, {1, 0}, {0, 1}, {1, 1}}}}},
      {'S', {0.6f, {{{1, 0.1f}, {0.7f, 0}, {0.3f, 0}, {0, 0.2f}, {0.1f, 0.45f}, {0.9f, 0.55f},
                     {1, 0.8f}, {0.7f, 1}, {0.3f, 1}, {0, 0.9f}}}}},
      {'0', {0.6f, {arc(0.5f, 0.5f, 0.5f, 0.5f, 0, 360, 24), {{0.2f, 0.8f}, {0.8f, 0.2f}}}}},
      {'1', {0.45f, {{{0.1f, 0.25f}, {0.6f, 0}, {0.6f, 1}}}}},
      {'4', {0.6f, {{{0.75f, 1}, {0.75f, 0}, {0, 0.7f}, {1, 0.7f}}}}},
      {'7', {0.6f, {{{0, 0}, {1, 0}, {0.35f, 1}}}}},
  };
  return table;
}

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double qx = ax + t * dx - px, qy = ay + t * dy - py;
  return std::sqrt(qx * qx + qy * qy);
}

// Marks stamped pixels for a glyph whose box has top-left (x0, y0).
void stamp_glyph(const Glyph& g, double x0, double y0, double height, double radius,
                 std::vector<uint8_t>& hits, int size) {
  const double width = g.width * height;
  auto map_x = [&](float u) { return x0 + radius + u * (width - 2 * radius); };
  auto map_y = [&](float v) { return y0 + radius + v * (height - 2 * radius); };
  for (const Polyline& line : g.strokes) {
    for (size_t i = 0; i + 1 < line.size(); ++i) {
      const double ax = map_x(line[i][0]), ay = map_y(line[i][1]);
      const double bx = map_x(line[i + 1][0]), by = map_y(line[i + 1][1]);
      const int xmin = std::max(0, static_cast<int>(std::floor(std::min(ax, bx) - radius)) - 1);
      const int xmax = std::min(size - 1, static_cast<int>(std::ceil(std::max(ax, bx) + radius)));
      const int ymin = std::max(0, static_cast<int>(std::floor(std::min(ay, by) - radius)) - 1);
      const int ymax = std::min(size - 1, static_cast<int>(std::ceil(std::max(ay, by) + radius)));
      for (int y = ymin; y <= ymax; ++y)
        for (int x = xmin; x <= xmax; ++x)
          if (segment_distance(x + 0.5, y + 0.5, ax, ay, bx, by) <= radius)
            hits[static_cast<size_t>(y) * size + x] = 1;
    }
  }
}

struct Box {
  double x0, y0, x1, y1;
  bool overlaps(const Box& o) const {
    return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
  }
};

std::vector<uint8_t> make_background(int size, std::mt19937_64& rng,
                                     const std::vector<std::array<uint8_t, 3>>& palette) {
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::array<double, 3> c1{}, c2{};
  if (!palette.empty()) {
    std::uniform_int_distribution<size_t> pick(0, palette.size() - 1);
    const auto a = palette[pick(rng)], b = palette[pick(rng)];
    for (int c = 0; c < 3; ++c) {
      c1[c] = a[c];
      c2[c] = b[c];
    }
  } else {
    for (int c = 0; c < 3; ++c) {
      c1[c] = byte(rng);
      c2[c] = byte(rng);
    }
  }
  const double theta = unit(rng) * 2.0 * 3.14159265358979;
  const double ct = std::cos(theta), st = std::sin(theta);
  constexpr int kGrid = 5;
  constexpr double kNoise = 24.0;
  std::array<std::array<double, kGrid * kGrid>, 3> grid{};
  for (auto& g : grid)
    for (auto& v : g) v = (unit(rng) * 2.0 - 1.0) * kNoise;

  std::vector<uint8_t> rgb(static_cast<size_t>(size) * size * 3);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double cx = (x + 0.5) / size - 0.5, cy = (y + 0.5) / size - 0.5;
      const double t = std::clamp((cx * ct + cy * st) / 0.7 + 0.5, 0.0, 1.0);
      const double gx = (x + 0.5) / size * (kGrid - 1), gy = (y + 0.5) / size * (kGrid - 1);
      const int ix = std::min(static_cast<int>(gx), kGrid - 2);
      const int iy = std::min(static_cast<int>(gy), kGrid - 2);
      const double fx = gx - ix, fy = gy - iy;
      for (int c = 0; c < 3; ++c) {
        const auto& g = grid[static_cast<size_t>(c)];
        const double n = (1 - fx) * (1 - fy) * g[iy * kGrid + ix] + fx * (1 - fy) * g[iy * kGrid + ix + 1] +
                         (1 - fx) * fy * g[(iy + 1) * kGrid + ix] + fx * fy * g[(iy + 1) * kGrid + ix + 1];
        const double v = c1[c] * (1 - t) + c2[c] * t + n;
        rgb[(static_cast<size_t>(y) * size + x) * 3 + c] =
            static_cast<uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
      }
    }
  }
  return rgb;
}

ImageTensor image_from_rgb(const std::vector<uint8_t>& rgb, int size) {
  const size_t plane = static_cast<size_t>(size) * size;
  std::vector<float> planar(plane * 3);
  for (size_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c) planar[c * plane + i] = byte_to_unit(rgb[i * 3 + c]);
  return ImageTensor::from_planar(size, size, std::move(planar));
}

json polygons_to_json(const std::vector<Polygon>& polygons) {
  json arr = json::array();
  for (const auto& p : polygons) {
    json poly = json::array();
    for (const auto& v : p.vertices) poly.push_back({v.x, v.y});
    arr.push_back(poly);
  }
  return arr;
}

std::vector<Polygon> polygons_from_json(const json& j) {
  if (!j.is_array()) throw InvalidArgument("polygons JSON must be an array");
  auto parse_one = [](const json& poly) {
    Polygon p;
    if (!poly.is_array()) throw InvalidArgument("polygon must be an array of [x, y] points");
    for (const auto& pt : poly) {
      if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
        throw InvalidArgument("polygon vertex must be [x, y]");
      }
      p.vertices.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    return p;
  };
  std::vector<Polygon> out;
  if (j.empty()) return out;
  // A single polygon is a list of numeric pairs.
  if (j[0].is_array() && !j[0].empty() && j[0][0].is_number()) {
    out.push_back(parse_one(j));
    return out;
  }
  for (const auto& poly : j) out.push_back(parse_one(poly));
  return out;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::set<std::string> stems_in(const fs::path& dir, const std::string& ext) {
  std::set<std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) out.insert(e.path().stem().string());
  }
  return out;
}

float bilinear(const ImageTensor& img, int c, double y, double x) {
  y = std::clamp(y, 0.0, img.height() - 1.0);
  x = std::clamp(x, 0.0, img.width() - 1.0);
  const int y0 = static_cast<int>(y), x0 = static_cast<int>(x);
  const int y1 = std::min(y0 + 1, img.height() - 1), x1 = std::min(x0 + 1, img.width() - 1);
  const double fy = y - y0, fx = x - x0;
  const double v = (1 - fy) * ((1 - fx) * img.at(c, y0, x0) + fx * img.at(c, y0, x1)) +
                   fy * ((1 - fx) * img.at(c, y1, x0) + fx * img.at(c, y1, x1));
  return std::clamp(static_cast<float>(v), -1.0f, 1.0f);
}

ImageTensor resize_image(const ImageTensor& img, int h, int w) {
  if (img.height() == h && img.width() == w) return img;
  ImageTensor out(h, w);
  const double sy = static_cast<double>(img.height()) / h, sx = static_cast<double>(img.width()) / w;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out.at(c, y, x) = bilinear(img, c, (y + 0.5) * sy - 0.5, (x + 0.5) * sx - 0.5);
  return out;
}

template <PlaneKind K>
Plane<K> resize_nearest(const Plane<K>& p, int h, int w) {
  if (p.height() == h && p.width() == w) return p;
  Plane<K> out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int sy = std::min(p.height() - 1, static_cast<int>((y + 0.5) * p.height() / h));
      const int sx = std::min(p.width() - 1, static_cast<int>((x + 0.5) * p.width() / w));
      out.at(y, x) = p.at(sy, sx);
    }
  return out;
}

}  // namespace

const std::string& synth_glyphs() {
  static const std::string glyphs = [] {
    std::string s;
    for (const auto& [c, g] : glyph_table()) s.push_back(c);
    return s;
  }();
  return glyphs;
}

void SynthSpec::validate() const {
  if (count < 1) throw InvalidArgument("SynthSpec: count must be >= 1");
  if (size < 64 || size % 64 != 0) throw InvalidArgument("SynthSpec: size must be a multiple of 64");
  if (glyphs.empty()) throw InvalidArgument("SynthSpec: empty glyph set");
  for (char c : glyphs) {
    if (!glyph_table().count(c)) {
      throw InvalidArgument(std::string("SynthSpec: unsupported glyph '") + c + "'");
    }
  }
  if (min_font_px < 0 || max_font_px < 0 || (max_font_px && max_font_px < min_font_px)) {
    throw InvalidArgument("SynthSpec: bad font size range");
  }
  if (!(stroke_ratio > 0.0 && stroke_ratio <= 0.5)) {
    throw InvalidArgument("SynthSpec: stroke_ratio must be in (0, 0.5]");
  }
  if (min_strings < 1 || max_strings < min_strings) {
    throw InvalidArgument("SynthSpec: bad string count range");
  }
  if (min_contrast < 1 || min_contrast > 127) {
    throw InvalidArgument("SynthSpec: min_contrast must be in [1, 127]");
  }
}

Dataset synth_generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const int size = spec.size;
  const int font_lo = spec.min_font_px ? spec.min_font_px : std::max(8, size / 8);
  const int font_hi = spec.max_font_px ? spec.max_font_px : std::max(font_lo, size / 4);
  std::uniform_int_distribution<int> font_dist(font_lo, font_hi);
  std::uniform_int_distribution<int> strings_dist(spec.min_strings, spec.max_strings);
  std::uniform_int_distribution<int> glyph_count(2, 6);
  std::uniform_int_distribution<size_t> glyph_pick(0, spec.glyphs.size() - 1);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Dataset ds;
  ds.seed = spec.seed;
  for (int n = 0; n < spec.count; ++n) {
    const std::vector<uint8_t> clean = make_background(size, rng, spec.palette);
    std::vector<uint8_t> text = clean;
    std::vector<uint8_t> hits_all(static_cast<size_t>(size) * size, 0);
    std::vector<Box> boxes;
    std::vector<Polygon> polygons;

    const int strings = strings_dist(rng);
    for (int s = 0; s < strings; ++s) {
      for (int attempt = 0; attempt < 20; ++attempt) {
        const double height = font_dist(rng);
        const double radius = std::max(0.75, 0.5 * spec.stroke_ratio * height);
        const double spacing = 0.25 * height;
        const double margin = std::ceil(radius) + 2.0;
        std::vector<char> chars;
        double width = 0;
        const int wanted = glyph_count(rng);
        for (int k = 0; k < wanted; ++k) {
          const char c = spec.glyphs[glyph_pick(rng)];
          const double gw = glyph_table().at(c).width * height;
          const double next = width + (chars.empty() ? 0 : spacing) + gw;
          if (next > size - 2 * margin - 2) break;
          width = next;
          chars.push_back(c);
        }
        if (chars.empty()) continue;
        const double x0 = margin + 1 + unit(rng) * (size - 2 * margin - 2 - width);
        const double y0 = margin + 1 + unit(rng) * (size - 2 * margin - 2 - height);
        const Box box{std::floor(x0 - margin), std::floor(y0 - margin),
                      std::ceil(x0 + width + margin), std::ceil(y0 + height + margin)};
        if (std::any_of(boxes.begin(), boxes.end(), [&](const Box& b) { return b.overlaps(box); })) {
          continue;
        }
        std::vector<uint8_t> hits(static_cast<size_t>(size) * size, 0);
        double pen = x0;
        for (char c : chars) {
          const Glyph& g = glyph_table().at(c);
          stamp_glyph(g, pen, y0, height, radius, hits, size);
          pen += g.width * height + spacing;
        }
        std::array<int, 3> color{byte(rng), byte(rng), byte(rng)};
        for (size_t i = 0; i < hits.size(); ++i) {
          if (!hits[i]) continue;
          hits_all[i] = 1;
          std::array<int, 3> px = color;
          int contrast = 0;
          for (int c = 0; c < 3; ++c) contrast = std::max(contrast, std::abs(px[c] - clean[i * 3 + c]));
          if (contrast < spec.min_contrast) {
            for (int c = 0; c < 3; ++c) {
              const int bg = clean[i * 3 + c];
              px[c] = bg >= 128 ? bg - spec.min_contrast : bg + spec.min_contrast;
            }
          }
          for (int c = 0; c < 3; ++c) text[i * 3 + c] = static_cast<uint8_t>(px[c]);
        }
        boxes.push_back(box);
        polygons.push_back(
            Polygon{{{box.x0, box.y0}, {box.x1, box.y0}, {box.x1, box.y1}, {box.x0, box.y1}}});
        break;
      }
    }

    Sample sample;
    sample.id = "synth_" + std::to_string(100000 + n).substr(1);
    sample.clean = image_from_rgb(clean, size);
    sample.image = image_from_rgb(text, size);
    sample.region = rasterize_polygons(polygons, size, size);
    sample.strokes = GtStrokeMask(size, size, 0.0f);
    for (size_t i = 0; i < hits_all.size(); ++i) {
      if (hits_all[i]) sample.strokes[static_cast<int64_t>(i)] = 1.0f;
    }
    sample.polygons = std::move(polygons);
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

void write_dataset(const fs::path& dir, const Dataset& dataset) {
  json manifest;
  manifest["version"] = kManifestVersion;
  manifest["tau"] = dataset.tau;
  manifest["seed"] = dataset.seed;
  manifest["samples"] = json::array();
  for (const auto& s : dataset.samples) {
    save_image_png(dir / "text" / (s.id + ".png"), s.image);
    save_image_png(dir / "clean" / (s.id + ".png"), s.clean);
    save_mask_png(dir / "region_masks" / (s.id + ".png"), s.region);
    save_mask_png(dir / "stroke_masks" / (s.id + ".png"), s.strokes);
    write_json(dir / "polygons" / (s.id + ".json"), polygons_to_json(s.polygons));
    manifest["samples"].push_back({{"id", s.id}, {"split", s.split}});
  }
  write_json(dir / "manifest.json", manifest);
}

Dataset load_dataset(const fs::path& dir, const std::optional<std::string>& split) {
  const json manifest = read_json(dir / "manifest.json");
  if (!manifest.contains("version") || manifest["version"].get<int>() != kManifestVersion) {
    throw DataError((dir / "manifest.json").string() + ": unsupported manifest version");
  }
  Dataset ds;
  ds.tau = manifest.value("tau", kDefaultStrokeTau);
  ds.seed = manifest.value("seed", uint64_t{0});
  for (const auto& entry : manifest.at("samples")) {
    const std::string id = entry.at("id").get<std::string>();
    const std::string sample_split = entry.value("split", std::string("train"));
    if (split && *split != sample_split) continue;
    try {
      Sample s;
      s.id = id;
      s.split = sample_split;
      s.image = load_image_png(dir / "text" / (id + ".png"));
      s.clean = load_image_png(dir / "clean" / (id + ".png"));
      s.region = load_mask_png<PlaneKind::kRegion>(dir / "region_masks" / (id + ".png"));
      s.strokes = load_mask_png<PlaneKind::kGtStroke>(dir / "stroke_masks" / (id + ".png"));
      const fs::path poly = dir / "polygons" / (id + ".json");
      if (fs::exists(poly)) s.polygons = polygons_from_json(read_json(poly));
      const int h = s.image.height(), w = s.image.width();
      if (s.clean.height() != h || s.clean.width() != w || s.region.height() != h ||
          s.region.width() != w || s.strokes.height() != h || s.strokes.width() != w) {
        throw DataError("component sizes disagree");
      }
      ds.samples.push_back(std::move(s));
    } catch (const std::exception& e) {
      throw DataError("sample '" + id + "': " + e.what());
    }
  }
  return ds;
}

BuildReport build_from_pairs(const fs::path& pairs_dir, float tau) {
  if (!(tau > 0.0f && tau < 1.0f)) throw InvalidArgument("tau must be in (0, 1)");
  const auto text = stems_in(pairs_dir / "text", ".png");
  const auto clean = stems_in(pairs_dir / "clean", ".png");
  const auto masks = stems_in(pairs_dir / "region_masks", ".png");
  const auto polys = stems_in(pairs_dir / "polygons", ".json");

  std::vector<std::string> orphans;
  std::set<std::string> all(text);
  all.insert(clean.begin(), clean.end());
  all.insert(masks.begin(), masks.end());
  for (const auto& id : all) {
    std::vector<std::string> missing;
    if (!text.count(id)) missing.push_back("text/");
    if (!clean.count(id)) missing.push_back("clean/");
    if (!masks.count(id) && !polys.count(id)) missing.push_back("region_masks/");
    if (!missing.empty()) {
      std::string line = id + " (missing";
      for (const auto& m : missing) line += " " + m;
      orphans.push_back(line + ")");
    }
  }
  if (!orphans.empty()) {
    std::string msg = "unpaired files in " + pairs_dir.string() + ":";
    for (const auto& o : orphans) msg += "\n  " + o;
    throw DataError(msg);
  }
  if (all.empty()) throw DataError("no samples found under " + pairs_dir.string());

  std::map<std::string, std::string> existing_split;
  if (fs::exists(pairs_dir / "manifest.json")) {
    const json old = read_json(pairs_dir / "manifest.json");
    for (const auto& e : old.value("samples", json::array())) {
      existing_split[e.at("id").get<std::string>()] = e.value("split", std::string("train"));
    }
  }

  BuildReport report;
  report.dataset.tau = tau;
  for (const auto& id : all) {
    Sample s;
    s.id = id;
    const fs::path text_path = pairs_dir / "text" / (id + ".png");
    const fs::path clean_path = pairs_dir / "clean" / (id + ".png");
    s.image = load_image_png(text_path);
    s.clean = load_image_png(clean_path);
    if (s.image.height() != s.clean.height() || s.image.width() != s.clean.width()) {
      throw DataError(clean_path.string() + ": size " + std::to_string(s.clean.width()) + "x" +
                      std::to_string(s.clean.height()) + " differs from " + text_path.string());
    }
    const fs::path poly_path = pairs_dir / "polygons" / (id + ".json");
    if (fs::exists(poly_path)) s.polygons = polygons_from_json(read_json(poly_path));
    if (masks.count(id)) {
      const fs::path mask_path = pairs_dir / "region_masks" / (id + ".png");
      s.region = load_mask_png<PlaneKind::kRegion>(mask_path);
      if (s.region.height() != s.image.height() || s.region.width() != s.image.width()) {
        throw DataError(mask_path.string() + ": size differs from " + text_path.string());
      }
    } else {
      s.region = rasterize_polygons(s.polygons, s.image.height(), s.image.width());
      save_mask_png(pairs_dir / "region_masks" / (id + ".png"), s.region);
    }

    s.strokes = binarize_stroke_diff(s.image, s.clean, tau);
    int64_t clipped = 0;
    for (int64_t i = 0; i < s.strokes.pixels(); ++i) {
      if (s.strokes[i] == 1.0f && s.region[i] == 0.0f) {
        s.strokes[i] = 0.0f;
        ++clipped;
      }
    }
    const int64_t count = s.strokes.count_nonzero();
    report.stroke_pixels[id] = count;
    report.clipped_pixels[id] = clipped;
    if (clipped) {
      report.warnings.push_back(id + ": clipped " + std::to_string(clipped) +
                                " stroke pixels outside the region mask");
    }
    if (count == 0) report.warnings.push_back(id + ": empty stroke mask");
    save_mask_png(pairs_dir / "stroke_masks" / (id + ".png"), s.strokes);
    if (auto it = existing_split.find(id); it != existing_split.end()) s.split = it->second;
    report.dataset.samples.push_back(std::move(s));
  }
  for (const auto& w : report.warnings) spdlog::warn("{}", w);

  json manifest;
  manifest["version"] = kManifestVersion;
  manifest["tau"] = tau;
  manifest["seed"] = 0;
  manifest["samples"] = json::array();
  for (const auto& s : report.dataset.samples) {
    manifest["samples"].push_back({{"id", s.id}, {"split", s.split}});
  }
  write_json(pairs_dir / "manifest.json", manifest);
  return report;
}

void split_manifest(const fs::path& manifest_path, double train_frac, uint64_t seed) {
  if (!(train_frac >= 0.0 && train_frac <= 1.0)) {
    throw InvalidArgument("train fraction must be in [0, 1]");
  }
  json manifest = read_json(manifest_path);
  auto& samples = manifest.at("samples");
  std::vector<size_t> order(samples.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<size_t>(std::llround(train_frac * static_cast<double>(order.size())));
  for (size_t k = 0; k < order.size(); ++k) {
    samples[order[k]]["split"] = k < n_train ? "train" : "test";
  }
  manifest["split_seed"] = seed;
  manifest["train_frac"] = train_frac;
  write_json(manifest_path, manifest);
}

Sample resize_sample(const Sample& sample, int height, int width) {
  Sample out;
  out.id = sample.id;
  out.split = sample.split;
  out.image = resize_image(sample.image, height, width);
  out.clean = resize_image(sample.clean, height, width);
  out.region = resize_nearest(sample.region, height, width);
  out.strokes = resize_nearest(sample.strokes, height, width);
  const double sy = static_cast<double>(height) / sample.image.height();
  const double sx = static_cast<double>(width) / sample.image.width();
  for (const auto& p : sample.polygons) {
    Polygon q;
    for (const auto& v : p.vertices) q.vertices.push_back({v.x * sx, v.y * sy});
    out.polygons.push_back(std::move(q));
  }
  for (int64_t i = 0; i < out.strokes.pixels(); ++i) {
    if (out.region[i] == 0.0f) out.strokes[i] = 0.0f;
  }
  return out;
}

std::vector<std::vector<size_t>> plan_batches(size_t count, size_t batch_size, uint64_t seed,
                                              BatchMode mode, bool shuffle) {
  if (count == 0) throw InvalidArgument("cannot batch an empty dataset");
  if (batch_size == 0) throw InvalidArgument("batch size must be >= 1");
  std::vector<size_t> order(count);
  std::iota(order.begin(), order.end(), size_t{0});
  if (shuffle) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<std::vector<size_t>> plan;
  for (size_t start = 0; start < count; start += batch_size) {
    const size_t end = std::min(count, start + batch_size);
    if (mode == BatchMode::kTraining && end - start < batch_size) break;
    plan.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                      order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return plan;
}

template <class T>
Batch<T> collate(const Dataset& dataset, const std::vector<size_t>& indices) {
  std::vector<ImageTensor> images, cleans;
  std::vector<RegionMask> regions;
  std::vector<GtStrokeMask> strokes;
  Batch<T> b;
  for (size_t i : indices) {
    const Sample& s = dataset.samples.at(i);
    b.ids.push_back(s.id);
    images.push_back(s.image);
    cleans.push_back(s.clean);
    regions.push_back(s.region);
    strokes.push_back(s.strokes);
  }
  b.image = stack_images<T>(images);
  b.clean = stack_images<T>(cleans);
  b.region = stack_planes<T, PlaneKind::kRegion>(regions);
  b.strokes = stack_planes<T, PlaneKind::kGtStroke>(strokes);
  return b;
}

template <class T>
BatchStream<T>::BatchStream(const Dataset& dataset, size_t batch_size, uint64_t shuffle_seed,
                            BatchMode mode)
    : dataset_(&dataset), plan_(plan_batches(dataset.size(), batch_size, shuffle_seed, mode)) {}

template <class T>
std::optional<Batch<T>> BatchStream<T>::next() {
  if (cursor_ >= plan_.size()) return std::nullopt;
  return collate<T>(*dataset_, plan_[cursor_++]);
}

template Batch<float> collate<float>(const Dataset&, const std::vector<size_t>&);
template Batch<double> collate<double>(const Dataset&, const std::vector<size_t>&);
template class BatchStream<float>;
template class BatchStream<double>;

std::vector<Polygon> polygons_from_json_text(const std::string& text) {
  try {
    return polygons_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("invalid polygons JSON: ") + e.what());
  }
}

std::string polygons_to_json_text(const std::vector<Polygon>& polygons) {
  return polygons_to_json(polygons).dump();
}

}  // namespace strokeless
