#include "strokeless/image.hpp"

#include <algorithm>

namespace strokeless {
namespace {

void require_dims(int h1, int w1, int h2, int w2, const char* what) {
  if (h1 != h2 || w1 != w2) {
    throw InvalidArgument(std::string(what) + ": shape mismatch " + std::to_string(h1) + "x" +
                          std::to_string(w1) + " vs " + std::to_string(h2) + "x" +
                          std::to_string(w2));
  }
}

struct Crossing {
  double x;
  int direction;
};

}  // namespace

ImageTensor::ImageTensor(int height, int width, float fill)
    : height_(height), width_(width),
      data_(static_cast<size_t>(kChannels) * height * width, fill) {
  if (height <= 0 || width <= 0) throw InvalidArgument("image dimensions must be positive");
}

ImageTensor ImageTensor::from_planar(int height, int width, std::vector<float> data) {
  if (height <= 0 || width <= 0) throw InvalidArgument("image dimensions must be positive");
  if (data.size() != static_cast<size_t>(kChannels) * height * width) {
    throw InvalidArgument("image data size does not match 3x" + std::to_string(height) + "x" +
                          std::to_string(width));
  }
  ImageTensor img;
  img.height_ = height;
  img.width_ = width;
  img.data_ = std::move(data);
  img.validate();
  return img;
}

void ImageTensor::validate() const {
  for (float v : data_) {
    if (!std::isfinite(v) || v < -1.0f || v > 1.0f) {
      throw InvalidArgument("image value " + std::to_string(v) + " outside [-1, 1]");
    }
  }
}

WeightMatrix compute_weight_matrix(const RegionMask& m, const StrokeMask& ms, float lambda_m,
                                   float lambda_s) {
  require_dims(m.height(), m.width(), ms.height(), ms.width(), "compute_weight_matrix");
  if (lambda_m < 0 || lambda_s < 0) {
    throw InvalidArgument("compute_weight_matrix: lambdas must be non-negative");
  }
  WeightMatrix out(m.height(), m.width(), 1.0f);
  for (int64_t i = 0; i < m.pixels(); ++i) out[i] = 1.0f + lambda_m * m[i] + lambda_s * ms[i];
  return out;
}

void validate_polygon(const Polygon& polygon, int height, int width) {
  if (polygon.vertices.size() < 3) {
    throw InvalidArgument("degenerate polygon: " + std::to_string(polygon.vertices.size()) +
                          " vertices (need at least 3)");
  }
  for (const auto& p : polygon.vertices) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0 || p.y < 0 || p.x > width ||
        p.y > height) {
      throw InvalidArgument("polygon vertex (" + std::to_string(p.x) + ", " +
                            std::to_string(p.y) + ") outside image bounds " +
                            std::to_string(width) + "x" + std::to_string(height));
    }
  }
}

RegionMask rasterize_polygons(std::span<const Polygon> polygons, int height, int width) {
  if (height <= 0 || width <= 0) throw InvalidArgument("rasterize_polygons: empty canvas");
  for (const auto& poly : polygons) validate_polygon(poly, height, width);

  RegionMask mask(height, width, 0.0f);
  std::vector<Crossing> crossings;
  for (const auto& poly : polygons) {
    const auto& v = poly.vertices;
    const size_t n = v.size();
    for (int y = 0; y < height; ++y) {
      const double yc = y + 0.5;
      crossings.clear();
      for (size_t i = 0; i < n; ++i) {
        const Point& a = v[i];
        const Point& b = v[(i + 1) % n];
        // Half-open in y so shared vertices are counted once.
        if (a.y <= yc && b.y > yc) {
          crossings.push_back({a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y), +1});
        } else if (b.y <= yc && a.y > yc) {
          crossings.push_back({a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y), -1});
        }
      }
      if (crossings.empty()) continue;
      std::sort(crossings.begin(), crossings.end(),
                [](const Crossing& l, const Crossing& r) { return l.x < r.x; });
      int winding = 0;
      for (size_t i = 0; i + 1 < crossings.size(); ++i) {
        winding += crossings[i].direction;
        if (winding == 0) continue;
        // Centers c with x_i <= c < x_{i+1}.
        const double x0 = crossings[i].x, x1 = crossings[i + 1].x;
        const int first = std::max(0, static_cast<int>(std::ceil(x0 - 0.5)));
        const int last = std::min(width - 1, static_cast<int>(std::ceil(x1 - 0.5)) - 1);
        for (int x = first; x <= last; ++x) mask.at(y, x) = 1.0f;
      }
    }
  }
  return mask;
}

GtStrokeMask binarize_stroke_diff(const ImageTensor& image, const ImageTensor& clean, float tau) {
  require_dims(image.height(), image.width(), clean.height(), clean.width(),
               "binarize_stroke_diff");
  GtStrokeMask out(image.height(), image.width(), 0.0f);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      float diff = 0.0f;
      for (int c = 0; c < ImageTensor::kChannels; ++c) {
        diff = std::max(diff, std::abs(image.at(c, y, x) - clean.at(c, y, x)) / 2.0f);
      }
      if (diff > tau) out.at(y, x) = 1.0f;
    }
  }
  return out;
}

ImageTensor composite(const ImageTensor& image, const RegionMask& m,
                      const ImageTensor& replacement) {
  require_dims(image.height(), image.width(), m.height(), m.width(), "composite");
  require_dims(image.height(), image.width(), replacement.height(), replacement.width(),
               "composite");
  ImageTensor out(image.height(), image.width());
  for (int c = 0; c < ImageTensor::kChannels; ++c) {
    for (int y = 0; y < image.height(); ++y) {
      for (int x = 0; x < image.width(); ++x) {
        const float w = m.at(y, x);
        out.at(c, y, x) = image.at(c, y, x) * (1.0f - w) + replacement.at(c, y, x) * w;
      }
    }
  }
  return out;
}

}  // namespace strokeless
