#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "strokeless/error.hpp"

namespace strokeless {

/// Three-channel image in planar (channel-major) layout. Pixel values live
/// in [-1, 1]; 8-bit byte b maps to b / 127.5 - 1.
class ImageTensor {
 public:
  static constexpr int kChannels = 3;

  ImageTensor() = default;
  ImageTensor(int height, int width, float fill = -1.0f);
  /// Takes planar data of size 3·H·W and checks the value invariants.
  static ImageTensor from_planar(int height, int width, std::vector<float> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int64_t pixels() const noexcept { return int64_t{height_} * width_; }

  float& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  float at(int c, int y, int x) const { return data_[index(c, y, x)]; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  /// Throws InvalidArgument if any value is non-finite or outside [-1, 1].
  void validate() const;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  size_t index(int c, int y, int x) const {
    return (static_cast<size_t>(c) * height_ + y) * width_ + x;
  }
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

enum class PlaneKind { kRegion, kStroke, kGtStroke, kWeight };

/// Single-channel H×W float map; the kind fixes its value invariant.
template <PlaneKind Kind>
class Plane {
 public:
  Plane() = default;
  Plane(int height, int width, float fill = 0.0f)
      : height_(height), width_(width), data_(static_cast<size_t>(height) * width, fill) {
    if (height <= 0 || width <= 0) throw InvalidArgument("plane dimensions must be positive");
  }
  static Plane from_data(int height, int width, std::vector<float> data) {
    Plane p;
    p.height_ = height;
    p.width_ = width;
    p.data_ = std::move(data);
    if (p.data_.size() != static_cast<size_t>(height) * width) {
      throw InvalidArgument("plane data size does not match " + std::to_string(height) + "x" +
                            std::to_string(width));
    }
    p.validate();
    return p;
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int64_t pixels() const noexcept { return int64_t{height_} * width_; }

  float& at(int y, int x) { return data_[static_cast<size_t>(y) * width_ + x]; }
  float at(int y, int x) const { return data_[static_cast<size_t>(y) * width_ + x]; }
  float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  void validate() const {
    for (float v : data_) {
      bool ok = std::isfinite(v);
      if constexpr (Kind == PlaneKind::kRegion || Kind == PlaneKind::kGtStroke) {
        ok = ok && (v == 0.0f || v == 1.0f);
      } else if constexpr (Kind == PlaneKind::kStroke) {
        ok = ok && v >= 0.0f && v <= 1.0f;
      } else {
        ok = ok && v >= 1.0f;
      }
      if (!ok) throw InvalidArgument("plane value " + std::to_string(v) + " violates invariant");
    }
  }

  int64_t count_nonzero() const {
    int64_t n = 0;
    for (float v : data_) n += (v != 0.0f);
    return n;
  }

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

using RegionMask = Plane<PlaneKind::kRegion>;
using StrokeMask = Plane<PlaneKind::kStroke>;
using GtStrokeMask = Plane<PlaneKind::kGtStroke>;
using WeightMatrix = Plane<PlaneKind::kWeight>;

struct Point {
  double x = 0;
  double y = 0;
};

struct Polygon {
  std::vector<Point> vertices;
};

/// 1 + lambda_m·m + lambda_s·ms elementwise.
WeightMatrix compute_weight_matrix(const RegionMask& m, const StrokeMask& ms, float lambda_m,
                                   float lambda_s);

/// Union of the polygons; pixel (x, y) is set when its center (x+0.5, y+0.5)
/// has nonzero winding number with respect to at least one polygon.
RegionMask rasterize_polygons(std::span<const Polygon> polygons, int height, int width);

/// Throws InvalidArgument for fewer than three vertices or vertices outside
/// [0, width] × [0, height].
void validate_polygon(const Polygon& polygon, int height, int width);

/// Pixels whose max-channel absolute difference, measured on the [0,1]
/// scale, strictly exceeds tau.
GtStrokeMask binarize_stroke_diff(const ImageTensor& image, const ImageTensor& clean, float tau);

/// image ⊙ (1 − m) + replacement ⊙ m per channel.
ImageTensor composite(const ImageTensor& image, const RegionMask& m,
                      const ImageTensor& replacement);

inline constexpr float kDefaultStrokeTau = 25.0f / 255.0f;

}  // namespace strokeless
