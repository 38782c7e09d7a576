#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "strokeless/dataset.hpp"
#include "strokeless/image.hpp"
#include "strokeless/model.hpp"

namespace strokeless {

/// Mean of |a − b| / 2 over every element, in percent of the full range.
double mae(const ImageTensor& a, const ImageTensor& b);
/// 10·log10(1 / MSE) on the [0, 1] scale; +infinity when the images match.
double psnr(const ImageTensor& a, const ImageTensor& b);
/// Single-scale SSIM with an 11×11 Gaussian window (σ = 1.5), K1 = 0.01,
/// K2 = 0.03 and unit dynamic range, averaged over channels and valid
/// window positions on the [0, 1] scale.
double ssim(const ImageTensor& a, const ImageTensor& b);
/// mean |ms − mgt| in percent.
double tmae(const StrokeMask& ms, const GtStrokeMask& mgt);
/// IoU of {ms ≥ threshold} against mgt; 1 when both sets are empty.
double stroke_iou(const StrokeMask& ms, const GtStrokeMask& mgt, double threshold = 0.5);

struct DetBox {
  std::vector<Point> polygon;
  std::optional<double> score;

  /// Four numbers are an axis-aligned box x1,y1,x2,y2; six or more (even)
  /// are polygon vertices.
  static DetBox from_numbers(const std::vector<double>& v);
  static DetBox from_polygon(const Polygon& p);
  double area() const;
};

double box_iou(const DetBox& a, const DetBox& b);

struct DetectionStats {
  double recall = 0;     // percent
  double precision = 0;  // percent
  double f_measure = 0;  // percent
  int64_t matched = 0;
  int64_t n_pred = 0;
  int64_t n_gt = 0;
};

/// Greedy one-to-one matching in descending IoU order; pairs below
/// iou_thresh never match.
DetectionStats detection_metrics(const std::vector<DetBox>& pred, const std::vector<DetBox>& gt,
                                 double iou_thresh = 0.5);

using Detections = std::map<std::string, std::vector<DetBox>>;
Detections parse_detections(const std::string& json_text);
Detections load_detections(const std::filesystem::path& path);

struct SampleMetrics {
  std::string id;
  double mae = 0;
  double psnr = 0;
  double ssim = 0;
  std::optional<double> tmae;
  std::optional<double> stroke_iou;
};

struct EvalReport {
  double mae = 0;
  double psnr = 0;  // mean over finite samples
  int64_t psnr_infinite = 0;
  double ssim = 0;
  std::optional<double> tmae;
  std::optional<double> stroke_iou;
  std::optional<DetectionStats> detection;
  int64_t n_samples = 0;
  bool composited = false;
  std::vector<SampleMetrics> samples;
};

using Predictor = std::function<CascadeOutput(const Sample&)>;

struct EvalOptions {
  /// Paste network output back only inside the region mask before scoring.
  bool composite = false;
  std::optional<Detections> detections;
  double iou_thresh = 0.5;
};

EvalReport evaluate(const Predictor& predict, const Dataset& dataset, const EvalOptions& options);
EvalReport evaluate(const Model<float>& model, const Dataset& dataset, const EvalOptions& options);

/// Reduces per-sample metrics; order-independent.
EvalReport aggregate(std::vector<SampleMetrics> samples);

std::string report_to_json(const EvalReport& report, bool include_samples = false);
std::string report_to_table(const EvalReport& report);

}  // namespace strokeless
