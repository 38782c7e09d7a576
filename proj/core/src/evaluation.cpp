#include "strokeless/evaluation.hpp"

#include <algorithm>
#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

namespace strokeless {

namespace bg = boost::geometry;
using json = nlohmann::json;

namespace {

using BgPoint = bg::model::d2::point_xy<double>;
using BgPolygon = bg::model::polygon<BgPoint>;

void require_same_size(const ImageTensor& a, const ImageTensor& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw InvalidArgument(std::string(what) + ": image sizes differ (" +
                          std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
                          std::to_string(b.width()) + "x" + std::to_string(b.height()) + ")");
  }
}

template <class A, class B>
void require_same_plane(const A& a, const B& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw InvalidArgument(std::string(what) + ": mask sizes differ");
  }
}

BgPolygon to_bg(const DetBox& box) {
  BgPolygon p;
  for (const auto& v : box.polygon) bg::append(p.outer(), BgPoint(v.x, v.y));
  bg::correct(p);
  return p;
}

std::vector<double> gaussian_window() {
  constexpr int kSize = 11;
  constexpr double kSigma = 1.5;
  std::vector<double> w(kSize);
  double total = 0;
  for (int i = 0; i < kSize; ++i) {
    const double d = i - kSize / 2;
    w[i] = std::exp(-d * d / (2 * kSigma * kSigma));
    total += w[i];
  }
  for (auto& v : w) v /= total;
  return w;
}

// Separable valid-mode filtering of one H×W plane.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w,
                                 const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int ow = w - n + 1, oh = h - n + 1;
  std::vector<double> rows(static_cast<size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += k[i] * src[static_cast<size_t>(y) * w + x + i];
      rows[static_cast<size_t>(y) * ow + x] = s;
    }
  std::vector<double> out(static_cast<size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += k[i] * rows[static_cast<size_t>(y + i) * ow + x];
      out[static_cast<size_t>(y) * ow + x] = s;
    }
  return out;
}

}  // namespace

double mae(const ImageTensor& a, const ImageTensor& b) {
  require_same_size(a, b, "mae");
  const auto da = a.data(), db = b.data();
  double total = 0;
  for (size_t i = 0; i < da.size(); ++i) total += std::abs(double{da[i]} - db[i]) / 2.0;
  return total / static_cast<double>(da.size()) * 100.0;
}

double psnr(const ImageTensor& a, const ImageTensor& b) {
  require_same_size(a, b, "psnr");
  const auto da = a.data(), db = b.data();
  double se = 0;
  for (size_t i = 0; i < da.size(); ++i) {
    const double d = (double{da[i]} - db[i]) / 2.0;
    se += d * d;
  }
  const double mse = se / static_cast<double>(da.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const ImageTensor& a, const ImageTensor& b) {
  require_same_size(a, b, "ssim");
  const int h = a.height(), w = a.width();
  if (std::min(h, w) < 11) throw InvalidArgument("ssim: image smaller than the 11x11 window");
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  static const std::vector<double> k = gaussian_window();
  const size_t plane = static_cast<size_t>(h) * w;
  double total = 0;
  size_t count = 0;
  for (int c = 0; c < ImageTensor::kChannels; ++c) {
    std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
    for (size_t i = 0; i < plane; ++i) {
      x[i] = (a.data()[c * plane + i] + 1.0) / 2.0;
      y[i] = (b.data()[c * plane + i] + 1.0) / 2.0;
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w, k), my = filter_valid(y, h, w, k);
    const auto sxx = filter_valid(xx, h, w, k), syy = filter_valid(yy, h, w, k);
    const auto sxy = filter_valid(xy, h, w, k);
    for (size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i];
      const double cov = sxy[i] - mx[i] * my[i];
      total += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) /
               ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    count += mx.size();
  }
  return total / static_cast<double>(count);
}

double tmae(const StrokeMask& ms, const GtStrokeMask& mgt) {
  require_same_plane(ms, mgt, "tmae");
  double total = 0;
  for (int64_t i = 0; i < ms.pixels(); ++i) total += std::abs(double{ms[i]} - mgt[i]);
  return total / static_cast<double>(ms.pixels()) * 100.0;
}

double stroke_iou(const StrokeMask& ms, const GtStrokeMask& mgt, double threshold) {
  require_same_plane(ms, mgt, "stroke_iou");
  int64_t inter = 0, uni = 0;
  for (int64_t i = 0; i < ms.pixels(); ++i) {
    const bool p = ms[i] >= threshold, g = mgt[i] > 0.5f;
    inter += p && g;
    uni += p || g;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

DetBox DetBox::from_numbers(const std::vector<double>& v) {
  DetBox box;
  if (v.size() == 4) {
    const double x1 = std::min(v[0], v[2]), x2 = std::max(v[0], v[2]);
    const double y1 = std::min(v[1], v[3]), y2 = std::max(v[1], v[3]);
    box.polygon = {{x1, y1}, {x2, y1}, {x2, y2}, {x1, y2}};
  } else if (v.size() >= 6 && v.size() % 2 == 0) {
    for (size_t i = 0; i < v.size(); i += 2) box.polygon.push_back({v[i], v[i + 1]});
  } else {
    throw InvalidArgument("detection needs 4 numbers (box) or an even count >= 6 (polygon), got " +
                          std::to_string(v.size()));
  }
  if (!(box.area() > 0)) throw InvalidArgument("detection has zero area");
  return box;
}

DetBox DetBox::from_polygon(const Polygon& p) {
  DetBox box;
  box.polygon = p.vertices;
  if (box.polygon.size() < 3 || !(box.area() > 0)) {
    throw InvalidArgument("ground-truth polygon has zero area");
  }
  return box;
}

double DetBox::area() const { return bg::area(to_bg(*this)); }

double box_iou(const DetBox& a, const DetBox& b) {
  const BgPolygon pa = to_bg(a), pb = to_bg(b);
  std::vector<BgPolygon> inter;
  bg::intersection(pa, pb, inter);
  double ai = 0;
  for (const auto& p : inter) ai += bg::area(p);
  const double au = bg::area(pa) + bg::area(pb) - ai;
  return au > 0 ? ai / au : 0.0;
}

DetectionStats detection_metrics(const std::vector<DetBox>& pred, const std::vector<DetBox>& gt,
                                 double iou_thresh) {
  struct Pair {
    double iou;
    size_t p, g;
  };
  std::vector<Pair> pairs;
  for (size_t p = 0; p < pred.size(); ++p)
    for (size_t g = 0; g < gt.size(); ++g) {
      const double iou = box_iou(pred[p], gt[g]);
      if (iou >= iou_thresh) pairs.push_back({iou, p, g});
    }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& a, const Pair& b) { return a.iou > b.iou; });
  std::vector<bool> used_p(pred.size()), used_g(gt.size());
  DetectionStats s;
  for (const auto& pr : pairs) {
    if (used_p[pr.p] || used_g[pr.g]) continue;
    used_p[pr.p] = used_g[pr.g] = true;
    ++s.matched;
  }
  s.n_pred = static_cast<int64_t>(pred.size());
  s.n_gt = static_cast<int64_t>(gt.size());
  s.recall = s.n_gt ? 100.0 * s.matched / s.n_gt : 0.0;
  s.precision = s.n_pred ? 100.0 * s.matched / s.n_pred : 0.0;
  s.f_measure = (s.recall + s.precision) > 0
                    ? 2 * s.recall * s.precision / (s.recall + s.precision)
                    : 0.0;
  return s;
}

Detections parse_detections(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("detections: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("detections: expected an object keyed by image id");
  Detections out;
  for (const auto& [id, boxes] : j.items()) {
    auto& list = out[id];
    if (!boxes.is_array()) throw InvalidArgument("detections[" + id + "]: expected an array");
    for (const auto& b : boxes) {
      try {
        list.push_back(DetBox::from_numbers(b.get<std::vector<double>>()));
      } catch (const json::exception& e) {
        throw InvalidArgument("detections[" + id + "]: " + e.what());
      } catch (const InvalidArgument& e) {
        throw InvalidArgument("detections[" + id + "]: " + e.what());
      }
    }
  }
  return out;
}

Detections load_detections(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open detections file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_detections(ss.str());
}

EvalReport aggregate(std::vector<SampleMetrics> samples) {
  EvalReport r;
  r.n_samples = static_cast<int64_t>(samples.size());
  if (samples.empty()) return r;
  double mae_sum = 0, psnr_sum = 0, ssim_sum = 0, tmae_sum = 0, iou_sum = 0;
  int64_t finite = 0, with_strokes = 0;
  for (const auto& s : samples) {
    mae_sum += s.mae;
    ssim_sum += s.ssim;
    if (std::isinf(s.psnr)) {
      ++r.psnr_infinite;
    } else {
      psnr_sum += s.psnr;
      ++finite;
    }
    if (s.tmae) {
      tmae_sum += *s.tmae;
      iou_sum += s.stroke_iou.value_or(0.0);
      ++with_strokes;
    }
  }
  const double n = static_cast<double>(samples.size());
  r.mae = mae_sum / n;
  r.ssim = ssim_sum / n;
  r.psnr = finite ? psnr_sum / static_cast<double>(finite)
                  : std::numeric_limits<double>::infinity();
  if (with_strokes) {
    r.tmae = tmae_sum / static_cast<double>(with_strokes);
    r.stroke_iou = iou_sum / static_cast<double>(with_strokes);
  }
  r.samples = std::move(samples);
  return r;
}

EvalReport evaluate(const Predictor& predict, const Dataset& dataset, const EvalOptions& options) {
  if (dataset.empty()) throw InvalidArgument("evaluation dataset is empty");
  std::vector<SampleMetrics> metrics;
  DetectionStats pooled;
  for (const auto& s : dataset.samples) {
    const CascadeOutput out = predict(s);
    const ImageTensor scored =
        options.composite ? composite(s.image, s.region, out.final_image()) : out.final_image();
    SampleMetrics m;
    m.id = s.id;
    m.mae = mae(scored, s.clean);
    m.psnr = psnr(scored, s.clean);
    m.ssim = ssim(scored, s.clean);
    if (const StrokeMask* ms = out.final_strokes()) {
      m.tmae = tmae(*ms, s.strokes);
      m.stroke_iou = stroke_iou(*ms, s.strokes);
    }
    metrics.push_back(std::move(m));

    if (options.detections) {
      std::vector<DetBox> gt;
      for (const auto& p : s.polygons) gt.push_back(DetBox::from_polygon(p));
      const auto it = options.detections->find(s.id);
      const std::vector<DetBox> none;
      const DetectionStats d =
          detection_metrics(it == options.detections->end() ? none : it->second, gt,
                            options.iou_thresh);
      pooled.matched += d.matched;
      pooled.n_pred += d.n_pred;
      pooled.n_gt += d.n_gt;
    }
  }
  EvalReport r = aggregate(std::move(metrics));
  r.composited = options.composite;
  if (options.detections) {
    pooled.recall = pooled.n_gt ? 100.0 * pooled.matched / pooled.n_gt : 0.0;
    pooled.precision = pooled.n_pred ? 100.0 * pooled.matched / pooled.n_pred : 0.0;
    pooled.f_measure = pooled.recall + pooled.precision > 0
                           ? 2 * pooled.recall * pooled.precision /
                                 (pooled.recall + pooled.precision)
                           : 0.0;
    r.detection = pooled;
  }
  return r;
}

EvalReport evaluate(const Model<float>& model, const Dataset& dataset, const EvalOptions& options) {
  return evaluate([&](const Sample& s) { return run_cascade(model, s.image, s.region); }, dataset,
                  options);
}

namespace {

json number_or_inf(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

}  // namespace

std::string report_to_json(const EvalReport& r, bool include_samples) {
  json j{{"mae", r.mae},
         {"psnr", number_or_inf(r.psnr)},
         {"psnr_infinite_count", r.psnr_infinite},
         {"ssim", r.ssim},
         {"n_samples", r.n_samples},
         {"composited", r.composited},
         {"conventions",
          {{"mae", "percent of full range, per-sample mean"},
           {"psnr", "dB on [0,1], infinite samples excluded from the mean"},
           {"ssim", "11x11 Gaussian window, sigma 1.5, valid positions"},
           {"detection", "greedy one-to-one IoU matching, pooled over images (not DetEval)"}}}};
  j["tmae"] = r.tmae ? json(*r.tmae) : json(nullptr);
  j["stroke_iou"] = r.stroke_iou ? json(*r.stroke_iou) : json(nullptr);
  if (r.detection) {
    j["detection"] = {{"recall", r.detection->recall},
                      {"precision", r.detection->precision},
                      {"f_measure", r.detection->f_measure},
                      {"matched", r.detection->matched},
                      {"n_pred", r.detection->n_pred},
                      {"n_gt", r.detection->n_gt}};
  }
  if (include_samples) {
    json arr = json::array();
    for (const auto& s : r.samples) {
      json e{{"id", s.id}, {"mae", s.mae}, {"psnr", number_or_inf(s.psnr)}, {"ssim", s.ssim}};
      if (s.tmae) e["tmae"] = *s.tmae;
      if (s.stroke_iou) e["stroke_iou"] = *s.stroke_iou;
      arr.push_back(e);
    }
    j["samples"] = arr;
  }
  return j.dump(2);
}

std::string report_to_table(const EvalReport& r) {
  std::ostringstream os;
  if (r.detection) {
    os << "# detection uses greedy one-to-one IoU matching, an approximation of DetEval\n";
  }
  os << std::fixed << std::setprecision(4);
  auto row = [&](const std::string& k, const std::string& v) {
    os << std::left << std::setw(14) << k << v << '\n';
  };
  auto num = [](double v) {
    if (std::isinf(v)) return std::string("inf");
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v;
    return s.str();
  };
  row("samples", std::to_string(r.n_samples) + (r.composited ? " (composited)" : ""));
  row("MAE (%)", num(r.mae));
  row("PSNR (dB)", num(r.psnr) + (r.psnr_infinite
                                       ? "  [" + std::to_string(r.psnr_infinite) + " exact]"
                                       : ""));
  row("SSIM", num(r.ssim));
  row("tMAE (%)", r.tmae ? num(*r.tmae) : "n/a");
  row("stroke IoU", r.stroke_iou ? num(*r.stroke_iou) : "n/a");
  if (r.detection) {
    row("recall (%)", num(r.detection->recall));
    row("precision (%)", num(r.detection->precision));
    row("f-measure (%)", num(r.detection->f_measure));
  }
  return os.str();
}

}  // namespace strokeless
