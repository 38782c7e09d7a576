#include <gtest/gtest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "check_matchers.hpp"
#include "oracles.hpp"
#include "strokeless/dataset.hpp"
#include "strokeless/evaluation.hpp"
#include "test_support.hpp"

namespace strokeless {
namespace {

TEST(Metrics, OracleSuite) { testing::expect_all(testing::metric_oracle_checks()); }

TEST(Mae, HandValues) {
  const ImageTensor lo(4, 4, -1.0f), hi(4, 4, 1.0f);
  EXPECT_DOUBLE_EQ(mae(lo, lo), 0.0);
  EXPECT_DOUBLE_EQ(mae(lo, hi), 100.0);
  ImageTensor half = lo;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 4; ++x) half.at(c, y, x) = 0.0f;
  EXPECT_DOUBLE_EQ(mae(lo, half), 25.0);
}

TEST(Psnr, HandValues) {
  const ImageTensor zero(4, 4, -1.0f), one(4, 4, 1.0f);
  EXPECT_TRUE(std::isinf(psnr(zero, zero)));
  EXPECT_NEAR(psnr(zero, one), 0.0, 1e-12);
  // Unit-scale error 0.1 everywhere gives MSE 0.01.
  const ImageTensor shifted(4, 4, -0.8f);
  EXPECT_NEAR(psnr(zero, shifted), 20.0, 1e-5);
}

TEST(Ssim, IdenticalIsOne) {
  std::mt19937_64 rng(1);
  const ImageTensor a = testing::random_image(24, 24, rng);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  EXPECT_THROW(ssim(ImageTensor(8, 8), ImageTensor(8, 8)), InvalidArgument);
}

TEST(Tmae, HandValues) {
  StrokeMask ms(4, 4, 0.0f);
  GtStrokeMask g(4, 4, 0.0f);
  EXPECT_DOUBLE_EQ(tmae(ms, g), 0.0);
  EXPECT_DOUBLE_EQ(tmae(StrokeMask(4, 4, 1.0f), g), 100.0);
  EXPECT_NEAR(tmae(StrokeMask(4, 4, 0.047f), g), 4.7, 1e-5);
}

TEST(StrokeIou, ThresholdAndEmptyConvention) {
  StrokeMask ms(1, 4, 0.0f);
  GtStrokeMask g(1, 4, 0.0f);
  EXPECT_DOUBLE_EQ(stroke_iou(ms, g), 1.0);
  ms[0] = 0.5f;
  ms[1] = 0.49f;
  g[0] = 1;
  g[2] = 1;
  EXPECT_DOUBLE_EQ(stroke_iou(ms, g), 0.5);
}

DetBox box(double x1, double y1, double x2, double y2) { return DetBox::from_numbers({x1, y1, x2, y2}); }

TEST(Detection, PerfectMatch) {
  const std::vector<DetBox> gt{box(0, 0, 10, 10), box(20, 20, 30, 30)};
  const DetectionStats d = detection_metrics(gt, gt);
  EXPECT_DOUBLE_EQ(d.recall, 100.0);
  EXPECT_DOUBLE_EQ(d.precision, 100.0);
  EXPECT_DOUBLE_EQ(d.f_measure, 100.0);
}

TEST(Detection, EmptyPredictionsScoreZero) {
  const DetectionStats d = detection_metrics({}, {box(0, 0, 10, 10)});
  EXPECT_EQ(d.recall, 0.0);
  EXPECT_EQ(d.precision, 0.0);
  EXPECT_EQ(d.f_measure, 0.0);
}

TEST(Detection, OneMatchedOneSpurious) {
  const std::vector<DetBox> gt{box(0, 0, 10, 10), box(20, 20, 30, 30)};
  const std::vector<DetBox> pred{box(1, 0, 10, 10), box(50, 50, 60, 60)};
  const DetectionStats d = detection_metrics(pred, gt);
  EXPECT_DOUBLE_EQ(d.recall, 50.0);
  EXPECT_DOUBLE_EQ(d.precision, 50.0);
  EXPECT_DOUBLE_EQ(d.f_measure, 50.0);
}

TEST(Detection, OneToOneMatching) {
  const std::vector<DetBox> gt{box(0, 0, 10, 10)};
  const std::vector<DetBox> pred{box(0, 0, 10, 10), box(0, 0, 10, 9)};
  const DetectionStats d = detection_metrics(pred, gt);
  EXPECT_EQ(d.matched, 1);
  EXPECT_DOUBLE_EQ(d.precision, 50.0);
}

TEST(Detection, BoxIou) {
  EXPECT_NEAR(box_iou(box(0, 0, 2, 2), box(1, 0, 3, 2)), 1.0 / 3.0, 1e-12);
  const DetBox tri = DetBox::from_numbers({0, 0, 4, 0, 0, 4});
  EXPECT_NEAR(tri.area(), 8.0, 1e-12);
  EXPECT_NEAR(box_iou(tri, box(0, 0, 4, 4)), 0.5, 1e-12);
}

TEST(Detection, ParsingErrors) {
  EXPECT_THROW(DetBox::from_numbers({1, 2, 3}), InvalidArgument);
  EXPECT_THROW(parse_detections("[]"), InvalidArgument);
  EXPECT_THROW(parse_detections(R"({"a": [[1, 2, 3, 4, 5]]})"), InvalidArgument);
  const Detections d = parse_detections(R"({"a": [[0, 0, 4, 4], [0, 0, 4, 0, 0, 4]], "b": []})");
  EXPECT_EQ(d.at("a").size(), 2u);
  EXPECT_TRUE(d.at("b").empty());
}

Dataset small_dataset() {
  SynthSpec spec;
  spec.count = 5;
  spec.size = 64;
  spec.seed = 77;
  return synth_generate(spec);
}

TEST(Evaluate, OracleIdentityModel) {
  const Dataset ds = small_dataset();
  const Predictor identity = [](const Sample& s) {
    CascadeOutput out;
    out.erased.push_back(s.clean);
    out.strokes.push_back(StrokeMask::from_data(s.strokes.height(), s.strokes.width(),
                                                {s.strokes.data().begin(), s.strokes.data().end()}));
    return out;
  };
  const EvalReport r = evaluate(identity, ds, {});
  EXPECT_EQ(r.n_samples, static_cast<int64_t>(ds.size()));
  EXPECT_DOUBLE_EQ(r.mae, 0.0);
  EXPECT_TRUE(std::isinf(r.psnr));
  EXPECT_EQ(r.psnr_infinite, r.n_samples);
  EXPECT_NEAR(r.ssim, 1.0, 1e-12);
  ASSERT_TRUE(r.tmae);
  EXPECT_DOUBLE_EQ(*r.tmae, 0.0);
  EXPECT_DOUBLE_EQ(*r.stroke_iou, 1.0);
  const auto j = nlohmann::json::parse(report_to_json(r));
  EXPECT_EQ(j["psnr"], "inf");
}

TEST(Evaluate, AggregateMatchesOnePassRecomputation) {
  const Dataset ds = small_dataset();
  std::mt19937_64 rng(3);
  std::vector<ImageTensor> dumped;
  std::vector<StrokeMask> dumped_strokes;
  for (const auto& s : ds.samples) {
    dumped.push_back(testing::random_image(s.image.height(), s.image.width(), rng));
    StrokeMask m(s.image.height(), s.image.width());
    std::uniform_real_distribution<float> u(0, 1);
    for (int64_t i = 0; i < m.pixels(); ++i) m[i] = u(rng);
    dumped_strokes.push_back(m);
  }
  size_t k = 0;
  const Predictor replay = [&](const Sample&) {
    CascadeOutput o;
    o.erased.push_back(dumped[k]);
    o.strokes.push_back(dumped_strokes[k]);
    ++k;
    return o;
  };
  const EvalReport r = evaluate(replay, ds, {});
  double m_mae = 0, m_psnr = 0, m_ssim = 0, m_tmae = 0;
  for (size_t i = 0; i < ds.size(); ++i) {
    m_mae += oracle::mae(dumped[i], ds.samples[i].clean) / ds.size();
    m_psnr += oracle::psnr(dumped[i], ds.samples[i].clean) / ds.size();
    m_ssim += oracle::ssim(dumped[i], ds.samples[i].clean) / ds.size();
    m_tmae += oracle::tmae(dumped_strokes[i], ds.samples[i].strokes) / ds.size();
  }
  EXPECT_NEAR(r.mae, m_mae, 1e-6);
  EXPECT_NEAR(r.psnr, m_psnr, 1e-6);
  EXPECT_NEAR(r.ssim, m_ssim, 1e-4);
  EXPECT_NEAR(*r.tmae, m_tmae, 1e-6);

  std::vector<SampleMetrics> shuffled = r.samples;
  std::reverse(shuffled.begin(), shuffled.end());
  EXPECT_NEAR(aggregate(shuffled).mae, r.mae, 1e-12);
}

TEST(Evaluate, CompositeOnlyChangesRegionPixels) {
  const Dataset ds = small_dataset();
  const Predictor blank = [](const Sample& s) {
    CascadeOutput o;
    o.erased.push_back(ImageTensor(s.image.height(), s.image.width(), 1.0f));
    return o;
  };
  EvalOptions opt;
  opt.composite = true;
  const EvalReport r = evaluate(blank, ds, opt);
  EXPECT_TRUE(r.composited);
  EXPECT_FALSE(r.tmae);
  for (size_t i = 0; i < ds.size(); ++i) {
    const ImageTensor c = composite(ds.samples[i].image, ds.samples[i].region,
                                    ImageTensor(ds.samples[i].image.height(), ds.samples[i].image.width(), 1.0f));
    EXPECT_NEAR(r.samples[i].mae, mae(c, ds.samples[i].clean), 1e-12);
  }
}

TEST(Evaluate, DetectionIsPooledAcrossImages) {
  Dataset ds = small_dataset();
  ds.samples.resize(2);
  Detections det;
  for (const auto& p : ds.samples[0].polygons) det[ds.samples[0].id].push_back(DetBox::from_polygon(p));
  EvalOptions opt;
  opt.detections = det;
  const Predictor id = [](const Sample& s) {
    CascadeOutput o;
    o.erased.push_back(s.clean);
    return o;
  };
  const EvalReport r = evaluate(id, ds, opt);
  ASSERT_TRUE(r.detection);
  const int64_t n0 = static_cast<int64_t>(ds.samples[0].polygons.size());
  const int64_t n1 = static_cast<int64_t>(ds.samples[1].polygons.size());
  EXPECT_EQ(r.detection->matched, n0);
  EXPECT_EQ(r.detection->n_gt, n0 + n1);
  EXPECT_NEAR(r.detection->recall, 100.0 * n0 / (n0 + n1), 1e-9);
  EXPECT_DOUBLE_EQ(r.detection->precision, 100.0);
}

}  // namespace
}  // namespace strokeless
