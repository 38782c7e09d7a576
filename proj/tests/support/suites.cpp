#include "suites.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "strokeless/checkpoint.hpp"
#include "strokeless/dataset.hpp"
#include "strokeless/evaluation.hpp"
#include "strokeless/losses.hpp"
#include "strokeless/training.hpp"
#include "test_support.hpp"

namespace strokeless::testing {
namespace {

using V = ag::Var<double>;

V full(const Shape& s, double v) { return V::constant(Array<double>(s, v)); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

Check value_check(const std::string& name, double got, double expected, double tol) {
  const bool ok = std::abs(got - expected) <= tol;
  return {name, ok, "got " + fmt(got) + ", expected " + fmt(expected)};
}

double scalar(const V& v) { return v.value()[0]; }

}  // namespace

std::vector<Check> loss_hand_value_checks() {
  std::vector<Check> out;
  auto add = [&](const std::string& name, double got, double expected) {
    out.push_back(value_check(name, got, expected, kLossTol));
  };
  const Shape mask{2, 1, 4, 4};

  // Weight matrix, one pixel.
  const Shape px{1, 1, 1, 1};
  add("weight matrix m=0 ms=0", scalar(weight_matrix(full(px, 0), full(px, 0), 5.0, 5.0)), 1.0);
  add("weight matrix m=1 ms=1", scalar(weight_matrix(full(px, 1), full(px, 1), 5.0, 5.0)), 11.0);
  add("weight matrix m=1 ms=0.5", scalar(weight_matrix(full(px, 1), full(px, 0.5), 5.0, 5.0)),
      8.5);

  // Stroke loss.
  {
    std::mt19937_64 rng(11);
    const V g = V::constant(random_binary<double>(mask, rng));
    add("stroke loss ms=ms2=mgt", scalar(stroke_loss(g, g, g, 10.0)), 0.0);
  }
  add("stroke loss ms=0.1 ms2=0", scalar(stroke_loss(full(mask, 0.1), full(mask, 0), full(mask, 0), 10.0)),
      0.1);
  add("stroke loss ms=0 ms2=0.2", scalar(stroke_loss(full(mask, 0), full(mask, 0.2), full(mask, 0), 10.0)),
      2.0);

  // Removal loss on a 1×1 image with M = Ms = 1, so every weight is 11.
  {
    const Shape rgb1{1, 3, 1, 1};
    const V mw = weight_matrix(full(px, 1), full(px, 1), 5.0, 5.0);
    const V igt = full(rgb1, 0.2);
    add("removal loss identical", scalar(removal_loss(igt, igt, igt, mw, mw, 10.0)), 0.0);
    add("removal loss stage-one error 0.1", scalar(removal_loss(full(rgb1, 0.3), igt, igt, mw, mw, 10.0)),
        1.1);
    add("removal loss stage-two error 0.1", scalar(removal_loss(igt, full(rgb1, 0.3), igt, mw, mw, 10.0)),
        11.0);
  }

  // Hinge terms; scores have two channels to exercise the broadcast.
  const Shape scores{2, 2, 2, 2}, dm{2, 1, 2, 2};
  add("generator hinge d=0", scalar(gen_adv_loss(full(scores, 0), full(dm, 1))), 0.0);
  add("generator hinge dm=1 d=1", scalar(gen_adv_loss(full(scores, 1), full(dm, 1))), -1.0);
  add("generator hinge dm=0", scalar(gen_adv_loss(full(scores, 3.7), full(dm, 0))), 0.0);
  add("discriminator hinge margins met",
      scalar(disc_loss(full(scores, 1), full(scores, -1), full(dm, 1))), 0.0);
  add("discriminator hinge scores 0", scalar(disc_loss(full(scores, 0), full(scores, 0), full(dm, 1))),
      2.0);
  {
    std::mt19937_64 rng(5);
    V real = V::parameter(random_array<double>(scores, rng, -3, 3));
    V fake = V::parameter(random_array<double>(scores, rng, -3, 3));
    const V l = disc_loss(real, fake, full(dm, 0));
    add("discriminator hinge dm=0", scalar(l), 2.0);
    ag::backward(l);
    double g = 0;
    for (double v : real.grad().values()) g = std::max(g, std::abs(v));
    for (double v : fake.grad().values()) g = std::max(g, std::abs(v));
    add("discriminator hinge dm=0 gradient", g, 0.0);
  }

  add("total (0, 0, 0)", total_generator_loss(0, 0, 0).l_g_total, 0.0);
  add("total (0.1, 1.1, -1)", total_generator_loss(0.1, 1.1, -1).l_g_total, 0.2);
  for (const char* part : {"l_tsd", "l_trg", "l_g_sn"}) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const std::string p = part;
    bool named = false;
    try {
      total_generator_loss(p == "l_tsd" ? nan : 0, p == "l_trg" ? nan : 0, p == "l_g_sn" ? nan : 0);
    } catch (const NumericError& e) {
      named = e.component() == p;
    }
    out.push_back({"total NaN in " + p + " names it", named, named ? "" : "no matching error"});
  }
  return out;
}

std::vector<Check> gradient_checks() {
  std::vector<Check> out;
  auto add = [&](const std::string& name, const GradCheckResult& r) {
    out.push_back({name, r.max_rel < kGradRelTol,
                   "max rel " + fmt(r.max_rel) + " over " + std::to_string(r.checked) +
                       " entries" + (r.worst.empty() ? "" : "; worst " + r.worst)});
  };
  std::mt19937_64 rng(2024);
  const Shape mask{2, 1, 8, 8}, img{2, 3, 8, 8};

  {
    V ms = V::parameter(random_array<double>(mask, rng, 0.05, 0.95));
    V ms2 = V::parameter(random_array<double>(mask, rng, 0.05, 0.95));
    const V mgt = V::constant(random_binary<double>(mask, rng, 0.3));
    add("stroke loss", check_gradients([&] { return stroke_loss(ms, ms2, mgt, 10.0); },
                                       {{"ms", ms}, {"ms2", ms2}}, 128));
  }
  {
    V ite = V::parameter(random_array<double>(img, rng, -0.9, 0.9));
    V ite2 = V::parameter(random_array<double>(img, rng, -0.9, 0.9));
    V ms = V::parameter(random_array<double>(mask, rng, 0.05, 0.95));
    V ms2 = V::parameter(random_array<double>(mask, rng, 0.05, 0.95));
    const V igt = V::constant(random_array<double>(img, rng, -0.9, 0.9));
    const V m = V::constant(random_binary<double>(mask, rng, 0.5));
    auto f = [&] {
      return removal_loss(ite, ite2, igt, weight_matrix(m, ms, 5.0, 5.0),
                          weight_matrix(m, ms2, 5.0, 5.0), 10.0);
    };
    add("removal loss", check_gradients(f, {{"ite", ite}, {"ite2", ite2}, {"ms", ms}, {"ms2", ms2}}, 96));
  }

  DiscriminatorConfig dcfg;
  dcfg.channels = {4, 4, 4};
  dcfg.kernel = 5;
  Discriminator<double> disc(dcfg, rng);
  const V dm = V::constant(mask_weight_branch(random_binary<double>(mask, rng, 0.6), 3));
  auto d_leaves = as_leaves(disc.parameters("d."));
  {
    V fake = V::parameter(random_array<double>(img, rng, -0.9, 0.9));
    auto leaves = d_leaves;
    leaves.emplace_back("fake", fake);
    add("generator hinge through spectral-norm discriminator",
        check_gradients([&] { return gen_adv_loss(disc.forward(fake), dm); }, leaves, 24));
  }
  {
    const V real = V::constant(random_array<double>(img, rng, -0.9, 0.9));
    V fake = V::parameter(random_array<double>(img, rng, -0.9, 0.9));
    auto leaves = d_leaves;
    leaves.emplace_back("fake", fake);
    add("discriminator hinge through spectral-norm discriminator",
        check_gradients([&] { return disc_loss(disc.forward(real), disc.forward(fake), dm); }, leaves,
                        24));
  }
  {
    ModelConfig mc;
    mc.ablation = Ablation::kCascade;
    mc.base_channels = 4;
    mc.levels = 3;
    mc.disc_channels = {4, 4, 4};
    const Model<double> model = Model<double>::initialized(mc, 99);
    Batch<double> batch;
    batch.ids = {"a", "b"};
    batch.image = random_array<double>(img, rng, -0.9, 0.9);
    batch.clean = random_array<double>(img, rng, -0.9, 0.9);
    batch.region = random_binary<double>(mask, rng, 0.6);
    batch.strokes = random_binary<double>(mask, rng, 0.3);
    for (int64_t i = 0; i < batch.strokes.size(); ++i) batch.strokes[i] *= batch.region[i];
    LossHyperParams hp;
    hp.stroke_weight_grad = true;
    auto leaves = as_leaves(model.generator.parameters());
    auto dl = as_leaves(model.discriminator.parameters("d."));
    leaves.insert(leaves.end(), dl.begin(), dl.end());
    add("generator composite through the two-unit cascade",
        check_gradients([&] { return generator_objective(model, batch, hp, true).total; }, leaves, 8));
  }
  return out;
}

std::vector<Check> shape_checks() {
  std::vector<Check> out;
  auto add = [&](const std::string& name, bool ok, const std::string& detail = "") {
    out.push_back({name, ok, detail});
  };
  auto shape_is = [](const Shape& s, const Shape& want) { return s == want; };
  ag::NoGradGuard no_grad;
  std::mt19937_64 rng(17);

  const ModelConfig full{};
  const Model<float> model = Model<float>::initialized(full, 3);
  const auto image = ag::Var<float>::constant(random_array<float>({1, 3, 256, 256}, rng));
  const auto m = ag::Var<float>::constant(random_binary<float>({1, 1, 256, 256}, rng, 0.3));
  const CascadeTrace<float> trace = cascade_forward(model.generator, image, m);
  add("cascade yields two stroke maps and two images",
      trace.strokes.size() == 2 && trace.erased.size() == 2);
  for (size_t u = 0; u < trace.strokes.size(); ++u) {
    add("stroke map " + std::to_string(u + 1) + " is 1x1x256x256",
        shape_is(trace.strokes[u].shape(), {1, 1, 256, 256}), shape_string(trace.strokes[u].shape()));
    add("erased image " + std::to_string(u + 1) + " is 1x3x256x256",
        shape_is(trace.erased[u].shape(), {1, 3, 256, 256}), shape_string(trace.erased[u].shape()));
    const auto s = trace.strokes[u].value().values();
    const auto e = trace.erased[u].value().values();
    add("stroke map " + std::to_string(u + 1) + " within [0, 1]",
        *std::min_element(s.begin(), s.end()) >= 0.f && *std::max_element(s.begin(), s.end()) <= 1.f);
    add("erased image " + std::to_string(u + 1) + " within [-1, 1]",
        *std::min_element(e.begin(), e.end()) >= -1.f && *std::max_element(e.begin(), e.end()) <= 1.f);
  }
  const auto scores = model.discriminator.forward(image);
  add("discriminator maps 256x256 to 4x4", shape_is(scores.shape(), {1, 256, 4, 4}),
      shape_string(scores.shape()));
  const Array<float> dm = mask_weight_branch(m.value(), 6);
  add("mask branch geometry equals discriminator map", shape_is(dm.shape(), {1, 1, 4, 4}),
      shape_string(dm.shape()));

  const auto& gw = model.generator;
  add("G_R first kernel is 5x5", gw.unit(0).remover.first_layer().kernel() == 5);
  add("G_R' first kernel is 5x5", gw.unit(1).remover.first_layer().kernel() == 5);
  add("G_D input is image plus mask", gw.unit(0).detector->config().in_channels == 4);
  add("G_D' input is image plus two masks", gw.unit(1).detector->config().in_channels == 5);
  add("G_R input is image, mask and stroke map", gw.unit(0).remover.config().in_channels == 5);

  {
    std::set<const void*> nodes;
    std::set<std::string> names;
    size_t total = 0;
    for (const auto& p : gw.parameters()) {
      nodes.insert(p.var.node().get());
      names.insert(p.name);
      ++total;
    }
    add("four generator subnets share no parameter", nodes.size() == total && names.size() == total,
        std::to_string(total) + " parameters, " + std::to_string(nodes.size()) + " distinct");
    Model<float> copy = model;
    copy.generator.unit(1).remover.zero();
    const float before = model.generator.unit(1).remover.first_layer().weight.value()[0];
    add("model copies are deep", before != 0.0f);
  }

  {
    ModelConfig small;
    small.base_channels = 4;
    const Model<float> zero = Model<float>::zeros(small);
    const auto x = ag::Var<float>::constant(random_array<float>({1, 3, 64, 64}, rng));
    const auto mx = ag::Var<float>::constant(random_binary<float>({1, 1, 64, 64}, rng));
    const auto t = cascade_forward(zero.generator, x, mx);
    auto all_eq = [](const Array<float>& a, float v) {
      return std::all_of(a.values().begin(), a.values().end(), [v](float e) { return e == v; });
    };
    add("zero-weight detector gives 0.5", all_eq(t.strokes[0].value(), 0.5f));
    add("zero-weight remover gives 0", all_eq(t.erased[0].value(), 0.0f));
    add("zero-weight discriminator gives 0", all_eq(zero.discriminator.forward(x).value(), 0.0f));

    Model<float> half = Model<float>::initialized(small, 8);
    half.generator.unit(1).detector->zero();
    half.generator.unit(1).remover.zero();
    const auto th = cascade_forward(half.generator, x, mx);
    add("zeroed second unit gives ms2 = 0.5 and ite2 = 0",
        all_eq(th.strokes[1].value(), 0.5f) && all_eq(th.erased[1].value(), 0.0f));

    add("64x64 input accepted", t.strokes[0].shape() == Shape({1, 1, 64, 64}));
    bool threw = false;
    try {
      const auto y = ag::Var<float>::constant(random_array<float>({1, 3, 60, 60}, rng));
      const auto my = ag::Var<float>::constant(Array<float>({1, 1, 60, 60}));
      (void)tsdnet_forward(*zero.generator.unit(0).detector, y, my);
    } catch (const InvalidArgument&) {
      threw = true;
    }
    add("60x60 input rejected", threw);

    for (Ablation a : {Ablation::kTsdnet, Ablation::kWdTsdnet, Ablation::kBaseline, Ablation::kWd}) {
      ModelConfig c = small;
      c.ablation = a;
      const Model<float> mdl = Model<float>::initialized(c, 1);
      const auto tr = cascade_forward(mdl.generator, x, mx);
      const size_t want_strokes = c.uses_detector() ? 1 : 0;
      add("single-unit " + ablation_name(a) + " returns one image",
          tr.erased.size() == 1 && tr.strokes.size() == want_strokes);
    }
  }

  {
    DiscriminatorConfig dc;
    Discriminator<double> d(dc, rng);
    d.power_iterate(30);
    double lo = 1e9, hi = 0;
    for (size_t i = 0; i < d.layer_count(); ++i) {
      const auto& w = d.layer(i).conv.weight.value();
      const int64_t rows = w.dim(0), cols = w.size() / rows;
      Eigen::MatrixXd mat(rows, cols);
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t c = 0; c < cols; ++c) mat(r, c) = w[r * cols + c];
      const double sigma = Eigen::JacobiSVD<Eigen::MatrixXd>(mat).singularValues()(0);
      const double normalized = sigma / d.sigma_estimate(i);
      lo = std::min(lo, normalized);
      hi = std::max(hi, normalized);
    }
    add("spectral norm after normalization within [0.9, 1.1]", lo >= kSpectralLo && hi <= kSpectralHi,
        "range [" + fmt(lo) + ", " + fmt(hi) + "]");
  }

  {
    const Array<float> zeros({1, 1, 256, 256}, 0.0f), ones({1, 1, 256, 256}, 1.0f);
    const Array<float> z = mask_weight_branch(zeros, 6);
    add("mask branch of empty mask is zero",
        std::all_of(z.values().begin(), z.values().end(), [](float v) { return v == 0.0f; }));
    // Separable oracle: the all-ones kernel factors into two 1-D box sums.
    std::vector<double> line(256, 1.0);
    for (int l = 0; l < 6; ++l) {
      std::vector<double> next(line.size() / 2, 0.0);
      for (size_t o = 0; o < next.size(); ++o)
        for (int k = -2; k <= 2; ++k) {
          const int64_t i = static_cast<int64_t>(2 * o) + k;
          if (i >= 0 && i < static_cast<int64_t>(line.size())) next[o] += line[i] / 5.0;
        }
      line = next;
    }
    const Array<float> o = mask_weight_branch(ones, 6);
    double err = 0;
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) err = std::max(err, std::abs(o.at4(0, 0, y, x) - line[y] * line[x]));
    add("mask branch of full mask matches the separable box-sum oracle", err < 1e-5,
        "max err " + fmt(err));
    const Array<float> o64 = mask_weight_branch(Array<float>({1, 1, 64, 64}, 1.0f), 1);
    add("mask branch interior of full mask is 1, border below 1",
        std::abs(o64.at4(0, 0, 16, 16) - 1.0f) < 1e-6f && o64.at4(0, 0, 0, 0) < 1.0f);
    Array<float> a = random_binary<float>({1, 1, 256, 256}, rng, 0.3), b = a;
    for (int64_t i = 0; i < b.size(); i += 7) b[i] = 1.0f;
    const Array<float> oa = mask_weight_branch(a, 6), ob = mask_weight_branch(b, 6);
    bool mono = true;
    for (int64_t i = 0; i < oa.size(); ++i) mono = mono && ob[i] >= oa[i];
    add("mask branch is monotone in the mask", mono);
  }
  return out;
}

std::vector<Check> metric_oracle_checks() {
  std::vector<Check> out;
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> side(16, 40);
  std::normal_distribution<float> noise(0.0f, 0.15f);
  double e_mae = 0, e_psnr = 0, e_ssim = 0, e_tmae = 0;
  for (int k = 0; k < 50; ++k) {
    const int h = side(rng), w = side(rng);
    const ImageTensor a = random_image(h, w, rng);
    ImageTensor b = a;
    for (auto& v : b.data()) v = std::clamp(v + noise(rng), -1.0f, 1.0f);
    e_mae = std::max(e_mae, std::abs(mae(a, b) - oracle::mae(a, b)));
    e_psnr = std::max(e_psnr, std::abs(psnr(a, b) - oracle::psnr(a, b)));
    e_ssim = std::max(e_ssim, std::abs(ssim(a, b) - oracle::ssim(a, b)));
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    StrokeMask ms(h, w);
    GtStrokeMask g(h, w);
    for (int64_t i = 0; i < ms.pixels(); ++i) {
      ms[i] = u(rng);
      g[i] = u(rng) < 0.3f ? 1.0f : 0.0f;
    }
    e_tmae = std::max(e_tmae, std::abs(tmae(ms, g) - oracle::tmae(ms, g)));
  }
  out.push_back({"MAE vs oracle on 50 pairs", e_mae <= kMetricTol, "max err " + fmt(e_mae)});
  out.push_back({"PSNR vs oracle on 50 pairs", e_psnr <= kMetricTol, "max err " + fmt(e_psnr)});
  out.push_back({"SSIM vs oracle on 50 pairs", e_ssim <= kSsimTol, "max err " + fmt(e_ssim)});
  out.push_back({"tMAE vs oracle on 50 pairs", e_tmae <= kMetricTol, "max err " + fmt(e_tmae)});

  const double c1 = 1e-4;
  const double s = ssim(ImageTensor(32, 32, -1.0f), ImageTensor(32, 32, 1.0f));
  out.push_back(value_check("SSIM constant 0 vs constant 1 equals C1/(1+C1)", s, c1 / (1 + c1), 1e-10));
  return out;
}

std::vector<Check> dataset_consistency_checks(int count, int size) {
  SynthSpec spec;
  spec.count = count;
  spec.size = size;
  spec.seed = 2718;
  const Dataset ds = synth_generate(spec);
  int64_t mismatched = 0, outside = 0, changed_outside = 0, total_strokes = 0;
  for (const Sample& s : ds.samples) {
    const GtStrokeMask rec = binarize_stroke_diff(s.image, s.clean, 0.02f);
    for (int64_t i = 0; i < rec.pixels(); ++i) {
      mismatched += rec[i] != s.strokes[i];
      outside += s.strokes[i] > 0 && s.region[i] == 0;
      total_strokes += s.strokes[i] > 0;
    }
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < s.image.height(); ++y)
        for (int x = 0; x < s.image.width(); ++x)
          changed_outside += s.region.at(y, x) == 0 && s.image.at(c, y, x) != s.clean.at(c, y, x);
  }
  std::vector<Check> out;
  out.push_back({std::to_string(count) + " samples generated", static_cast<int>(ds.size()) == count,
                 std::to_string(ds.size())});
  out.push_back({"thresholded difference recovers the stamped strokes", mismatched == 0 && total_strokes > 0,
                 std::to_string(mismatched) + " mismatched of " + std::to_string(total_strokes) +
                     " stroke pixels"});
  out.push_back({"every stroke pixel lies in the region", outside == 0, std::to_string(outside)});
  out.push_back({"image equals clean outside the region", changed_outside == 0,
                 std::to_string(changed_outside)});
  return out;
}

std::vector<Check> determinism_checks() {
  std::vector<Check> out;
  SynthSpec spec;
  spec.count = 20;
  spec.size = 64;
  spec.seed = 4;
  const Dataset ds = synth_generate(spec);
  TrainConfig cfg = tiny_train_config();
  auto trace = [&] {
    std::vector<LossBreakdown> t;
    TrainingSink sink;
    sink.on_step = [&](const TrainState&, const LossBreakdown& b) { t.push_back(b); };
    run_training(cfg, ds, sink);
    return t;
  };
  const auto a = trace(), b = trace();
  bool same = a.size() == 10 && b.size() == 10;
  for (size_t i = 0; same && i < a.size(); ++i) {
    same = a[i].l_tsd == b[i].l_tsd && a[i].l_trg == b[i].l_trg && a[i].l_g_sn == b[i].l_g_sn &&
           a[i].l_d_sn == b[i].l_d_sn && a[i].l_g_total == b[i].l_g_total;
  }
  out.push_back({"identical 10-step loss traces across two runs", same,
                 std::to_string(a.size()) + " and " + std::to_string(b.size()) + " steps"});

  TrainConfig one = cfg;
  one.epochs = 1;
  const TrainState state = run_training(one, ds, {});
  const auto dir = fresh_dir("determinism_ckpt");
  save_checkpoint(dir, state);
  const Model<float> reloaded = load_model(dir);
  double diff = 0;
  for (size_t k = 0; k < 3; ++k) {
    const Sample& s = ds.samples[k];
    const CascadeOutput p = run_cascade(state.model, s.image, s.region);
    const CascadeOutput q = run_cascade(reloaded, s.image, s.region);
    for (size_t u = 0; u < p.erased.size(); ++u)
      for (size_t i = 0; i < p.erased[u].data().size(); ++i)
        diff = std::max(diff, double{std::abs(p.erased[u].data()[i] - q.erased[u].data()[i])});
    for (size_t u = 0; u < p.strokes.size(); ++u)
      for (int64_t i = 0; i < p.strokes[u].pixels(); ++i)
        diff = std::max(diff, double{std::abs(p.strokes[u][i] - q.strokes[u][i])});
  }
  out.push_back({"checkpoint round trip gives bit-identical probe outputs", diff == 0.0,
                 "max abs diff " + fmt(diff)});
  std::filesystem::remove_all(dir);
  return out;
}

}  // namespace strokeless::testing
