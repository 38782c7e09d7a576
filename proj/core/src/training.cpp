#include "strokeless/training.hpp"

#include <spdlog/spdlog.h>

#include <pmmintrin.h>
#include <xmmintrin.h>

#include <chrono>
#include <cmath>
#include <nlohmann/json.hpp>
#include <ostream>

#include "strokeless/checkpoint.hpp"

namespace strokeless {

ModelConfig TrainConfig::model_config() const {
  ModelConfig m;
  m.ablation = ablation;
  m.cascade_units = cascade_units;
  m.base_channels = base_channels;
  m.levels = levels;
  m.disc_channels = disc_channels;
  m.disc_kernel = disc_kernel;
  m.mask_branch_normalized = mask_branch_normalized;
  return m;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!(lr > 0.0)) throw InvalidArgument("lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("Adam betas must be in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw InvalidArgument("adam_eps must be > 0");
  if (detector_warmup_steps < 0) throw InvalidArgument("detector_warmup_steps must be >= 0");
  if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (cascade_units < 1 || cascade_units > 3) throw InvalidArgument("cascade_units must be in {1,2,3}");
  loss.validate();
  const ModelConfig mc = model_config();
  mc.validate();
  if (image_size < 1 || image_size % mc.size_multiple() != 0) {
    throw InvalidArgument("image_size " + std::to_string(image_size) + " must be a multiple of " +
                          std::to_string(mc.size_multiple()));
  }
}

AdamState AdamState::zeros_like(const std::vector<NamedParameter<float>>& params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.var.shape());
    s.v.emplace_back(p.var.shape());
  }
  return s;
}

TrainState TrainState::initial(const TrainConfig& cfg) {
  cfg.validate();
  TrainState s;
  s.model = Model<float>::initialized(cfg.model_config(), cfg.seed);
  s.g_opt = AdamState::zeros_like(s.model.generator.parameters());
  s.d_opt = AdamState::zeros_like(s.model.discriminator.parameters("d."));
  s.rng.seed(cfg.seed ^ 0x5DEECE66DULL);
  return s;
}

TrainingDiverged::TrainingDiverged(int64_t step, LossBreakdown breakdown,
                                   const std::string& component, const std::string& what)
    : NumericError(component, "training diverged at step " + std::to_string(step) + ": " + what),
      step_(step),
      breakdown_(breakdown) {}

template <class T>
Array<T> patch_weights(const ModelConfig& cfg, const Array<T>& region) {
  const int layers = static_cast<int>(cfg.disc_channels.size());
  if (cfg.weighted_discriminator()) {
    return mask_weight_branch(region, layers, cfg.disc_kernel, cfg.mask_branch_normalized);
  }
  require_spatial_multiple(region.dim(2), region.dim(3), int64_t{1} << layers, "patch_weights");
  return Array<T>(Shape{region.dim(0), 1, region.dim(2) >> layers, region.dim(3) >> layers}, T{1});
}

template <class T>
GeneratorObjective<T> generator_objective(const Model<T>& model, const Batch<T>& batch,
                                          const LossHyperParams& hp, bool adversarial,
                                          bool stroke_bce) {
  const auto image = ag::Var<T>::constant(batch.image);
  const auto clean = ag::Var<T>::constant(batch.clean);
  const auto region = ag::Var<T>::constant(batch.region);
  const auto mgt = ag::Var<T>::constant(batch.strokes);
  const T lt = static_cast<T>(hp.lambda_t), lm = static_cast<T>(hp.lambda_m);
  const T ls = static_cast<T>(hp.lambda_s), lr = static_cast<T>(hp.lambda_r);

  GeneratorObjective<T> obj;
  obj.trace = cascade_forward(model.generator, image, region);
  const auto& strokes = obj.trace.strokes;
  const auto& erased = obj.trace.erased;

  auto stroke_term = [&](const ag::Var<T>& a, const ag::Var<T>& b) {
    return stroke_bce ? stroke_bce_loss(a, b, mgt, lt) : stroke_loss(a, b, mgt, lt);
  };
  if (!strokes.empty()) {
    obj.l_tsd = stroke_term(strokes[0], strokes.size() > 1 ? strokes[1] : ag::Var<T>());
    for (size_t u = 2; u < strokes.size(); ++u) {
      obj.l_tsd = ag::add(obj.l_tsd, ag::scale(stroke_term(strokes[u], ag::Var<T>()), lt));
    }
  } else {
    obj.l_tsd = ag::Var<T>::constant(Array<T>::scalar(T{0}));
  }

  auto weights_for = [&](size_t u) {
    if (strokes.empty()) return weight_matrix(region, ag::Var<T>(), lm, ls);
    return weight_matrix(region, hp.stroke_weight_grad ? strokes[u] : ag::detach(strokes[u]), lm,
                         ls);
  };
  const bool two = erased.size() > 1;
  obj.l_trg = removal_loss(erased[0], two ? erased[1] : ag::Var<T>(), clean, weights_for(0),
                           two ? weights_for(1) : ag::Var<T>(), lr);
  for (size_t u = 2; u < erased.size(); ++u) {
    obj.l_trg = ag::add(obj.l_trg, ag::scale(removal_loss(erased[u], ag::Var<T>(), clean,
                                                          weights_for(u), ag::Var<T>(), lr),
                                             lr));
  }

  obj.total = ag::add(obj.l_tsd, obj.l_trg);
  if (adversarial) {
    const auto dm = ag::Var<T>::constant(patch_weights(model.config, batch.region));
    obj.l_g_sn = gen_adv_loss(model.discriminator.forward(obj.trace.final_image()), dm);
    obj.total = ag::add(obj.total, obj.l_g_sn);
  }
  return obj;
}

template <class T>
ag::Var<T> discriminator_objective(const Model<T>& model, const Batch<T>& batch,
                                   const ag::Var<T>& fake) {
  const auto dm = ag::Var<T>::constant(patch_weights(model.config, batch.region));
  const auto real = model.discriminator.forward(ag::Var<T>::constant(batch.clean));
  const auto scored_fake = model.discriminator.forward(ag::detach(fake));
  return disc_loss(real, scored_fake, dm);
}

template Array<float> patch_weights<float>(const ModelConfig&, const Array<float>&);
template Array<double> patch_weights<double>(const ModelConfig&, const Array<double>&);
template GeneratorObjective<float> generator_objective<float>(const Model<float>&,
                                                              const Batch<float>&,
                                                              const LossHyperParams&, bool,
                                                              bool);
template GeneratorObjective<double> generator_objective<double>(const Model<double>&,
                                                                const Batch<double>&,
                                                                const LossHyperParams&, bool,
                                                              bool);
template ag::Var<float> discriminator_objective<float>(const Model<float>&, const Batch<float>&,
                                                       const ag::Var<float>&);
template ag::Var<double> discriminator_objective<double>(const Model<double>&,
                                                         const Batch<double>&,
                                                         const ag::Var<double>&);

namespace {

void adam_update(std::vector<NamedParameter<float>>& params, AdamState& opt,
                 const TrainConfig& cfg) {
  ++opt.t;
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(opt.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(opt.t));
  const float lr = static_cast<float>(cfg.lr);
  const float eps = static_cast<float>(cfg.adam_eps);
  const float fb1 = static_cast<float>(b1), fb2 = static_cast<float>(b2);
  const float inv_c1 = static_cast<float>(1.0 / c1), inv_c2 = static_cast<float>(1.0 / c2);
  for (size_t i = 0; i < params.size(); ++i) {
    auto& var = params[i].var;
    const Array<float>& g = var.grad();
    Array<float>& w = var.mutable_value();
    Array<float>& m = opt.m[i];
    Array<float>& v = opt.v[i];
    for (int64_t k = 0; k < w.size(); ++k) {
      m[k] = fb1 * m[k] + (1.0f - fb1) * g[k];
      v[k] = fb2 * v[k] + (1.0f - fb2) * g[k] * g[k];
      const float mhat = m[k] * inv_c1;
      const float vhat = v[k] * inv_c2;
      w[k] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    var.zero_grad();
  }
}

void set_requires_grad(std::vector<NamedParameter<float>>& params, bool on) {
  for (auto& p : params) p.var.set_requires_grad(on);
}

void require_finite_params(const std::vector<NamedParameter<float>>& params, int64_t step,
                           const LossBreakdown& b) {
  for (const auto& p : params) {
    for (float x : p.var.value().values()) {
      if (!std::isfinite(x)) {
        throw TrainingDiverged(step, b, p.name, "non-finite value in parameter " + p.name);
      }
    }
  }
}

double scalar_of(const ag::Var<float>& v) { return v.defined() ? double{v.value()[0]} : 0.0; }

// Saturated activations otherwise produce denormals that slow every GEMM.
// The previous mode is restored so code outside a step sees the same
// floating-point environment regardless of how much training has run.
class FlushDenormalsScope {
 public:
  FlushDenormalsScope() : saved_(_mm_getcsr()) {
    _MM_SET_FLUSH_ZERO_MODE(_MM_FLUSH_ZERO_ON);
    _MM_SET_DENORMALS_ZERO_MODE(_MM_DENORMALS_ZERO_ON);
  }
  ~FlushDenormalsScope() { _mm_setcsr(saved_); }
  FlushDenormalsScope(const FlushDenormalsScope&) = delete;
  FlushDenormalsScope& operator=(const FlushDenormalsScope&) = delete;

 private:
  unsigned int saved_;
};

}  // namespace

LossBreakdown train_step(TrainState& state, const Batch<float>& batch, const TrainConfig& cfg) {
  const FlushDenormalsScope flush;
  const int64_t step = state.step;
  if (batch.image.rank() != 4 || batch.image.dim(2) != cfg.image_size ||
      batch.image.dim(3) != cfg.image_size) {
    throw InvalidArgument("train_step: batch " + shape_string(batch.image.shape()) +
                          " does not match image_size " + std::to_string(cfg.image_size));
  }
  Model<float>& model = state.model;
  auto g_params = model.generator.parameters();
  auto d_params = model.discriminator.parameters("d.");
  for (auto& p : g_params) p.var.zero_grad();
  for (auto& p : d_params) p.var.zero_grad();

  LossBreakdown partial;
  // The generator graph is kept for its own update; D only sees the
  // detached final image.
  if (cfg.adversarial) model.discriminator.power_iterate(1);
  GeneratorObjective<float> obj = [&] {
    set_requires_grad(d_params, false);
    GeneratorObjective<float> o = generator_objective(model, batch, cfg.loss, false,
                                                           step < cfg.detector_warmup_steps);
    set_requires_grad(d_params, true);
    return o;
  }();
  partial.l_tsd = scalar_of(obj.l_tsd);
  partial.l_trg = scalar_of(obj.l_trg);

  if (cfg.adversarial) {
    const ag::Var<float> l_d = discriminator_objective(model, batch, obj.trace.final_image());
    partial.l_d_sn = scalar_of(l_d);
    if (!std::isfinite(partial.l_d_sn)) {
      throw TrainingDiverged(step, partial, "l_d_sn", "non-finite discriminator loss");
    }
    ag::backward(l_d);
    adam_update(d_params, state.d_opt, cfg);

    model.discriminator.power_iterate(1);
    set_requires_grad(d_params, false);
    const auto dm = ag::Var<float>::constant(patch_weights(model.config, batch.region));
    obj.l_g_sn = gen_adv_loss(model.discriminator.forward(obj.trace.final_image()), dm);
    obj.total = ag::add(obj.total, obj.l_g_sn);
  }

  LossBreakdown b;
  try {
    b = total_generator_loss(partial.l_tsd, partial.l_trg, scalar_of(obj.l_g_sn), partial.l_d_sn);
  } catch (const NumericError& e) {
    partial.l_g_sn = scalar_of(obj.l_g_sn);
    throw TrainingDiverged(step, partial, e.component(), e.what());
  }
  ag::backward(obj.total);
  set_requires_grad(d_params, true);
  adam_update(g_params, state.g_opt, cfg);

  require_finite_params(g_params, step, b);
  require_finite_params(d_params, step, b);
  ++state.step;
  return b;
}

std::string metrics_json_line(int64_t step, const LossBreakdown& b, double wall_ms) {
  nlohmann::json j{{"step", step},         {"l_tsd", b.l_tsd},     {"l_trg", b.l_trg},
                   {"l_g_sn", b.l_g_sn},   {"l_d_sn", b.l_d_sn},   {"l_g_total", b.l_g_total},
                   {"wall_ms", wall_ms}};
  return j.dump();
}

namespace {

Dataset prepared(const Dataset& dataset, int size) {
  Dataset out;
  out.tau = dataset.tau;
  out.seed = dataset.seed;
  for (const auto& s : dataset.samples) {
    out.samples.push_back(s.image.height() == size && s.image.width() == size
                              ? s
                              : resize_sample(s, size, size));
  }
  return out;
}

}  // namespace

void continue_training(TrainState& state, const TrainConfig& cfg, const Dataset& dataset,
                       const TrainingSink& sink) {
  cfg.validate();
  if (dataset.empty()) throw InvalidArgument("training dataset is empty");
  const Dataset data = prepared(dataset, cfg.image_size);
  const auto start = std::chrono::steady_clock::now();
  for (int e = 0; e < cfg.epochs; ++e) {
    const uint64_t shuffle_seed = state.rng();
    // Every sample is visited once per epoch, so the trailing partial batch
    // is kept.
    for (const auto& indices :
         plan_batches(data.size(), static_cast<size_t>(cfg.batch_size), shuffle_seed,
                      BatchMode::kEval)) {
      const Batch<float> batch = collate<float>(data, indices);
      const LossBreakdown b = train_step(state, batch, cfg);
      const double wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
              .count();
      if (sink.metrics) *sink.metrics << metrics_json_line(state.step, b, wall_ms) << '\n';
      if (sink.on_step) sink.on_step(state, b);
    }
    ++state.epoch;
    if (!sink.checkpoint_dir.empty()) save_checkpoint(sink.checkpoint_dir, state);
    spdlog::debug("epoch {} done at step {}", state.epoch, state.step);
  }
  if (sink.metrics) sink.metrics->flush();
}

TrainState run_training(const TrainConfig& cfg, const Dataset& dataset, const TrainingSink& sink) {
  cfg.validate();
  if (dataset.empty()) throw InvalidArgument("training dataset is empty");
  TrainState state = TrainState::initial(cfg);
  if (cfg.epochs == 0) {
    if (!sink.checkpoint_dir.empty()) save_checkpoint(sink.checkpoint_dir, state);
    return state;
  }
  continue_training(state, cfg, dataset, sink);
  return state;
}

}  // namespace strokeless
