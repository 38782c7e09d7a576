#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "strokeless/dataset.hpp"
#include "strokeless/losses.hpp"
#include "strokeless/model.hpp"

namespace strokeless {

struct TrainConfig {
  int batch_size = 16;
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double adam_eps = 1e-8;
  int epochs = 10;
  int image_size = 256;
  Ablation ablation = Ablation::kCascade;
  int cascade_units = 2;
  uint64_t seed = 42;
  LossHyperParams loss;

  // Network widths. Defaults are the full-size architecture.
  int base_channels = 32;
  int levels = 5;
  std::vector<int> disc_channels{64, 128, 256, 256, 256, 256};
  int disc_kernel = 5;
  bool mask_branch_normalized = true;

  /// For this many initial steps the stroke term uses binary cross-entropy
  /// instead of L1. Under L1 alone a small detector tends to collapse to an
  /// all-zero map before it learns any discriminative feature.
  int detector_warmup_steps = 0;

  /// Diagnostic switch: false drops the discriminator and both hinge terms.
  bool adversarial = true;

  ModelConfig model_config() const;
  void validate() const;
};

/// Adam first/second moments, one pair per parameter in list order.
struct AdamState {
  std::vector<Array<float>> m;
  std::vector<Array<float>> v;
  int64_t t = 0;

  static AdamState zeros_like(const std::vector<NamedParameter<float>>& params);
};

struct TrainState {
  int64_t step = 0;
  int64_t epoch = 0;
  Model<float> model;
  AdamState g_opt;
  AdamState d_opt;
  std::mt19937_64 rng;

  static TrainState initial(const TrainConfig& cfg);
};

class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(int64_t step, LossBreakdown breakdown, const std::string& component,
                   const std::string& what);
  int64_t step() const noexcept { return step_; }
  const LossBreakdown& breakdown() const noexcept { return breakdown_; }

 private:
  int64_t step_;
  LossBreakdown breakdown_;
};

/// Generator-side graph for one batch: cascade outputs plus the three loss
/// terms. l_g_sn is undefined when adversarial is false.
template <class T>
struct GeneratorObjective {
  CascadeTrace<T> trace;
  ag::Var<T> l_tsd;
  ag::Var<T> l_trg;
  ag::Var<T> l_g_sn;
  ag::Var<T> total;
};

/// Patch weights for the discriminator scores: the D_M branch for weighted
/// configurations, ones otherwise.
template <class T>
Array<T> patch_weights(const ModelConfig& cfg, const Array<T>& region);

/// stroke_bce swaps the L1 stroke term for stroke_bce_loss.
template <class T>
GeneratorObjective<T> generator_objective(const Model<T>& model, const Batch<T>& batch,
                                          const LossHyperParams& hp, bool adversarial,
                                          bool stroke_bce = false);

template <class T>
ag::Var<T> discriminator_objective(const Model<T>& model, const Batch<T>& batch,
                                   const ag::Var<T>& fake);

/// One discriminator update followed by one generator update.
LossBreakdown train_step(TrainState& state, const Batch<float>& batch, const TrainConfig& cfg);

struct TrainingSink {
  /// Overwritten at every epoch end; empty disables checkpointing.
  std::filesystem::path checkpoint_dir;
  /// Receives one JSON object per step.
  std::ostream* metrics = nullptr;
  std::function<void(const TrainState&, const LossBreakdown&)> on_step;
};

/// epochs · ⌈N / batch_size⌉ steps over the dataset, resized to
/// cfg.image_size when needed.
TrainState run_training(const TrainConfig& cfg, const Dataset& dataset, const TrainingSink& sink);

/// Continues from an existing state for cfg.epochs more epochs.
void continue_training(TrainState& state, const TrainConfig& cfg, const Dataset& dataset,
                       const TrainingSink& sink);

std::string metrics_json_line(int64_t step, const LossBreakdown& b, double wall_ms);

}  // namespace strokeless
