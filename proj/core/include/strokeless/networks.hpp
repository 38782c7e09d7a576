#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "strokeless/autograd.hpp"
#include "strokeless/image.hpp"

namespace strokeless {

enum class Activation { kSigmoid, kTanh };

struct UNetConfig {
  int in_channels = 4;
  int out_channels = 1;
  int base_channels = 32;
  int levels = 5;
  int first_kernel = 3;
  Activation output_activation = Activation::kSigmoid;

  /// Channel width of encoder stage k: base · 2^min(k, 3).
  int encoder_channels(int stage) const;
  void validate() const;
  friend bool operator==(const UNetConfig&, const UNetConfig&) = default;
};

template <class T>
struct NamedParameter {
  std::string name;
  ag::Var<T> var;
};

template <class T>
struct ConvLayer {
  ag::Var<T> weight;
  ag::Var<T> bias;
  int stride = 1;
  int pad = 0;

  ConvLayer() = default;
  ConvLayer(int in_channels, int out_channels, int kernel, int stride, int pad);
  ConvLayer(const ConvLayer& other);
  ConvLayer& operator=(const ConvLayer& other);
  ConvLayer(ConvLayer&&) noexcept = default;
  ConvLayer& operator=(ConvLayer&&) noexcept = default;

  int kernel() const { return static_cast<int>(weight.dim(2)); }
  ag::Var<T> operator()(const ag::Var<T>& x) const {
    return ag::conv2d(x, weight, bias, stride, pad);
  }
  void init_uniform(std::mt19937_64& rng, double gain);
};

/// Encoder of stride-2 convolutions with leaky rectifiers, decoder of
/// nearest-neighbor upsampling + 3×3 convolution over [upsampled, skip],
/// and a 3×3 output head. The last decoder stage's skip is the raw input.
/// Copies are deep.
template <class T>
class UNet {
 public:
  UNet() = default;
  /// Zero-initialized weights.
  explicit UNet(UNetConfig cfg);
  UNet(UNetConfig cfg, std::mt19937_64& rng);

  const UNetConfig& config() const noexcept { return cfg_; }

  /// input: N × in_channels × H × W with H, W divisible by 2^levels.
  ag::Var<T> forward(const ag::Var<T>& input) const;

  std::vector<NamedParameter<T>> parameters(const std::string& prefix) const;
  const ConvLayer<T>& first_layer() const { return encoder_.front(); }
  void zero();

 private:
  UNetConfig cfg_;
  std::vector<ConvLayer<T>> encoder_;
  std::vector<ConvLayer<T>> decoder_;
  ConvLayer<T> head_;
};

UNetConfig detector_config(int base_channels, int levels, int mask_channels);
UNetConfig remover_config(int base_channels, int levels, int mask_channels);

/// TSDNet: sigmoid stroke map from image ⊕ mask channels (1 or 2).
template <class T>
ag::Var<T> tsdnet_forward(const UNet<T>& net, const ag::Var<T>& image,
                          const ag::Var<T>& extra_masks);

/// TRGNet: tanh image from image ⊕ region mask ⊕ stroke map. The stroke
/// map may be undefined for mask-only removers.
template <class T>
ag::Var<T> trgnet_forward(const UNet<T>& net, const ag::Var<T>& image, const ag::Var<T>& m,
                          const ag::Var<T>& ms);

enum class Ablation { kBaseline, kWd, kTsdnet, kWdTsdnet, kCascade };

std::string ablation_name(Ablation a);
Ablation parse_ablation(const std::string& name);

struct ModelConfig {
  Ablation ablation = Ablation::kCascade;
  int cascade_units = 2;
  int base_channels = 32;
  int levels = 5;
  std::vector<int> disc_channels{64, 128, 256, 256, 256, 256};
  int disc_kernel = 5;
  bool mask_branch_normalized = true;

  bool uses_detector() const {
    return ablation != Ablation::kBaseline && ablation != Ablation::kWd;
  }
  bool weighted_discriminator() const {
    return ablation == Ablation::kWd || ablation == Ablation::kWdTsdnet ||
           ablation == Ablation::kCascade;
  }
  int units() const { return ablation == Ablation::kCascade ? cascade_units : 1; }
  /// Spatial dims must be multiples of this for both generator and D.
  int size_multiple() const;
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <class T>
struct CascadeUnit {
  std::optional<UNet<T>> detector;
  UNet<T> remover;
};

/// Per-unit outputs. strokes is empty when the configuration has no
/// detector; otherwise strokes[u] feeds erased[u].
template <class T>
struct CascadeTrace {
  std::vector<ag::Var<T>> strokes;
  std::vector<ag::Var<T>> erased;

  const ag::Var<T>& final_image() const { return erased.back(); }
};

/// The four (or fewer, per ablation) parameter-disjoint subnets.
template <class T>
class GeneratorWeights {
 public:
  GeneratorWeights() = default;
  explicit GeneratorWeights(const ModelConfig& cfg);
  GeneratorWeights(const ModelConfig& cfg, std::mt19937_64& rng);

  size_t units() const noexcept { return units_.size(); }
  CascadeUnit<T>& unit(size_t i) { return units_.at(i); }
  const CascadeUnit<T>& unit(size_t i) const { return units_.at(i); }

  UNet<T>& gd() { return *units_.at(0).detector; }
  UNet<T>& gr() { return units_.at(0).remover; }
  UNet<T>& gd2() { return *units_.at(1).detector; }
  UNet<T>& gr2() { return units_.at(1).remover; }

  std::vector<NamedParameter<T>> parameters() const;

 private:
  void build(const ModelConfig& cfg, std::mt19937_64* rng);
  std::vector<CascadeUnit<T>> units_;
};

/// ms = G_D(I,M); ite = G_R(I,M,ms); then per extra unit
/// ms' = G_D'(ite,M,ms); ite' = G_R'(ite,M,ms').
template <class T>
CascadeTrace<T> cascade_forward(const GeneratorWeights<T>& gw, const ag::Var<T>& image,
                                const ag::Var<T>& m);

struct DiscriminatorConfig {
  std::vector<int> channels{64, 128, 256, 256, 256, 256};
  int kernel = 5;
  int in_channels = 3;
};

/// Patch discriminator: stride-2 k×k convolutions, leaky rectifier 0.2
/// between layers, linear last layer, each kernel spectrally normalized.
template <class T>
class Discriminator {
 public:
  struct Layer {
    ConvLayer<T> conv;
    Array<T> u;  // left singular-vector estimate, size Co
    Array<T> v;  // right singular-vector estimate, size Ci·k·k
  };

  Discriminator() = default;
  explicit Discriminator(DiscriminatorConfig cfg);
  Discriminator(DiscriminatorConfig cfg, std::mt19937_64& rng);

  const DiscriminatorConfig& config() const noexcept { return cfg_; }
  size_t layer_count() const noexcept { return layers_.size(); }
  const Layer& layer(size_t i) const { return layers_.at(i); }
  Layer& layer(size_t i) { return layers_.at(i); }

  /// image: N×3×H×W with H, W divisible by 2^layers. Returns
  /// N×C×(H/2^L)×(W/2^L) scores.
  ag::Var<T> forward(const ag::Var<T>& image) const;

  /// One power-iteration step per layer (training-time update).
  void power_iterate(int steps = 1);
  /// σ estimate uᵀ W v per layer.
  T sigma_estimate(size_t layer) const;

  std::vector<NamedParameter<T>> parameters(const std::string& prefix) const;

 private:
  DiscriminatorConfig cfg_;
  std::vector<Layer> layers_;
};

/// D_M: `layers` stride-2 k×k single-channel convolutions with all-ones
/// kernels and identity activation; each layer divided by k² when
/// normalized. mask: N×1×H×W.
template <class T>
Array<T> mask_weight_branch(const Array<T>& mask, int layers, int kernel = 5,
                            bool normalized = true);

void require_spatial_multiple(int64_t h, int64_t w, int64_t multiple, const char* what);

}  // namespace strokeless
