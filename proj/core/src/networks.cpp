#include "strokeless/networks.hpp"

#include <Eigen/Core>
#include <cmath>

namespace strokeless {
namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <class T>
void normalize_in_place(Eigen::Ref<Vec<T>> v) {
  const T n = v.norm();
  if (n > T(1e-12)) v /= n;
}

void require_channels(const Shape& s, int64_t expected, const char* what) {
  if (s.size() != 4 || s[1] != expected) {
    throw InvalidArgument(std::string(what) + ": expected " + std::to_string(expected) +
                          " input channels, got shape " + shape_string(s));
  }
}

std::string unit_suffix(size_t u) { return u == 0 ? "" : std::to_string(u + 1); }

}  // namespace

void require_spatial_multiple(int64_t h, int64_t w, int64_t multiple, const char* what) {
  if (h <= 0 || w <= 0 || h % multiple != 0 || w % multiple != 0) {
    throw InvalidArgument(std::string(what) + ": spatial size " + std::to_string(h) + "x" +
                          std::to_string(w) + " is not divisible by " + std::to_string(multiple));
  }
}

int UNetConfig::encoder_channels(int stage) const {
  return base_channels * (1 << std::min(stage, 3));
}

void UNetConfig::validate() const {
  if (levels < 1) throw InvalidArgument("UNetConfig: levels must be >= 1");
  if (base_channels < 1) throw InvalidArgument("UNetConfig: base_channels must be >= 1");
  if (first_kernel != 3 && first_kernel != 5) {
    throw InvalidArgument("UNetConfig: first_kernel must be 3 or 5");
  }
  if (in_channels < 1 || out_channels < 1) throw InvalidArgument("UNetConfig: bad channel count");
}

template <class T>
ConvLayer<T>::ConvLayer(int in_channels, int out_channels, int kernel, int stride_, int pad_)
    : weight(ag::Var<T>::parameter(Array<T>(Shape{out_channels, in_channels, kernel, kernel}))),
      bias(ag::Var<T>::parameter(Array<T>(Shape{out_channels}))),
      stride(stride_),
      pad(pad_) {}

template <class T>
ConvLayer<T>::ConvLayer(const ConvLayer& other)
    : weight(ag::Var<T>::parameter(other.weight.value())),
      bias(ag::Var<T>::parameter(other.bias.value())),
      stride(other.stride),
      pad(other.pad) {
  weight.set_requires_grad(other.weight.requires_grad());
  bias.set_requires_grad(other.bias.requires_grad());
}

template <class T>
ConvLayer<T>& ConvLayer<T>::operator=(const ConvLayer& other) {
  if (this != &other) {
    ConvLayer copy(other);
    *this = std::move(copy);
  }
  return *this;
}

template <class T>
void ConvLayer<T>::init_uniform(std::mt19937_64& rng, double gain) {
  const auto& s = weight.shape();
  const double fan_in = static_cast<double>(s[1] * s[2] * s[3]);
  const double bound = gain / std::sqrt(fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : weight.mutable_value().values()) v = static_cast<T>(dist(rng));
  bias.mutable_value().fill(T{0});
}

template <class T>
UNet<T>::UNet(UNetConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  const int levels = cfg_.levels;
  for (int k = 0; k < levels; ++k) {
    const int in = k == 0 ? cfg_.in_channels : cfg_.encoder_channels(k - 1);
    const int kernel = k == 0 ? cfg_.first_kernel : 3;
    encoder_.emplace_back(in, cfg_.encoder_channels(k), kernel, 2, kernel / 2);
  }
  decoder_.resize(static_cast<size_t>(levels));
  int carried = cfg_.encoder_channels(levels - 1);
  for (int k = levels - 1; k >= 0; --k) {
    const int skip = k > 0 ? cfg_.encoder_channels(k - 1) : cfg_.in_channels;
    const int out = k > 0 ? cfg_.encoder_channels(k - 1) : cfg_.encoder_channels(0);
    decoder_[static_cast<size_t>(k)] = ConvLayer<T>(carried + skip, out, 3, 1, 1);
    carried = out;
  }
  head_ = ConvLayer<T>(carried, cfg_.out_channels, 3, 1, 1);
}

template <class T>
UNet<T>::UNet(UNetConfig cfg, std::mt19937_64& rng) : UNet(cfg) {
  // He-uniform for rectified hidden layers, LeCun-uniform for the head.
  for (auto& l : encoder_) l.init_uniform(rng, std::sqrt(6.0));
  for (int k = cfg_.levels - 1; k >= 0; --k) {
    decoder_[static_cast<size_t>(k)].init_uniform(rng, std::sqrt(6.0));
  }
  head_.init_uniform(rng, std::sqrt(3.0));
}

template <class T>
void UNet<T>::zero() {
  for (auto& p : parameters("")) p.var.mutable_value().fill(T{0});
}

template <class T>
ag::Var<T> UNet<T>::forward(const ag::Var<T>& input) const {
  require_channels(input.shape(), cfg_.in_channels, "UNet::forward");
  require_spatial_multiple(input.dim(2), input.dim(3), int64_t{1} << cfg_.levels,
                           "UNet::forward");
  std::vector<ag::Var<T>> skips;
  skips.reserve(encoder_.size());
  ag::Var<T> x = input;
  for (const auto& layer : encoder_) {
    x = ag::leaky_relu(layer(x), T(0.2));
    skips.push_back(x);
  }
  for (int k = cfg_.levels - 1; k >= 0; --k) {
    const ag::Var<T>& skip = k > 0 ? skips[static_cast<size_t>(k - 1)] : input;
    x = ag::relu(decoder_[static_cast<size_t>(k)](
        ag::concat_channels<T>({ag::upsample_nearest2x(x), skip})));
  }
  x = head_(x);
  return cfg_.output_activation == Activation::kSigmoid ? ag::sigmoid(x) : ag::tanh(x);
}

template <class T>
std::vector<NamedParameter<T>> UNet<T>::parameters(const std::string& prefix) const {
  std::vector<NamedParameter<T>> out;
  auto push = [&](const std::string& name, const ConvLayer<T>& l) {
    out.push_back({prefix + name + ".weight", l.weight});
    out.push_back({prefix + name + ".bias", l.bias});
  };
  for (size_t k = 0; k < encoder_.size(); ++k) push("enc" + std::to_string(k), encoder_[k]);
  for (size_t k = 0; k < decoder_.size(); ++k) push("dec" + std::to_string(k), decoder_[k]);
  push("head", head_);
  return out;
}

UNetConfig detector_config(int base_channels, int levels, int mask_channels) {
  UNetConfig c;
  c.in_channels = 3 + mask_channels;
  c.out_channels = 1;
  c.base_channels = base_channels;
  c.levels = levels;
  c.first_kernel = 3;
  c.output_activation = Activation::kSigmoid;
  return c;
}

UNetConfig remover_config(int base_channels, int levels, int mask_channels) {
  UNetConfig c;
  c.in_channels = 3 + mask_channels;
  c.out_channels = 3;
  c.base_channels = base_channels;
  c.levels = levels;
  c.first_kernel = 5;
  c.output_activation = Activation::kTanh;
  return c;
}

template <class T>
ag::Var<T> tsdnet_forward(const UNet<T>& net, const ag::Var<T>& image,
                          const ag::Var<T>& extra_masks) {
  if (net.config().output_activation != Activation::kSigmoid) {
    throw InvalidArgument("tsdnet_forward: network does not have a sigmoid head");
  }
  if (extra_masks.value().rank() != 4 || extra_masks.dim(1) < 1 || extra_masks.dim(1) > 2) {
    throw InvalidArgument("tsdnet_forward: expected 1 or 2 mask channels, got " +
                          shape_string(extra_masks.shape()));
  }
  return net.forward(ag::concat_channels<T>({image, extra_masks}));
}

template <class T>
ag::Var<T> trgnet_forward(const UNet<T>& net, const ag::Var<T>& image, const ag::Var<T>& m,
                          const ag::Var<T>& ms) {
  if (net.config().output_activation != Activation::kTanh) {
    throw InvalidArgument("trgnet_forward: network does not have a tanh head");
  }
  if (ms.defined()) return net.forward(ag::concat_channels<T>({image, m, ms}));
  return net.forward(ag::concat_channels<T>({image, m}));
}

std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::kBaseline: return "baseline";
    case Ablation::kWd: return "wd";
    case Ablation::kTsdnet: return "tsdnet";
    case Ablation::kWdTsdnet: return "wd_tsdnet";
    case Ablation::kCascade: return "cascade";
  }
  return "cascade";
}

Ablation parse_ablation(const std::string& name) {
  for (Ablation a : {Ablation::kBaseline, Ablation::kWd, Ablation::kTsdnet, Ablation::kWdTsdnet,
                     Ablation::kCascade}) {
    if (ablation_name(a) == name) return a;
  }
  if (name == "wd+tsdnet") return Ablation::kWdTsdnet;
  throw InvalidArgument("unknown ablation '" + name +
                        "' (expected baseline, wd, tsdnet, wd_tsdnet, cascade)");
}

int ModelConfig::size_multiple() const {
  const int d = static_cast<int>(disc_channels.size());
  return 1 << std::max(levels, d);
}

void ModelConfig::validate() const {
  if (cascade_units < 1 || cascade_units > 3) {
    throw InvalidArgument("cascade_units must be 1, 2 or 3");
  }
  if (levels < 1 || base_channels < 1) throw InvalidArgument("bad generator width/depth");
  if (disc_channels.empty()) throw InvalidArgument("discriminator needs at least one layer");
  for (int c : disc_channels) {
    if (c < 1) throw InvalidArgument("discriminator channel counts must be positive");
  }
  if (disc_kernel < 1 || disc_kernel % 2 == 0) {
    throw InvalidArgument("discriminator kernel must be odd");
  }
}

template <class T>
GeneratorWeights<T>::GeneratorWeights(const ModelConfig& cfg) {
  build(cfg, nullptr);
}

template <class T>
GeneratorWeights<T>::GeneratorWeights(const ModelConfig& cfg, std::mt19937_64& rng) {
  build(cfg, &rng);
}

template <class T>
void GeneratorWeights<T>::build(const ModelConfig& cfg, std::mt19937_64* rng) {
  cfg.validate();
  const int units = cfg.units();
  for (int u = 0; u < units; ++u) {
    CascadeUnit<T> unit;
    if (cfg.uses_detector()) {
      const UNetConfig dc = detector_config(cfg.base_channels, cfg.levels, u == 0 ? 1 : 2);
      unit.detector = rng ? UNet<T>(dc, *rng) : UNet<T>(dc);
    }
    const UNetConfig rc = remover_config(cfg.base_channels, cfg.levels, cfg.uses_detector() ? 2 : 1);
    unit.remover = rng ? UNet<T>(rc, *rng) : UNet<T>(rc);
    units_.push_back(std::move(unit));
  }
}

template <class T>
std::vector<NamedParameter<T>> GeneratorWeights<T>::parameters() const {
  std::vector<NamedParameter<T>> out;
  for (size_t u = 0; u < units_.size(); ++u) {
    if (units_[u].detector) {
      auto p = units_[u].detector->parameters("gd" + unit_suffix(u) + ".");
      out.insert(out.end(), p.begin(), p.end());
    }
    auto p = units_[u].remover.parameters("gr" + unit_suffix(u) + ".");
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

template <class T>
CascadeTrace<T> cascade_forward(const GeneratorWeights<T>& gw, const ag::Var<T>& image,
                                const ag::Var<T>& m) {
  if (image.value().rank() != 4 || m.value().rank() != 4 || image.dim(0) != m.dim(0) ||
      image.dim(2) != m.dim(2) || image.dim(3) != m.dim(3) || m.dim(1) != 1) {
    throw InvalidArgument("cascade_forward: image " + shape_string(image.shape()) +
                          " and mask " + shape_string(m.shape()) + " are inconsistent");
  }
  CascadeTrace<T> trace;
  ag::Var<T> current = image;
  ag::Var<T> previous_strokes;
  for (size_t u = 0; u < gw.units(); ++u) {
    const CascadeUnit<T>& unit = gw.unit(u);
    ag::Var<T> strokes;
    if (unit.detector) {
      const ag::Var<T> masks =
          previous_strokes.defined() ? ag::concat_channels<T>({m, previous_strokes}) : m;
      strokes = tsdnet_forward(*unit.detector, current, masks);
      trace.strokes.push_back(strokes);
    }
    current = trgnet_forward(unit.remover, current, m, strokes);
    trace.erased.push_back(current);
    previous_strokes = strokes;
  }
  return trace;
}

template <class T>
Discriminator<T>::Discriminator(DiscriminatorConfig cfg) : cfg_(std::move(cfg)) {
  int in = cfg_.in_channels;
  for (int c : cfg_.channels) {
    Layer l;
    l.conv = ConvLayer<T>(in, c, cfg_.kernel, 2, cfg_.kernel / 2);
    l.u = Array<T>(Shape{c});
    l.u[0] = T{1};
    l.v = Array<T>(Shape{int64_t{in} * cfg_.kernel * cfg_.kernel});
    layers_.push_back(std::move(l));
    in = c;
  }
}

template <class T>
Discriminator<T>::Discriminator(DiscriminatorConfig cfg, std::mt19937_64& rng)
    : Discriminator(std::move(cfg)) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& l : layers_) {
    l.conv.init_uniform(rng, std::sqrt(6.0));
    for (auto& v : l.u.values()) v = static_cast<T>(normal(rng));
    Eigen::Map<Vec<T>> u(l.u.data(), l.u.size());
    normalize_in_place<T>(u);
  }
  power_iterate(1);
}

template <class T>
void Discriminator<T>::power_iterate(int steps) {
  for (auto& l : layers_) {
    const auto& w = l.conv.weight.value();
    const int64_t rows = w.dim(0), cols = w.size() / rows;
    Eigen::Map<const RowMat<T>> wm(w.data(), rows, cols);
    Eigen::Map<Vec<T>> u(l.u.data(), rows);
    Eigen::Map<Vec<T>> v(l.v.data(), cols);
    for (int s = 0; s < steps; ++s) {
      Vec<T> nv = wm.transpose() * u;
      if (nv.norm() <= T(1e-12)) break;
      v = nv / nv.norm();
      Vec<T> nu = wm * v;
      if (nu.norm() <= T(1e-12)) break;
      u = nu / nu.norm();
    }
  }
}

template <class T>
T Discriminator<T>::sigma_estimate(size_t layer) const {
  const Layer& l = layers_.at(layer);
  const auto& w = l.conv.weight.value();
  const int64_t rows = w.dim(0), cols = w.size() / rows;
  Eigen::Map<const RowMat<T>> wm(w.data(), rows, cols);
  Eigen::Map<const Vec<T>> u(l.u.data(), rows);
  Eigen::Map<const Vec<T>> v(l.v.data(), cols);
  return u.dot(wm * v);
}

template <class T>
ag::Var<T> Discriminator<T>::forward(const ag::Var<T>& image) const {
  require_channels(image.shape(), cfg_.in_channels, "Discriminator::forward");
  require_spatial_multiple(image.dim(2), image.dim(3), int64_t{1} << layers_.size(),
                           "Discriminator::forward");
  ag::Var<T> x = image;
  for (size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    const ag::Var<T> w = ag::spectral_normalize(l.conv.weight, l.u, l.v);
    x = ag::conv2d(x, w, l.conv.bias, l.conv.stride, l.conv.pad);
    if (i + 1 < layers_.size()) x = ag::leaky_relu(x, T(0.2));
  }
  return x;
}

template <class T>
std::vector<NamedParameter<T>> Discriminator<T>::parameters(const std::string& prefix) const {
  std::vector<NamedParameter<T>> out;
  for (size_t i = 0; i < layers_.size(); ++i) {
    const std::string base = prefix + "l" + std::to_string(i);
    out.push_back({base + ".weight", layers_[i].conv.weight});
    out.push_back({base + ".bias", layers_[i].conv.bias});
  }
  return out;
}

template <class T>
Array<T> mask_weight_branch(const Array<T>& mask, int layers, int kernel, bool normalized) {
  if (mask.rank() != 4 || mask.dim(1) != 1) {
    throw InvalidArgument("mask_weight_branch: expected N×1×H×W mask, got " +
                          shape_string(mask.shape()));
  }
  require_spatial_multiple(mask.dim(2), mask.dim(3), int64_t{1} << layers, "mask_weight_branch");
  const T value = normalized ? T{1} / static_cast<T>(kernel * kernel) : T{1};
  const Array<T> w(Shape{1, 1, kernel, kernel}, value);
  const Array<T> b(Shape{1});
  Array<T> x = mask;
  for (int i = 0; i < layers; ++i) x = ag::conv2d_forward(x, w, b, 2, kernel / 2);
  return x;
}

#define STROKELESS_INSTANTIATE(T)                                                          \
  template struct ConvLayer<T>;                                                            \
  template class UNet<T>;                                                                  \
  template class GeneratorWeights<T>;                                                      \
  template class Discriminator<T>;                                                         \
  template ag::Var<T> tsdnet_forward<T>(const UNet<T>&, const ag::Var<T>&,                 \
                                        const ag::Var<T>&);                                \
  template ag::Var<T> trgnet_forward<T>(const UNet<T>&, const ag::Var<T>&,                 \
                                        const ag::Var<T>&, const ag::Var<T>&);             \
  template CascadeTrace<T> cascade_forward<T>(const GeneratorWeights<T>&, const ag::Var<T>&, \
                                              const ag::Var<T>&);                          \
  template Array<T> mask_weight_branch<T>(const Array<T>&, int, int, bool);

STROKELESS_INSTANTIATE(float)
STROKELESS_INSTANTIATE(double)

#undef STROKELESS_INSTANTIATE

}  // namespace strokeless
