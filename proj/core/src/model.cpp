#include "strokeless/model.hpp"

#include "strokeless/batch.hpp"

namespace strokeless {
namespace {

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

DiscriminatorConfig discriminator_config_for(const ModelConfig& cfg) {
  DiscriminatorConfig dc;
  dc.channels = cfg.disc_channels;
  dc.kernel = cfg.disc_kernel;
  dc.in_channels = 3;
  return dc;
}

template <class T>
Model<T> Model<T>::initialized(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  Model m;
  m.config = cfg;
  m.generator = GeneratorWeights<T>(cfg, rng);
  m.discriminator = Discriminator<T>(discriminator_config_for(cfg), rng);
  return m;
}

template <class T>
Model<T> Model<T>::zeros(const ModelConfig& cfg) {
  cfg.validate();
  Model m;
  m.config = cfg;
  m.generator = GeneratorWeights<T>(cfg);
  m.discriminator = Discriminator<T>(discriminator_config_for(cfg));
  return m;
}

template <class T>
DiscriminatorConfig Model<T>::discriminator_config() const {
  return discriminator_config_for(config);
}

template struct Model<float>;
template struct Model<double>;

ImageTensor pad_reflect(const ImageTensor& image, int height, int width) {
  if (height < image.height() || width < image.width()) {
    throw InvalidArgument("pad_reflect: target smaller than image");
  }
  ImageTensor out(height, width);
  for (int c = 0; c < ImageTensor::kChannels; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        out.at(c, y, x) =
            image.at(c, reflect_index(y, image.height()), reflect_index(x, image.width()));
  return out;
}

ImageTensor crop(const ImageTensor& image, int height, int width) {
  if (height > image.height() || width > image.width()) {
    throw InvalidArgument("crop: target larger than image");
  }
  ImageTensor out(height, width);
  for (int c = 0; c < ImageTensor::kChannels; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) out.at(c, y, x) = image.at(c, y, x);
  return out;
}

CascadeOutput run_cascade(const Model<float>& model, const ImageTensor& image,
                          const RegionMask& mask, int pad_multiple) {
  if (image.height() != mask.height() || image.width() != mask.width()) {
    throw InvalidArgument("run_cascade: image and mask sizes differ");
  }
  const int stride = 1 << model.config.levels;
  if (pad_multiple < 0 || (pad_multiple > 0 && pad_multiple % stride != 0)) {
    throw InvalidArgument("run_cascade: pad multiple " + std::to_string(pad_multiple) +
                          " is not a multiple of " + std::to_string(stride));
  }
  const int multiple = pad_multiple > 0 ? pad_multiple : stride;
  const int h = image.height(), w = image.width();
  const int ph = round_up(h, multiple), pw = round_up(w, multiple);

  const ImageTensor padded = (ph == h && pw == w) ? image : pad_reflect(image, ph, pw);
  RegionMask padded_mask(ph, pw, 0.0f);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) padded_mask.at(y, x) = mask.at(y, x);

  ag::NoGradGuard no_grad;
  const auto img = ag::Var<float>::constant(stack_images<float>(std::span(&padded, 1)));
  const auto m = ag::Var<float>::constant(
      stack_planes<float, PlaneKind::kRegion>(std::span(&padded_mask, 1)));
  const CascadeTrace<float> trace = cascade_forward(model.generator, img, m);

  CascadeOutput out;
  for (const auto& s : trace.strokes) {
    StrokeMask full = stroke_from_batch(s.value(), 0);
    StrokeMask cropped(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) cropped.at(y, x) = full.at(y, x);
    out.strokes.push_back(std::move(cropped));
  }
  for (const auto& e : trace.erased) {
    out.erased.push_back(crop(image_from_batch(e.value(), 0), h, w));
  }
  return out;
}

}  // namespace strokeless
