#pragma once

#include <cstdint>
#include <vector>

#include "strokeless/networks.hpp"

namespace strokeless {

/// Generator cascade plus discriminator under one configuration.
template <class T>
struct Model {
  ModelConfig config;
  GeneratorWeights<T> generator;
  Discriminator<T> discriminator;

  static Model initialized(const ModelConfig& cfg, uint64_t seed);
  static Model zeros(const ModelConfig& cfg);

  DiscriminatorConfig discriminator_config() const;
};

DiscriminatorConfig discriminator_config_for(const ModelConfig& cfg);

/// Per-unit inference outputs at the input's original size.
/// strokes is empty for detector-free configurations.
struct CascadeOutput {
  std::vector<StrokeMask> strokes;
  std::vector<ImageTensor> erased;

  const ImageTensor& final_image() const { return erased.back(); }
  const StrokeMask* final_strokes() const { return strokes.empty() ? nullptr : &strokes.back(); }
};

/// Runs the cascade on one image without recording gradients. Inputs whose
/// sides are not multiples of the network stride are reflect-padded (mask
/// zero-padded) and outputs cropped back. pad_multiple 0 selects the
/// generator stride; other values must be multiples of it.
CascadeOutput run_cascade(const Model<float>& model, const ImageTensor& image,
                          const RegionMask& mask, int pad_multiple = 0);

/// Reflect-pads an image on the bottom/right to the given size.
ImageTensor pad_reflect(const ImageTensor& image, int height, int width);
ImageTensor crop(const ImageTensor& image, int height, int width);

inline int round_up(int v, int multiple) { return (v + multiple - 1) / multiple * multiple; }

}  // namespace strokeless
