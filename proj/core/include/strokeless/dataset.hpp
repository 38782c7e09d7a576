#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "strokeless/array.hpp"
#include "strokeless/image.hpp"

namespace strokeless {

/// One paired training record. strokes ⊆ region after build-time clipping.
struct Sample {
  std::string id;
  ImageTensor image;
  ImageTensor clean;
  RegionMask region;
  GtStrokeMask strokes;
  std::vector<Polygon> polygons;
  std::string split = "train";
};

struct Dataset {
  std::vector<Sample> samples;
  float tau = kDefaultStrokeTau;
  uint64_t seed = 0;

  size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
};

struct SynthSpec {
  int count = 16;
  int size = 256;
  uint64_t seed = 42;
  /// Letterforms drawn from this set; see synth_glyphs().
  std::string glyphs = "AEFHIKLMNOCTUVWXYZS0147";
  /// Glyph height range in pixels; 0 selects size/8 .. size/4.
  int min_font_px = 0;
  int max_font_px = 0;
  /// Pen width as a fraction of glyph height.
  double stroke_ratio = 1.0 / 7.0;
  int min_strings = 1;
  int max_strings = 4;
  /// Background gradient endpoints are drawn from this palette when it is
  /// non-empty, otherwise uniformly at random.
  std::vector<std::array<uint8_t, 3>> palette;
  /// Minimum max-channel byte contrast between a stamped pixel and the
  /// background underneath it.
  int min_contrast = 64;

  void validate() const;
};

/// Supported glyph characters.
const std::string& synth_glyphs();

/// Procedural backgrounds with stamped stroke text. strokes is the exact
/// stamped set; region is the rasterized bounding rectangle of each string.
/// Pixel values are 8-bit-representable, so writing and reloading is lossless.
Dataset synth_generate(const SynthSpec& spec);

struct BuildReport {
  Dataset dataset;
  std::map<std::string, int64_t> stroke_pixels;
  std::map<std::string, int64_t> clipped_pixels;
  std::vector<std::string> warnings;
};

/// Reads text/, clean/ and region_masks/ (or polygons/) from pairs_dir,
/// derives stroke masks by thresholding the pair difference at tau, clips
/// them to the region mask, writes stroke_masks/ and manifest.json.
BuildReport build_from_pairs(const std::filesystem::path& pairs_dir, float tau);

/// Writes the fixed directory layout and manifest.json.
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);

/// Loads every sample listed in manifest.json, optionally only one split.
Dataset load_dataset(const std::filesystem::path& dir,
                     const std::optional<std::string>& split = std::nullopt);

/// Assigns each manifest entry to "train" or "test" by a seeded shuffle;
/// round(train_frac · N) samples go to train.
void split_manifest(const std::filesystem::path& manifest, double train_frac, uint64_t seed);

/// Bilinear resize for images, nearest for masks.
Sample resize_sample(const Sample& sample, int height, int width);

enum class BatchMode { kTraining, kEval };

/// Seeded shuffle into batches. Training mode drops a trailing partial batch;
/// eval mode keeps it.
std::vector<std::vector<size_t>> plan_batches(size_t count, size_t batch_size, uint64_t seed,
                                              BatchMode mode, bool shuffle = true);

template <class T>
struct Batch {
  std::vector<std::string> ids;
  Array<T> image;
  Array<T> clean;
  Array<T> region;
  Array<T> strokes;
  int64_t size() const { return static_cast<int64_t>(ids.size()); }
};

template <class T>
Batch<T> collate(const Dataset& dataset, const std::vector<size_t>& indices);

/// Iterates the batches of one pass over the dataset.
template <class T>
class BatchStream {
 public:
  BatchStream(const Dataset& dataset, size_t batch_size, uint64_t shuffle_seed, BatchMode mode);
  std::optional<Batch<T>> next();
  size_t batches() const noexcept { return plan_.size(); }

 private:
  const Dataset* dataset_;
  std::vector<std::vector<size_t>> plan_;
  size_t cursor_ = 0;
};

template <class T>
BatchStream<T> load_batches(const Dataset& dataset, size_t batch_size, uint64_t shuffle_seed,
                            BatchMode mode) {
  return BatchStream<T>(dataset, batch_size, shuffle_seed, mode);
}

std::vector<Polygon> polygons_from_json_text(const std::string& text);
std::string polygons_to_json_text(const std::vector<Polygon>& polygons);

}  // namespace strokeless
