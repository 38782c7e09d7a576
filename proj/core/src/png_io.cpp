#include "strokeless/png_io.hpp"

#include <png.h>

#include <cmath>
#include <fstream>
#include <iterator>

namespace strokeless {
namespace {

struct DecodedPng {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;
};

DecodedPng decode(std::span<const uint8_t> bytes, uint32_t format) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    std::string msg = image.message;
    png_image_free(&image);
    throw DataError("PNG decode failed: " + msg);
  }
  image.format = format;
  DecodedPng out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw DataError("PNG decode failed: " + msg);
  }
  return out;
}

std::vector<uint8_t> encode(const uint8_t* pixels, int width, int height, uint32_t format) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(image, size, 0, pixels, 0, nullptr)) {
    throw DataError(std::string("PNG encode failed: ") + image.message);
  }
  std::vector<uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr)) {
    throw DataError(std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace

std::pair<int, int> png_dimensions(std::span<const uint8_t> bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    std::string msg = image.message;
    png_image_free(&image);
    throw DataError("PNG decode failed: " + msg);
  }
  const std::pair<int, int> dims{static_cast<int>(image.width), static_cast<int>(image.height)};
  png_image_free(&image);
  return dims;
}

float byte_to_unit(uint8_t b) { return static_cast<float>(b) / 127.5f - 1.0f; }

uint8_t unit_to_byte(float v) {
  const float scaled = std::round((v + 1.0f) * 127.5f);
  return static_cast<uint8_t>(std::clamp(scaled, 0.0f, 255.0f));
}

ImageTensor decode_image_png(std::span<const uint8_t> bytes) {
  DecodedPng png = decode(bytes, PNG_FORMAT_RGB);
  std::vector<float> planar(static_cast<size_t>(3) * png.width * png.height);
  const size_t plane = static_cast<size_t>(png.width) * png.height;
  for (size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) planar[c * plane + i] = byte_to_unit(png.pixels[i * 3 + c]);
  }
  return ImageTensor::from_planar(png.height, png.width, std::move(planar));
}

std::vector<uint8_t> encode_image_png(const ImageTensor& image) {
  const size_t plane = static_cast<size_t>(image.pixels());
  std::vector<uint8_t> rgb(plane * 3);
  const auto data = image.data();
  for (size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) rgb[i * 3 + c] = unit_to_byte(data[c * plane + i]);
  }
  return encode(rgb.data(), image.width(), image.height(), PNG_FORMAT_RGB);
}

ImageTensor load_image_png(const std::filesystem::path& path) {
  try {
    return decode_image_png(read_file_bytes(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_image_png(const std::filesystem::path& path, const ImageTensor& image) {
  write_file_bytes(path, encode_image_png(image));
}

template <PlaneKind Kind>
Plane<Kind> decode_mask_png(std::span<const uint8_t> bytes) {
  DecodedPng png = decode(bytes, PNG_FORMAT_GRAY);
  std::vector<float> values(png.pixels.size());
  for (size_t i = 0; i < values.size(); ++i) {
    if constexpr (Kind == PlaneKind::kStroke) {
      values[i] = static_cast<float>(png.pixels[i]) / 255.0f;
    } else {
      values[i] = png.pixels[i] >= 128 ? 1.0f : 0.0f;
    }
  }
  return Plane<Kind>::from_data(png.height, png.width, std::move(values));
}

template <PlaneKind Kind>
Plane<Kind> load_mask_png(const std::filesystem::path& path) {
  try {
    return decode_mask_png<Kind>(read_file_bytes(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

template <PlaneKind Kind>
std::vector<uint8_t> encode_mask_png(const Plane<Kind>& mask) {
  std::vector<uint8_t> gray(static_cast<size_t>(mask.pixels()));
  for (size_t i = 0; i < gray.size(); ++i) {
    gray[i] = static_cast<uint8_t>(std::clamp(std::round(mask[static_cast<int64_t>(i)] * 255.0f),
                                              0.0f, 255.0f));
  }
  return encode(gray.data(), mask.width(), mask.height(), PNG_FORMAT_GRAY);
}

template <PlaneKind Kind>
void save_mask_png(const std::filesystem::path& path, const Plane<Kind>& mask) {
  write_file_bytes(path, encode_mask_png(mask));
}

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::filesystem::path& path, std::span<const uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

#define STROKELESS_MASK_IO(K)                                                          \
  template Plane<K> decode_mask_png<K>(std::span<const uint8_t>);                      \
  template Plane<K> load_mask_png<K>(const std::filesystem::path&);                    \
  template std::vector<uint8_t> encode_mask_png<K>(const Plane<K>&);                   \
  template void save_mask_png<K>(const std::filesystem::path&, const Plane<K>&);

STROKELESS_MASK_IO(PlaneKind::kRegion)
STROKELESS_MASK_IO(PlaneKind::kStroke)
STROKELESS_MASK_IO(PlaneKind::kGtStroke)

#undef STROKELESS_MASK_IO

}  // namespace strokeless
