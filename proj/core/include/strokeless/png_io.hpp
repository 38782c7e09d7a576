#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "strokeless/image.hpp"

namespace strokeless {

float byte_to_unit(uint8_t b);
uint8_t unit_to_byte(float v);

/// (width, height) from the header without decoding pixels.
std::pair<int, int> png_dimensions(std::span<const uint8_t> bytes);

/// Decodes any PNG to RGB; grayscale and palette images are expanded.
ImageTensor decode_image_png(std::span<const uint8_t> bytes);
std::vector<uint8_t> encode_image_png(const ImageTensor& image);

ImageTensor load_image_png(const std::filesystem::path& path);
void save_image_png(const std::filesystem::path& path, const ImageTensor& image);

/// Grayscale masks: byte >= 128 reads as 1, else 0.
template <PlaneKind Kind>
Plane<Kind> decode_mask_png(std::span<const uint8_t> bytes);
template <PlaneKind Kind>
Plane<Kind> load_mask_png(const std::filesystem::path& path);

/// value·255 rounded; binary masks write 0 / 255.
template <PlaneKind Kind>
std::vector<uint8_t> encode_mask_png(const Plane<Kind>& mask);
template <PlaneKind Kind>
void save_mask_png(const std::filesystem::path& path, const Plane<Kind>& mask);

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const uint8_t> bytes);

}  // namespace strokeless
