#pragma once

#include <span>

#include "strokeless/array.hpp"
#include "strokeless/image.hpp"

namespace strokeless {

/// Stacks equally sized images into an N×3×H×W array.
template <class T>
Array<T> stack_images(std::span<const ImageTensor> images);

/// Stacks equally sized planes into an N×1×H×W array.
template <class T, PlaneKind Kind>
Array<T> stack_planes(std::span<const Plane<Kind>> planes);

/// Extracts batch element n, clamping values into [-1, 1].
template <class T>
ImageTensor image_from_batch(const Array<T>& batch, int64_t n);

/// Extracts channel 0 of batch element n, clamping into [0, 1].
template <class T>
StrokeMask stroke_from_batch(const Array<T>& batch, int64_t n);

}  // namespace strokeless
