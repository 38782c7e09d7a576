#pragma once

#include <string>
#include <vector>

#include "strokeless/image.hpp"

// Direct-formula reference implementations. Each one is written from the
// metric definition with no shared code path to the library.

namespace strokeless::oracle {

double mae(const ImageTensor& a, const ImageTensor& b);
double psnr(const ImageTensor& a, const ImageTensor& b);
/// Non-separable 11×11 Gaussian window evaluated at every valid position,
/// with moments taken as weighted central sums.
double ssim(const ImageTensor& a, const ImageTensor& b);
double tmae(const StrokeMask& ms, const GtStrokeMask& mgt);

/// Nonzero-winding test of a point; callers pass pixel centers.
bool point_in_polygon(const Polygon& p, double x, double y);
int64_t rasterized_count(const Polygon& p, int height, int width);

}  // namespace strokeless::oracle
