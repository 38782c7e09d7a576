#include <gtest/gtest.h>

#include "oracles.hpp"
#include "strokeless/image.hpp"
#include "strokeless/png_io.hpp"
#include "test_support.hpp"

namespace strokeless {
namespace {

TEST(WeightMatrix, HandValues) {
  RegionMask m(1, 3);
  StrokeMask ms(1, 3);
  m.at(0, 1) = 1;
  ms.at(0, 1) = 1;
  m.at(0, 2) = 1;
  ms.at(0, 2) = 0.5f;
  const WeightMatrix w = compute_weight_matrix(m, ms, 5.0f, 5.0f);
  EXPECT_FLOAT_EQ(w.at(0, 0), 1.0f);
  EXPECT_FLOAT_EQ(w.at(0, 1), 11.0f);
  EXPECT_FLOAT_EQ(w.at(0, 2), 8.5f);
}

TEST(Rasterize, EmptyListGivesEmptyMask) {
  EXPECT_EQ(rasterize_polygons({}, 8, 8).count_nonzero(), 0);
}

TEST(Rasterize, FullRectangleGivesFullMask) {
  const Polygon p{{{0, 0}, {16, 0}, {16, 12}, {0, 12}}};
  EXPECT_EQ(rasterize_polygons(std::vector<Polygon>{p}, 12, 16).count_nonzero(), 16 * 12);
}

TEST(Rasterize, RightTriangleMatchesPixelCenterOracle) {
  const Polygon tri{{{0, 0}, {64, 0}, {0, 64}}};
  const RegionMask m = rasterize_polygons(std::vector<Polygon>{tri}, 64, 64);
  EXPECT_NEAR(static_cast<double>(m.count_nonzero()), 2048.0, 64.0);
  EXPECT_EQ(m.count_nonzero(), oracle::rasterized_count(tri, 64, 64));
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      ASSERT_EQ(m.at(y, x) == 1.0f, oracle::point_in_polygon(tri, x + 0.5, y + 0.5)) << x << "," << y;
}

TEST(Rasterize, RandomPolygonsMatchOracle) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 40);
  for (int k = 0; k < 25; ++k) {
    Polygon p;
    for (int v = 0; v < 3 + k % 5; ++v) p.vertices.push_back({u(rng), u(rng) * 0.75});
    EXPECT_EQ(rasterize_polygons(std::vector<Polygon>{p}, 30, 40).count_nonzero(),
              oracle::rasterized_count(p, 30, 40))
        << "polygon " << k;
  }
}

TEST(Rasterize, UnionOfOverlappingPolygons) {
  const Polygon a{{{0, 0}, {6, 0}, {6, 6}, {0, 6}}};
  const Polygon b{{{3, 3}, {9, 3}, {9, 9}, {3, 9}}};
  EXPECT_EQ(rasterize_polygons(std::vector<Polygon>{a, b}, 10, 10).count_nonzero(), 36 + 36 - 9);
}

TEST(ValidatePolygon, RejectsDegenerateAndOutOfBounds) {
  EXPECT_THROW(validate_polygon(Polygon{{{0, 0}, {1, 1}}}, 8, 8), InvalidArgument);
  EXPECT_THROW(validate_polygon(Polygon{{{0, 0}, {9, 0}, {0, 4}}}, 8, 8), InvalidArgument);
  EXPECT_THROW(validate_polygon(Polygon{{{0, -1}, {4, 0}, {0, 4}}}, 8, 8), InvalidArgument);
  EXPECT_NO_THROW(validate_polygon(Polygon{{{0, 0}, {8, 0}, {0, 8}}}, 8, 8));
}

TEST(Binarize, IdenticalPairGivesEmptyMask) {
  std::mt19937_64 rng(3);
  const ImageTensor a = testing::random_image(9, 7, rng);
  EXPECT_EQ(binarize_stroke_diff(a, a, 0.098f).count_nonzero(), 0);
}

TEST(Binarize, SingleChannelDifferenceMarksExactlyThatPixel) {
  ImageTensor a(4, 4, 0.0f), b(4, 4, 0.0f);
  b.at(1, 2, 3) = 1.0f;  // 0.5 on the unit scale
  const GtStrokeMask m = binarize_stroke_diff(a, b, 0.098f);
  EXPECT_EQ(m.count_nonzero(), 1);
  EXPECT_EQ(m.at(2, 3), 1.0f);
}

TEST(Binarize, DifferenceExactlyTauIsNotAStroke) {
  ImageTensor a(2, 2, 0.0f), b(2, 2, 0.0f);
  b.at(0, 0, 0) = 0.25f;  // 0.125 on the unit scale
  EXPECT_EQ(binarize_stroke_diff(a, b, 0.125f).count_nonzero(), 0);
  EXPECT_EQ(binarize_stroke_diff(a, b, 0.124f).count_nonzero(), 1);
}

TEST(Composite, MaskExtremesAndHalf) {
  std::mt19937_64 rng(6);
  const ImageTensor i = testing::random_image(6, 8, rng), o = testing::random_image(6, 8, rng);
  EXPECT_EQ(composite(i, RegionMask(6, 8, 0.0f), o), i);
  EXPECT_EQ(composite(i, RegionMask(6, 8, 1.0f), o), o);
  RegionMask half(6, 8, 0.0f);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 4; ++x) half.at(y, x) = 1;
  const ImageTensor c = composite(i, half, o);
  for (int ch = 0; ch < 3; ++ch)
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 8; ++x) EXPECT_EQ(c.at(ch, y, x), x < 4 ? o.at(ch, y, x) : i.at(ch, y, x));
}

TEST(ImageTensor, ValidateRejectsOutOfRange) {
  EXPECT_THROW(ImageTensor::from_planar(1, 1, {0.0f, 2.0f, 0.0f}), InvalidArgument);
  EXPECT_THROW(StrokeMask::from_data(1, 1, {1.5f}), InvalidArgument);
  EXPECT_THROW(RegionMask::from_data(1, 1, {0.5f}), InvalidArgument);
}

TEST(Png, ByteRepresentableImagesRoundTripExactly) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> byte(0, 255);
  ImageTensor img(5, 7);
  for (auto& v : img.data()) v = byte_to_unit(static_cast<uint8_t>(byte(rng)));
  const auto bytes = encode_image_png(img);
  EXPECT_EQ(decode_image_png(bytes), img);
  EXPECT_EQ(png_dimensions(bytes), std::make_pair(7, 5));
  for (int b = 0; b < 256; ++b) EXPECT_EQ(unit_to_byte(byte_to_unit(static_cast<uint8_t>(b))), b);
}

TEST(Png, MasksRoundTrip) {
  RegionMask m(3, 4, 0.0f);
  m.at(1, 2) = 1;
  EXPECT_EQ(decode_mask_png<PlaneKind::kRegion>(encode_mask_png(m)), m);
}

TEST(Png, GarbageIsRejected) {
  const std::vector<uint8_t> junk{1, 2, 3, 4, 5, 6, 7, 8, 9};
  EXPECT_THROW(decode_image_png(junk), Error);
  EXPECT_THROW(png_dimensions(junk), Error);
}

}  // namespace
}  // namespace strokeless
