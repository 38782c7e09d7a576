#include <gtest/gtest.h>

#include "check_matchers.hpp"
#include "strokeless/networks.hpp"
#include "strokeless/model.hpp"
#include "test_support.hpp"

namespace strokeless {
namespace {

TEST(Networks, ShapeAndContractSuite) { testing::expect_all(testing::shape_checks()); }

TEST(Networks, AblationLatticeSwitches) {
  ModelConfig c;
  c.ablation = Ablation::kBaseline;
  EXPECT_FALSE(c.uses_detector());
  EXPECT_FALSE(c.weighted_discriminator());
  EXPECT_EQ(c.units(), 1);
  c.ablation = Ablation::kWd;
  EXPECT_FALSE(c.uses_detector());
  EXPECT_TRUE(c.weighted_discriminator());
  c.ablation = Ablation::kTsdnet;
  EXPECT_TRUE(c.uses_detector());
  EXPECT_FALSE(c.weighted_discriminator());
  c.ablation = Ablation::kWdTsdnet;
  EXPECT_TRUE(c.uses_detector());
  EXPECT_TRUE(c.weighted_discriminator());
  EXPECT_EQ(c.units(), 1);
  c.ablation = Ablation::kCascade;
  EXPECT_EQ(c.units(), 2);
  c.cascade_units = 3;
  EXPECT_EQ(c.units(), 3);
  c.cascade_units = 4;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Networks, AblationNamesRoundTrip) {
  for (Ablation a : {Ablation::kBaseline, Ablation::kWd, Ablation::kTsdnet, Ablation::kWdTsdnet,
                     Ablation::kCascade}) {
    EXPECT_EQ(parse_ablation(ablation_name(a)), a);
  }
  EXPECT_THROW(parse_ablation("cascaded"), InvalidArgument);
}

TEST(Networks, ThreeUnitCascadeChainsDetectors) {
  ModelConfig c;
  c.base_channels = 4;
  c.cascade_units = 3;
  const Model<float> m = Model<float>::initialized(c, 1);
  EXPECT_EQ(m.generator.units(), 3u);
  EXPECT_EQ(m.generator.unit(2).detector->config().in_channels, 5);
  ag::NoGradGuard g;
  std::mt19937_64 rng(1);
  const auto x = ag::Var<float>::constant(testing::random_array<float>({1, 3, 64, 64}, rng));
  const auto mk = ag::Var<float>::constant(testing::random_binary<float>({1, 1, 64, 64}, rng));
  const auto t = cascade_forward(m.generator, x, mk);
  EXPECT_EQ(t.erased.size(), 3u);
  EXPECT_EQ(t.strokes.size(), 3u);
}

TEST(Networks, RunCascadePadsAndCropsArbitrarySizes) {
  ModelConfig c;
  c.base_channels = 4;
  const Model<float> m = Model<float>::initialized(c, 1);
  std::mt19937_64 rng(2);
  const ImageTensor img = testing::random_image(50, 70, rng);
  RegionMask mask(50, 70, 1.0f);
  const CascadeOutput out = run_cascade(m, img, mask);
  ASSERT_EQ(out.erased.size(), 2u);
  EXPECT_EQ(out.final_image().height(), 50);
  EXPECT_EQ(out.final_image().width(), 70);
  ASSERT_NE(out.final_strokes(), nullptr);
  EXPECT_EQ(out.final_strokes()->height(), 50);
  EXPECT_THROW(run_cascade(m, img, mask, 48), InvalidArgument);
}

TEST(Networks, ReflectPaddingMirrorsWithoutRepeatingTheEdge) {
  ImageTensor img(1, 3);
  for (int c = 0; c < 3; ++c) {
    img.at(c, 0, 0) = -1.0f;
    img.at(c, 0, 1) = 0.0f;
    img.at(c, 0, 2) = 1.0f;
  }
  const ImageTensor p = pad_reflect(img, 2, 5);
  EXPECT_EQ(p.at(0, 0, 3), 0.0f);
  EXPECT_EQ(p.at(0, 0, 4), -1.0f);
  EXPECT_EQ(p.at(0, 1, 2), 1.0f);
  EXPECT_EQ(crop(p, 1, 3), img);
}

}  // namespace
}  // namespace strokeless
