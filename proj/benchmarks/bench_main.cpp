#include <benchmark/benchmark.h>

#include <random>

#include "strokeless/evaluation.hpp"
#include "strokeless/model.hpp"

namespace strokeless {
namespace {

Array<float> random_array(const Shape& shape, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Array<float> a(shape);
  for (auto& v : a.values()) v = u(rng);
  return a;
}

ImageTensor random_image(int size, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  ImageTensor img(size, size);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

// Args: batch, in channels, out channels, spatial size, stride.
void BM_Conv2dForward(benchmark::State& state) {
  const int n = state.range(0), ci = state.range(1), co = state.range(2), hw = state.range(3),
            stride = state.range(4);
  ag::NoGradGuard guard;
  const auto x = ag::Var<float>::constant(random_array({n, ci, hw, hw}, 1));
  const auto w = ag::Var<float>::constant(random_array({co, ci, 3, 3}, 2));
  const auto b = ag::Var<float>::constant(random_array({co}, 3));
  for (auto _ : state) benchmark::DoNotOptimize(ag::conv2d(x, w, b, stride, 1).value());
}
BENCHMARK(BM_Conv2dForward)->Args({16, 4, 16, 64, 2})->Args({16, 32, 64, 16, 2})->Args({16, 96, 32, 16, 1});

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const int n = state.range(0), ci = state.range(1), co = state.range(2), hw = state.range(3);
  const auto x = ag::Var<float>::parameter(random_array({n, ci, hw, hw}, 1));
  const auto w = ag::Var<float>::parameter(random_array({co, ci, 3, 3}, 2));
  const auto b = ag::Var<float>::parameter(random_array({co}, 3));
  for (auto _ : state) {
    auto y = ag::mean(ag::conv2d(x, w, b, 1, 1));
    ag::backward(y);
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Args({16, 16, 16, 32})->Args({16, 64, 64, 8});

void BM_UNetForward(benchmark::State& state) {
  const int size = state.range(0);
  std::mt19937_64 rng(4);
  UNetConfig cfg;
  cfg.base_channels = 16;
  const UNet<float> net(cfg, rng);
  ag::NoGradGuard guard;
  const auto x = ag::Var<float>::constant(random_array({1, 4, size, size}, 5));
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x).value());
}
BENCHMARK(BM_UNetForward)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_CascadeInference(benchmark::State& state) {
  const int size = state.range(0);
  ModelConfig cfg;
  cfg.base_channels = 16;
  cfg.disc_channels = {16, 32, 64, 64, 64, 64};
  const Model<float> model = Model<float>::initialized(cfg, 6);
  const ImageTensor image = random_image(size, 7);
  RegionMask mask(size, size);
  for (int y = size / 4; y < size / 2; ++y)
    for (int x = 0; x < size; ++x) mask.at(y, x) = 1;
  for (auto _ : state) benchmark::DoNotOptimize(run_cascade(model, image, mask).final_image());
}
BENCHMARK(BM_CascadeInference)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
  const ImageTensor a = random_image(state.range(0), 8), b = random_image(state.range(0), 9);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(256);

void BM_Psnr(benchmark::State& state) {
  const ImageTensor a = random_image(state.range(0), 8), b = random_image(state.range(0), 9);
  for (auto _ : state) benchmark::DoNotOptimize(psnr(a, b));
}
BENCHMARK(BM_Psnr)->Arg(256);

void BM_RasterizePolygons(benchmark::State& state) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 256.0);
  std::vector<Polygon> polys(static_cast<size_t>(state.range(0)));
  for (auto& p : polys)
    for (int k = 0; k < 6; ++k) p.vertices.push_back({u(rng), u(rng)});
  for (auto _ : state) benchmark::DoNotOptimize(rasterize_polygons(polys, 256, 256));
}
BENCHMARK(BM_RasterizePolygons)->Arg(1)->Arg(16);

}  // namespace
}  // namespace strokeless

BENCHMARK_MAIN();
