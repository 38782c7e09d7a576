#include "strokeless/batch.hpp"

#include <algorithm>

namespace strokeless {

template <class T>
Array<T> stack_images(std::span<const ImageTensor> images) {
  if (images.empty()) throw InvalidArgument("stack_images: empty batch");
  const int h = images.front().height(), w = images.front().width();
  const int64_t n = static_cast<int64_t>(images.size());
  Array<T> out(Shape{n, 3, h, w});
  const size_t per = static_cast<size_t>(3) * h * w;
  for (int64_t i = 0; i < n; ++i) {
    const auto& img = images[static_cast<size_t>(i)];
    if (img.height() != h || img.width() != w) {
      throw InvalidArgument("stack_images: images have different sizes");
    }
    std::copy(img.data().begin(), img.data().end(), out.data() + i * per);
  }
  return out;
}

template <class T, PlaneKind Kind>
Array<T> stack_planes(std::span<const Plane<Kind>> planes) {
  if (planes.empty()) throw InvalidArgument("stack_planes: empty batch");
  const int h = planes.front().height(), w = planes.front().width();
  const int64_t n = static_cast<int64_t>(planes.size());
  Array<T> out(Shape{n, 1, h, w});
  const size_t per = static_cast<size_t>(h) * w;
  for (int64_t i = 0; i < n; ++i) {
    const auto& p = planes[static_cast<size_t>(i)];
    if (p.height() != h || p.width() != w) {
      throw InvalidArgument("stack_planes: masks have different sizes");
    }
    std::copy(p.data().begin(), p.data().end(), out.data() + i * per);
  }
  return out;
}

template <class T>
ImageTensor image_from_batch(const Array<T>& batch, int64_t n) {
  if (batch.rank() != 4 || batch.dim(1) != 3 || n < 0 || n >= batch.dim(0)) {
    throw InvalidArgument("image_from_batch: bad batch " + shape_string(batch.shape()));
  }
  const int h = static_cast<int>(batch.dim(2)), w = static_cast<int>(batch.dim(3));
  const size_t per = static_cast<size_t>(3) * h * w;
  std::vector<float> data(per);
  const T* src = batch.data() + n * static_cast<int64_t>(per);
  for (size_t i = 0; i < per; ++i) data[i] = std::clamp(static_cast<float>(src[i]), -1.0f, 1.0f);
  return ImageTensor::from_planar(h, w, std::move(data));
}

template <class T>
StrokeMask stroke_from_batch(const Array<T>& batch, int64_t n) {
  if (batch.rank() != 4 || n < 0 || n >= batch.dim(0)) {
    throw InvalidArgument("stroke_from_batch: bad batch " + shape_string(batch.shape()));
  }
  const int h = static_cast<int>(batch.dim(2)), w = static_cast<int>(batch.dim(3));
  const size_t per = static_cast<size_t>(h) * w;
  std::vector<float> data(per);
  const T* src = batch.data() + n * batch.dim(1) * static_cast<int64_t>(per);
  for (size_t i = 0; i < per; ++i) data[i] = std::clamp(static_cast<float>(src[i]), 0.0f, 1.0f);
  return StrokeMask::from_data(h, w, std::move(data));
}

#define STROKELESS_INSTANTIATE(T)                                                              \
  template Array<T> stack_images<T>(std::span<const ImageTensor>);                             \
  template Array<T> stack_planes<T, PlaneKind::kRegion>(std::span<const RegionMask>);          \
  template Array<T> stack_planes<T, PlaneKind::kStroke>(std::span<const StrokeMask>);          \
  template Array<T> stack_planes<T, PlaneKind::kGtStroke>(std::span<const GtStrokeMask>);      \
  template Array<T> stack_planes<T, PlaneKind::kWeight>(std::span<const WeightMatrix>);        \
  template ImageTensor image_from_batch<T>(const Array<T>&, int64_t);                          \
  template StrokeMask stroke_from_batch<T>(const Array<T>&, int64_t);

STROKELESS_INSTANTIATE(float)
STROKELESS_INSTANTIATE(double)

#undef STROKELESS_INSTANTIATE

}  // namespace strokeless
