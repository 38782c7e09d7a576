#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "strokeless/autograd.hpp"
#include "strokeless/training.hpp"

namespace strokeless::testing {

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("strokeless_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

template <class T>
Array<T> random_array(const Shape& shape, std::mt19937_64& rng, double lo = -1.0,
                      double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Array<T> a(shape);
  for (auto& v : a.values()) v = static_cast<T>(u(rng));
  return a;
}

template <class T>
Array<T> random_binary(const Shape& shape, std::mt19937_64& rng, double p_one = 0.5) {
  std::bernoulli_distribution b(p_one);
  Array<T> a(shape);
  for (auto& v : a.values()) v = b(rng) ? T{1} : T{0};
  return a;
}

inline ImageTensor random_image(int h, int w, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  ImageTensor img(h, w);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

/// Relative error |a − b| / max(|a|, |b|, floor).
inline double relative_error(double a, double b, double floor = 1e-7) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

struct GradCheckResult {
  double max_rel = 0;
  std::string worst;
  int64_t checked = 0;
};

/// Five-point central differences of a scalar function of leaf variables
/// against the gradient accumulated by one backward pass. At most `per_var`
/// entries of each leaf are probed, spread across the array. The stencil is
/// fourth-order accurate, so a larger step keeps roundoff well below the
/// smallest gradients the loss suites produce.
inline GradCheckResult check_gradients(const std::function<ag::Var<double>()>& f,
                                       std::vector<std::pair<std::string, ag::Var<double>>> leaves,
                                       int64_t per_var = 12, double h = 1e-4) {
  for (auto& [name, v] : leaves) v.zero_grad();
  ag::backward(f());
  GradCheckResult r;
  for (auto& [name, v] : leaves) {
    Array<double>& w = v.mutable_value();
    const Array<double> analytic = v.grad();
    const int64_t n = w.size();
    const int64_t count = std::min(n, per_var);
    for (int64_t k = 0; k < count; ++k) {
      const int64_t idx = count == n ? k : (k * 7919 + 13) % n;
      const double orig = w[idx];
      auto at = [&](double offset) {
        w[idx] = orig + offset;
        return f().value()[0];
      };
      const double fd = (at(-2 * h) - 8 * at(-h) + 8 * at(h) - at(2 * h)) / (12 * h);
      w[idx] = orig;
      const double rel = relative_error(fd, analytic[idx]);
      ++r.checked;
      if (rel > r.max_rel) {
        r.max_rel = rel;
        std::ostringstream os;
        os << name << "[" << idx << "] fd=" << fd << " analytic=" << analytic[idx];
        r.worst = os.str();
      }
    }
  }
  return r;
}

inline std::vector<std::pair<std::string, ag::Var<double>>> as_leaves(
    const std::vector<NamedParameter<double>>& params) {
  std::vector<std::pair<std::string, ag::Var<double>>> out;
  for (const auto& p : params) out.emplace_back(p.name, p.var);
  return out;
}

/// A narrow configuration that trains in milliseconds on 32×32 inputs.
inline TrainConfig tiny_train_config(Ablation ablation = Ablation::kCascade) {
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.image_size = 32;
  cfg.base_channels = 4;
  cfg.levels = 3;
  cfg.disc_channels = {8, 8, 8, 8, 8};
  cfg.ablation = ablation;
  cfg.epochs = 1;
  cfg.lr = 1e-3;
  return cfg;
}

}  // namespace strokeless::testing
