#include "strokeless/autograd.hpp"

#include <Eigen/Core>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace strokeless {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

}  // namespace strokeless

namespace strokeless::ag {
namespace {

thread_local bool g_grad_enabled = true;

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using CMapMat = Eigen::Map<const RowMat<T>>;

template <class T>
Var<T> make_result(Array<T> value, std::vector<Var<T>> inputs,
                   std::function<void(Node<T>&)> fn) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  if (grad_enabled()) {
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (any) {
      n->requires_grad = true;
      n->parents.reserve(inputs.size());
      for (const auto& in : inputs) n->parents.push_back(in.node());
      n->backward_fn = std::move(fn);
    }
  }
  return Var<T>(std::move(n));
}

template <class T>
bool wants(const Node<T>& self, size_t i) {
  return self.parents[i] && self.parents[i]->requires_grad;
}

template <class T>
void require_rank4(const Var<T>& x, const char* op) {
  if (x.value().rank() != 4) {
    throw InvalidArgument(std::string(op) + ": expected NCHW input, got " +
                          shape_string(x.shape()));
  }
}

template <class T>
void same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
  require_same_shape(a.value(), b.value(), op);
}

template <class T, class F, class DF>
Var<T> unary(const Var<T>& x, F f, DF df_from_in_out) {
  const auto& xv = x.value();
  Array<T> out(xv.shape());
  const T* px = xv.data();
  T* po = out.data();
  for (int64_t i = 0; i < xv.size(); ++i) po[i] = f(px[i]);
  return make_result<T>(std::move(out), {x}, [df_from_in_out](Node<T>& self) {
    auto& in = *self.parents[0];
    auto& g = in.grad_buffer();
    const T* gi = self.grad.data();
    const T* xi = in.value.data();
    const T* yo = self.value.data();
    T* go = g.data();
    for (int64_t i = 0; i < g.size(); ++i) go[i] += gi[i] * df_from_in_out(xi[i], yo[i]);
  });
}

// Output columns [lo, hi) whose input column ox*stride - pad + kj lies in [0, w).
inline void valid_range(int64_t w, int64_t wo, int stride, int pad, int kj, int64_t& lo,
                        int64_t& hi) {
  const int64_t off = kj - pad;
  lo = off >= 0 ? 0 : (-off + stride - 1) / stride;
  hi = w - off <= 0 ? 0 : std::min<int64_t>(wo, (w - off + stride - 1) / stride);
  if (hi < lo) hi = lo;
}

// col is (Ci*k*k) × (Ho*Wo) for a single image plane stack.
template <class T>
void im2col(const T* x, int64_t ci, int64_t h, int64_t w, int k, int stride, int pad, int64_t ho,
            int64_t wo, T* col) {
  for (int64_t c = 0; c < ci; ++c) {
    const T* xc = x + c * h * w;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        T* row = col + ((c * k + ki) * k + kj) * ho * wo;
        int64_t lo, hi;
        valid_range(w, wo, stride, pad, kj, lo, hi);
        const int64_t off = kj - pad;
        for (int64_t oy = 0; oy < ho; ++oy) {
          const int64_t iy = oy * stride - pad + ki;
          T* dst = row + oy * wo;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + wo, T{0});
            continue;
          }
          const T* src = xc + iy * w + off;
          std::fill(dst, dst + lo, T{0});
          if (stride == 1) {
            std::copy(src + lo, src + hi, dst + lo);
          } else {
            for (int64_t ox = lo; ox < hi; ++ox) dst[ox] = src[ox * stride];
          }
          std::fill(dst + hi, dst + wo, T{0});
        }
      }
    }
  }
}

template <class T>
void col2im(const T* col, int64_t ci, int64_t h, int64_t w, int k, int stride, int pad, int64_t ho,
            int64_t wo, T* x) {
  for (int64_t c = 0; c < ci; ++c) {
    T* xc = x + c * h * w;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const T* row = col + ((c * k + ki) * k + kj) * ho * wo;
        int64_t lo, hi;
        valid_range(w, wo, stride, pad, kj, lo, hi);
        const int64_t off = kj - pad;
        for (int64_t oy = 0; oy < ho; ++oy) {
          const int64_t iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= h) continue;
          const T* src = row + oy * wo;
          T* dst = xc + iy * w + off;
          if (stride == 1) {
            for (int64_t ox = lo; ox < hi; ++ox) dst[ox] += src[ox];
          } else {
            for (int64_t ox = lo; ox < hi; ++ox) dst[ox * stride] += src[ox];
          }
        }
      }
    }
  }
}

struct ConvGeom {
  int64_t n, ci, h, w, co, ho, wo;
  int k, stride, pad;
};

template <class T>
ConvGeom conv_geometry(const Array<T>& x, const Array<T>& w, const Array<T>& b, int stride,
                       int pad) {
  if (x.rank() != 4 || w.rank() != 4) {
    throw InvalidArgument("conv2d: expected rank-4 input and kernel, got " +
                          shape_string(x.shape()) + " and " + shape_string(w.shape()));
  }
  if (w.dim(1) != x.dim(1)) {
    throw InvalidArgument("conv2d: kernel expects " + std::to_string(w.dim(1)) +
                          " input channels, input has " + std::to_string(x.dim(1)));
  }
  if (w.dim(2) != w.dim(3)) throw InvalidArgument("conv2d: kernel must be square");
  if (b.size() != w.dim(0)) throw InvalidArgument("conv2d: bias size mismatch");
  if (stride < 1 || pad < 0) throw InvalidArgument("conv2d: bad stride/padding");
  ConvGeom g{};
  g.n = x.dim(0);
  g.ci = x.dim(1);
  g.h = x.dim(2);
  g.w = x.dim(3);
  g.co = w.dim(0);
  g.k = static_cast<int>(w.dim(2));
  g.stride = stride;
  g.pad = pad;
  g.ho = conv_out_size(g.h, g.k, stride, pad);
  g.wo = conv_out_size(g.w, g.k, stride, pad);
  if (g.ho < 1 || g.wo < 1) {
    throw InvalidArgument("conv2d: input " + shape_string(x.shape()) + " too small for kernel");
  }
  return g;
}

template <class T>
Array<T> conv_forward_impl(const Array<T>& x, const Array<T>& w, const Array<T>& b,
                           const ConvGeom& g) {
  Array<T> out(Shape{g.n, g.co, g.ho, g.wo});
  const int64_t kk = g.ci * g.k * g.k;
  const int64_t hw = g.ho * g.wo;
  AlignedVector<T> col(static_cast<size_t>(kk * hw));
  CMapMat<T> wm(w.data(), g.co, kk);
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bv(b.data(), g.co);
  for (int64_t n = 0; n < g.n; ++n) {
    im2col(x.data() + n * g.ci * g.h * g.w, g.ci, g.h, g.w, g.k, g.stride, g.pad, g.ho, g.wo,
           col.data());
    MapMat<T> om(out.data() + n * g.co * hw, g.co, hw);
    CMapMat<T> cm(col.data(), kk, hw);
    om.noalias() = wm * cm;
    om.colwise() += bv;
  }
  return out;
}

}  // namespace

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <class T>
void backward(const Var<T>& root) {
  if (!root.defined() || root.value().size() != 1) {
    throw InvalidArgument("backward: root must be a single-element array");
  }
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p && p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->grad_buffer()[0] += T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>& n = **it;
    if (n.backward_fn && n.grad.size() == n.value.size()) n.backward_fn(n);
  }
  // Release intermediate gradients; leaves keep theirs.
  for (Node<T>* n : order) {
    if (n->backward_fn) n->grad = Array<T>();
  }
}

template <class T>
Var<T> detach(const Var<T>& x) {
  return Var<T>::constant(x.value());
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  same_shape(a, b, "add");
  Array<T> out(a.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& self) {
    for (size_t p = 0; p < 2; ++p) {
      if (!wants(self, p)) continue;
      auto& g = self.parents[p]->grad_buffer();
      for (int64_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  same_shape(a, b, "sub");
  Array<T> out(a.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& self) {
    if (wants(self, 0)) {
      auto& g = self.parents[0]->grad_buffer();
      for (int64_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants(self, 1)) {
      auto& g = self.parents[1]->grad_buffer();
      for (int64_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  same_shape(a, b, "mul");
  Array<T> out(a.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& self) {
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    if (wants(self, 0)) {
      auto& g = self.parents[0]->grad_buffer();
      for (int64_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (wants(self, 1)) {
      auto& g = self.parents[1]->grad_buffer();
      for (int64_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

template <class T>
Var<T> mul_channel_broadcast(const Var<T>& x, const Var<T>& w) {
  require_rank4(x, "mul_channel_broadcast");
  require_rank4(w, "mul_channel_broadcast");
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  if (ws[0] != xs[0] || ws[1] != 1 || ws[2] != xs[2] || ws[3] != xs[3]) {
    throw InvalidArgument("mul_channel_broadcast: weight " + shape_string(ws) +
                          " does not broadcast over " + shape_string(xs));
  }
  const int64_t n = xs[0], c = xs[1], hw = xs[2] * xs[3];
  Array<T> out(xs);
  for (int64_t b = 0; b < n; ++b)
    for (int64_t ch = 0; ch < c; ++ch)
      for (int64_t i = 0; i < hw; ++i)
        out[(b * c + ch) * hw + i] = x.value()[(b * c + ch) * hw + i] * w.value()[b * hw + i];
  return make_result<T>(std::move(out), {x, w}, [n, c, hw](Node<T>& self) {
    const auto& xv = self.parents[0]->value;
    const auto& wv = self.parents[1]->value;
    if (wants(self, 0)) {
      auto& g = self.parents[0]->grad_buffer();
      for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch)
          for (int64_t i = 0; i < hw; ++i)
            g[(b * c + ch) * hw + i] += self.grad[(b * c + ch) * hw + i] * wv[b * hw + i];
    }
    if (wants(self, 1)) {
      auto& g = self.parents[1]->grad_buffer();
      for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch)
          for (int64_t i = 0; i < hw; ++i)
            g[b * hw + i] += self.grad[(b * c + ch) * hw + i] * xv[(b * c + ch) * hw + i];
    }
  });
}

template <class T>
Var<T> scale(const Var<T>& x, T s) {
  return unary(
      x, [s](T v) { return v * s; }, [s](T, T) { return s; });
}

template <class T>
Var<T> add_scalar(const Var<T>& x, T s) {
  return unary(
      x, [s](T v) { return v + s; }, [](T, T) { return T{1}; });
}

template <class T>
Var<T> abs(const Var<T>& x) {
  return unary(
      x, [](T v) { return std::abs(v); },
      [](T v, T) { return v > T{0} ? T{1} : (v < T{0} ? T{-1} : T{0}); });
}

template <class T>
Var<T> relu(const Var<T>& x) {
  return unary(
      x, [](T v) { return v > T{0} ? v : T{0}; }, [](T v, T) { return v > T{0} ? T{1} : T{0}; });
}

template <class T>
Var<T> leaky_relu(const Var<T>& x, T slope) {
  return unary(
      x, [slope](T v) { return v > T{0} ? v : v * slope; },
      [slope](T v, T) { return v > T{0} ? T{1} : slope; });
}

template <class T>
Var<T> sigmoid(const Var<T>& x) {
  return unary(
      x,
      [](T v) {
        if (v >= T{0}) return T{1} / (T{1} + std::exp(-v));
        const T e = std::exp(v);
        return e / (T{1} + e);
      },
      [](T, T y) { return y * (T{1} - y); });
}

template <class T>
Var<T> log(const Var<T>& x) {
  return unary(
      x, [](T v) { return std::log(v); }, [](T v, T) { return T{1} / v; });
}

template <class T>
Var<T> tanh(const Var<T>& x) {
  return unary(
      x, [](T v) { return std::tanh(v); }, [](T, T y) { return T{1} - y * y; });
}

template <class T>
Var<T> sum(const Var<T>& x) {
  T s{0};
  for (T v : x.value().values()) s += v;
  return make_result<T>(Array<T>::scalar(s), {x}, [](Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    const T gi = self.grad[0];
    for (int64_t i = 0; i < g.size(); ++i) g[i] += gi;
  });
}

template <class T>
Var<T> mean(const Var<T>& x) {
  const int64_t count = x.value().size();
  if (count == 0) throw InvalidArgument("mean: empty array");
  T s{0};
  for (T v : x.value().values()) s += v;
  return make_result<T>(Array<T>::scalar(s / static_cast<T>(count)), {x},
                        [count](Node<T>& self) {
                          auto& g = self.parents[0]->grad_buffer();
                          const T gi = self.grad[0] / static_cast<T>(count);
                          for (int64_t i = 0; i < g.size(); ++i) g[i] += gi;
                        });
}

template <class T>
Array<T> conv2d_forward(const Array<T>& x, const Array<T>& w, const Array<T>& b, int stride,
                        int pad) {
  return conv_forward_impl(x, w, b, conv_geometry(x, w, b, stride, pad));
}

template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride, int pad) {
  const ConvGeom g = conv_geometry(x.value(), w.value(), b.value(), stride, pad);
  Array<T> out = conv_forward_impl(x.value(), w.value(), b.value(), g);
  return make_result<T>(std::move(out), {x, w, b}, [g](Node<T>& self) {
    const auto& xv = self.parents[0]->value;
    const auto& wv = self.parents[1]->value;
    const bool need_x = wants(self, 0), need_w = wants(self, 1), need_b = wants(self, 2);
    const int64_t kk = g.ci * g.k * g.k;
    const int64_t hw = g.ho * g.wo;
    AlignedVector<T> col(static_cast<size_t>(kk * hw));
    CMapMat<T> wm(wv.data(), g.co, kk);
    T* dx = need_x ? self.parents[0]->grad_buffer().data() : nullptr;
    T* dw = need_w ? self.parents[1]->grad_buffer().data() : nullptr;
    T* db = need_b ? self.parents[2]->grad_buffer().data() : nullptr;
    for (int64_t n = 0; n < g.n; ++n) {
      CMapMat<T> gm(self.grad.data() + n * g.co * hw, g.co, hw);
      if (need_b) {
        Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> dbv(db, g.co);
        dbv += gm.rowwise().sum();
      }
      if (need_w) {
        im2col(xv.data() + n * g.ci * g.h * g.w, g.ci, g.h, g.w, g.k, g.stride, g.pad, g.ho,
               g.wo, col.data());
        MapMat<T> dwm(dw, g.co, kk);
        CMapMat<T> cm(col.data(), kk, hw);
        dwm.noalias() += gm * cm.transpose();
      }
      if (need_x) {
        MapMat<T> dcol(col.data(), kk, hw);
        dcol.noalias() = wm.transpose() * gm;
        col2im(col.data(), g.ci, g.h, g.w, g.k, g.stride, g.pad, g.ho, g.wo,
               dx + n * g.ci * g.h * g.w);
      }
    }
  });
}

template <class T>
Var<T> upsample_nearest2x(const Var<T>& x) {
  require_rank4(x, "upsample_nearest2x");
  const auto& s = x.shape();
  const int64_t planes = s[0] * s[1], h = s[2], w = s[3];
  Array<T> out(Shape{s[0], s[1], 2 * h, 2 * w});
  const auto& xv = x.value();
  for (int64_t p = 0; p < planes; ++p)
    for (int64_t y = 0; y < 2 * h; ++y)
      for (int64_t xx = 0; xx < 2 * w; ++xx)
        out[(p * 2 * h + y) * 2 * w + xx] = xv[(p * h + y / 2) * w + xx / 2];
  return make_result<T>(std::move(out), {x}, [planes, h, w](Node<T>& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (int64_t p = 0; p < planes; ++p)
      for (int64_t y = 0; y < 2 * h; ++y)
        for (int64_t xx = 0; xx < 2 * w; ++xx)
          g[(p * h + y / 2) * w + xx / 2] += self.grad[(p * 2 * h + y) * 2 * w + xx];
  });
}

template <class T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw InvalidArgument("concat_channels: no inputs");
  for (const auto& p : parts) require_rank4(p, "concat_channels");
  const auto& s0 = parts.front().shape();
  int64_t total_c = 0;
  std::vector<int64_t> channels;
  for (const auto& p : parts) {
    const auto& s = p.shape();
    if (s[0] != s0[0] || s[2] != s0[2] || s[3] != s0[3]) {
      throw InvalidArgument("concat_channels: incompatible shapes " + shape_string(s0) + " and " +
                            shape_string(s));
    }
    channels.push_back(s[1]);
    total_c += s[1];
  }
  const int64_t n = s0[0], hw = s0[2] * s0[3];
  Array<T> out(Shape{n, total_c, s0[2], s0[3]});
  for (int64_t b = 0; b < n; ++b) {
    int64_t offset = 0;
    for (size_t i = 0; i < parts.size(); ++i) {
      const T* src = parts[i].value().data() + b * channels[i] * hw;
      std::copy(src, src + channels[i] * hw, out.data() + (b * total_c + offset) * hw);
      offset += channels[i];
    }
  }
  return make_result<T>(std::move(out), parts, [n, hw, total_c, channels](Node<T>& self) {
    int64_t offset = 0;
    for (size_t i = 0; i < channels.size(); ++i) {
      if (wants(self, i)) {
        T* dst = self.parents[i]->grad_buffer().data();
        for (int64_t b = 0; b < n; ++b) {
          const T* src = self.grad.data() + (b * total_c + offset) * hw;
          T* d = dst + b * channels[i] * hw;
          for (int64_t j = 0; j < channels[i] * hw; ++j) d[j] += src[j];
        }
      }
      offset += channels[i];
    }
  });
}

template <class T>
Var<T> spectral_normalize(const Var<T>& w, const Array<T>& u, const Array<T>& v) {
  const int64_t rows = w.dim(0);
  const int64_t cols = w.value().size() / rows;
  if (u.size() != rows || v.size() != cols) {
    throw InvalidArgument("spectral_normalize: singular-vector estimate has wrong size");
  }
  CMapMat<T> wm(w.value().data(), rows, cols);
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> uv(u.data(), rows);
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> vv(v.data(), cols);
  const T sigma = uv.dot(wm * vv);
  if (!(sigma > T{0}) || !std::isfinite(sigma)) {
    // Degenerate kernel (e.g. all zeros): pass through unscaled.
    return make_result<T>(w.value(), {w}, [](Node<T>& self) {
      auto& g = self.parents[0]->grad_buffer();
      for (int64_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
  }
  Array<T> out(w.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = w.value()[i] / sigma;
  return make_result<T>(std::move(out), {w}, [sigma, u, v, rows, cols](Node<T>& self) {
    const auto& wv = self.parents[0]->value;
    auto& g = self.parents[0]->grad_buffer();
    T inner{0};
    for (int64_t i = 0; i < g.size(); ++i) inner += self.grad[i] * wv[i];
    const T k = inner / (sigma * sigma);
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t c = 0; c < cols; ++c) {
        const int64_t i = r * cols + c;
        g[i] += self.grad[i] / sigma - k * u[r] * v[c];
      }
  });
}

#define STROKELESS_INSTANTIATE(T)                                                              \
  template void backward<T>(const Var<T>&);                                                    \
  template Var<T> detach<T>(const Var<T>&);                                                    \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                                        \
  template Var<T> sub<T>(const Var<T>&, const Var<T>&);                                        \
  template Var<T> mul<T>(const Var<T>&, const Var<T>&);                                        \
  template Var<T> mul_channel_broadcast<T>(const Var<T>&, const Var<T>&);                      \
  template Var<T> scale<T>(const Var<T>&, T);                                                  \
  template Var<T> add_scalar<T>(const Var<T>&, T);                                             \
  template Var<T> abs<T>(const Var<T>&);                                                       \
  template Var<T> relu<T>(const Var<T>&);                                                      \
  template Var<T> leaky_relu<T>(const Var<T>&, T);                                             \
  template Var<T> sigmoid<T>(const Var<T>&);                                                   \
  template Var<T> tanh<T>(const Var<T>&);                                                      \
  template Var<T> log<T>(const Var<T>&);                                                       \
  template Var<T> mean<T>(const Var<T>&);                                                      \
  template Var<T> sum<T>(const Var<T>&);                                                       \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, int, int);            \
  template Var<T> upsample_nearest2x<T>(const Var<T>&);                                        \
  template Var<T> concat_channels<T>(const std::vector<Var<T>>&);                              \
  template Var<T> spectral_normalize<T>(const Var<T>&, const Array<T>&, const Array<T>&);      \
  template Array<T> conv2d_forward<T>(const Array<T>&, const Array<T>&, const Array<T>&, int, \
                                      int);

STROKELESS_INSTANTIATE(float)
STROKELESS_INSTANTIATE(double)

#undef STROKELESS_INSTANTIATE

}  // namespace strokeless::ag
