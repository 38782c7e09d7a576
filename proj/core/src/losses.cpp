#include "strokeless/losses.hpp"

#include <cmath>

namespace strokeless {
namespace {

template <class T>
ag::Var<T> mean_abs_diff(const ag::Var<T>& a, const ag::Var<T>& b) {
  return ag::mean(ag::abs(ag::sub(a, b)));
}

template <class T>
void require_mask_shape(const ag::Var<T>& mask, const ag::Var<T>& like, const char* what) {
  const auto& m = mask.shape();
  const auto& s = like.shape();
  if (m.size() != 4 || s.size() != 4 || m[0] != s[0] || m[1] != 1 || m[2] != s[2] ||
      m[3] != s[3]) {
    throw InvalidArgument(std::string(what) + ": mask " + shape_string(m) +
                          " does not broadcast over " + shape_string(s));
  }
}

template <class T>
ag::Var<T> mean_bce(const ag::Var<T>& p, const ag::Var<T>& y, T eps) {
  if (p.shape() != y.shape()) {
    throw InvalidArgument("stroke_bce_loss: shape mismatch " + shape_string(p.shape()) + " vs " +
                          shape_string(y.shape()));
  }
  // Clamped through constant offsets, so the gradient passes straight through.
  Array<T> lo(p.shape()), hi(p.shape());
  for (int64_t i = 0; i < lo.size(); ++i) {
    const T v = p.value()[i];
    lo[i] = v < eps ? eps - v : T{0};
    hi[i] = v > T{1} - eps ? v - (T{1} - eps) : T{0};
  }
  const ag::Var<T> pc = ag::sub(ag::add(p, ag::Var<T>::constant(lo)), ag::Var<T>::constant(hi));
  const ag::Var<T> one_minus_y = ag::add_scalar(ag::scale(y, T{-1}), T{1});
  const ag::Var<T> one_minus_p = ag::add_scalar(ag::scale(pc, T{-1}), T{1});
  const ag::Var<T> ll =
      ag::add(ag::mul(y, ag::log(pc)), ag::mul(one_minus_y, ag::log(one_minus_p)));
  return ag::scale(ag::mean(ll), T{-1});
}

}  // namespace

void LossHyperParams::validate() const {
  if (lambda_t < 0 || lambda_m < 0 || lambda_s < 0 || lambda_r < 0) {
    throw InvalidArgument("loss weights must be non-negative");
  }
}

template <class T>
ag::Var<T> stroke_loss(const ag::Var<T>& ms, const ag::Var<T>& ms2, const ag::Var<T>& mgt,
                       T lambda_t) {
  ag::Var<T> loss = mean_abs_diff(ms, mgt);
  if (ms2.defined()) loss = ag::add(loss, ag::scale(mean_abs_diff(ms2, mgt), lambda_t));
  return loss;
}

template <class T>
ag::Var<T> stroke_bce_loss(const ag::Var<T>& ms, const ag::Var<T>& ms2, const ag::Var<T>& mgt,
                           T lambda_t, T eps) {
  ag::Var<T> loss = mean_bce(ms, mgt, eps);
  if (ms2.defined()) loss = ag::add(loss, ag::scale(mean_bce(ms2, mgt, eps), lambda_t));
  return loss;
}

template <class T>
ag::Var<T> weight_matrix(const ag::Var<T>& m, const ag::Var<T>& ms, T lambda_m, T lambda_s) {
  ag::Var<T> w = ag::add_scalar(ag::scale(m, lambda_m), T{1});
  if (ms.defined()) w = ag::add(w, ag::scale(ms, lambda_s));
  return w;
}

template <class T>
ag::Var<T> removal_loss(const ag::Var<T>& ite, const ag::Var<T>& ite2, const ag::Var<T>& igt,
                        const ag::Var<T>& mw, const ag::Var<T>& mw2, T lambda_r) {
  require_mask_shape(mw, ite, "removal_loss");
  ag::Var<T> loss = mean_abs_diff(ag::mul_channel_broadcast(ite, mw),
                                  ag::mul_channel_broadcast(igt, mw));
  if (ite2.defined()) {
    require_mask_shape(mw2, ite2, "removal_loss");
    loss = ag::add(loss, ag::scale(mean_abs_diff(ag::mul_channel_broadcast(ite2, mw2),
                                                 ag::mul_channel_broadcast(igt, mw2)),
                                   lambda_r));
  }
  return loss;
}

template <class T>
ag::Var<T> gen_adv_loss(const ag::Var<T>& d_scores, const ag::Var<T>& dm) {
  require_mask_shape(dm, d_scores, "gen_adv_loss");
  return ag::scale(ag::mean(ag::mul_channel_broadcast(d_scores, dm)), T{-1});
}

template <class T>
ag::Var<T> disc_loss(const ag::Var<T>& d_real, const ag::Var<T>& d_fake, const ag::Var<T>& dm) {
  require_mask_shape(dm, d_real, "disc_loss");
  require_mask_shape(dm, d_fake, "disc_loss");
  const ag::Var<T> real_term =
      ag::mean(ag::relu(ag::add_scalar(ag::scale(ag::mul_channel_broadcast(d_real, dm), T{-1}),
                                       T{1})));
  const ag::Var<T> fake_term =
      ag::mean(ag::relu(ag::add_scalar(ag::mul_channel_broadcast(d_fake, dm), T{1})));
  return ag::add(real_term, fake_term);
}

LossBreakdown total_generator_loss(double l_tsd, double l_trg, double l_g_sn, double l_d_sn) {
  const std::pair<const char*, double> parts[] = {
      {"l_tsd", l_tsd}, {"l_trg", l_trg}, {"l_g_sn", l_g_sn}, {"l_d_sn", l_d_sn}};
  for (const auto& [name, value] : parts) {
    if (!std::isfinite(value)) {
      throw NumericError(name, std::string("non-finite loss component ") + name + " = " +
                                   std::to_string(value));
    }
  }
  LossBreakdown b;
  b.l_tsd = l_tsd;
  b.l_trg = l_trg;
  b.l_g_sn = l_g_sn;
  b.l_d_sn = l_d_sn;
  b.l_g_total = l_tsd + l_trg + l_g_sn;
  return b;
}

#define STROKELESS_INSTANTIATE(T)                                                            \
  template ag::Var<T> stroke_loss<T>(const ag::Var<T>&, const ag::Var<T>&, const ag::Var<T>&, \
                                     T);                                                     \
  template ag::Var<T> stroke_bce_loss<T>(const ag::Var<T>&, const ag::Var<T>&,                \
                                         const ag::Var<T>&, T, T);                           \
  template ag::Var<T> weight_matrix<T>(const ag::Var<T>&, const ag::Var<T>&, T, T);          \
  template ag::Var<T> removal_loss<T>(const ag::Var<T>&, const ag::Var<T>&,                  \
                                      const ag::Var<T>&, const ag::Var<T>&,                  \
                                      const ag::Var<T>&, T);                                 \
  template ag::Var<T> gen_adv_loss<T>(const ag::Var<T>&, const ag::Var<T>&);                 \
  template ag::Var<T> disc_loss<T>(const ag::Var<T>&, const ag::Var<T>&, const ag::Var<T>&);

STROKELESS_INSTANTIATE(float)
STROKELESS_INSTANTIATE(double)

#undef STROKELESS_INSTANTIATE

}  // namespace strokeless
