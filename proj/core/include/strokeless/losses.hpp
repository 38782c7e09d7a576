#pragma once

#include <vector>

#include "strokeless/autograd.hpp"

namespace strokeless {

struct LossHyperParams {
  float lambda_t = 10.0f;
  float lambda_m = 5.0f;
  float lambda_s = 5.0f;
  float lambda_r = 10.0f;
  /// When false, the stroke map enters the removal weight matrix as a
  /// constant, so the removal loss cannot lower itself by shrinking M_s.
  bool stroke_weight_grad = false;

  void validate() const;
  friend bool operator==(const LossHyperParams&, const LossHyperParams&) = default;
};

struct LossBreakdown {
  double l_tsd = 0;
  double l_trg = 0;
  double l_g_sn = 0;
  double l_g_total = 0;
  double l_d_sn = 0;
};

// All expectations are arithmetic means over batch, channel and spatial
// elements. Tensors are NCHW; masks and weight matrices have one channel.

/// mean|ms − mgt| + lambda_t · mean|ms2 − mgt|. ms2 may be undefined, in
/// which case only the first term is returned.
template <class T>
ag::Var<T> stroke_loss(const ag::Var<T>& ms, const ag::Var<T>& ms2, const ag::Var<T>& mgt,
                       T lambda_t);

/// Binary cross-entropy counterpart of stroke_loss with the same lambda_t
/// structure; probabilities are clamped to [eps, 1 - eps].
template <class T>
ag::Var<T> stroke_bce_loss(const ag::Var<T>& ms, const ag::Var<T>& ms2, const ag::Var<T>& mgt,
                           T lambda_t, T eps = T(1e-6));

/// 1 + lambda_m·m + lambda_s·ms, differentiable in ms. ms may be undefined
/// (mask-only configurations): 1 + lambda_m·m.
template <class T>
ag::Var<T> weight_matrix(const ag::Var<T>& m, const ag::Var<T>& ms, T lambda_m, T lambda_s);

/// mean|ite⊙mw − igt⊙mw| + lambda_r · mean|ite2⊙mw2 − igt⊙mw2|, with the
/// weight matrices broadcast across image channels. ite2 may be undefined.
template <class T>
ag::Var<T> removal_loss(const ag::Var<T>& ite, const ag::Var<T>& ite2, const ag::Var<T>& igt,
                        const ag::Var<T>& mw, const ag::Var<T>& mw2, T lambda_r);

/// −mean(dm ⊙ d) with dm broadcast across score channels.
template <class T>
ag::Var<T> gen_adv_loss(const ag::Var<T>& d_scores, const ag::Var<T>& dm);

/// mean relu(1 − dm⊙d_real) + mean relu(1 + dm⊙d_fake).
template <class T>
ag::Var<T> disc_loss(const ag::Var<T>& d_real, const ag::Var<T>& d_fake, const ag::Var<T>& dm);

/// Sums the generator components; a non-finite part raises NumericError
/// naming it.
LossBreakdown total_generator_loss(double l_tsd, double l_trg, double l_g_sn,
                                   double l_d_sn = 0.0);

}  // namespace strokeless
