#pragma once

#include <optional>
#include <vector>

#include "ssgan/models.hpp"

namespace ssgan {

// Probability floor applied before any log so early-training extremes never
// produce infinite losses.
inline constexpr double kProbClamp = 1e-7;

enum class GenLossMode { feature_matching, nonsaturating };

template <typename T>
struct LossReport {
  T theta = T(0);     // supervised term
  T delta = T(0);     // unsupervised (GAN) term
  T total = T(0);     // theta + delta, exactly as computed
  T gen_loss = T(0);  // generator objective value
};

namespace detail {

// Column k (the fake unit) of the probability rows, clamped into
// [kProbClamp, 1-kProbClamp].
template <typename T>
Var<T> clamped_fake_prob(Tape<T>& tape, const DiscriminatorOutput<T>& out) {
  const std::size_t cols = out.probs.value().dim(1);
  check(cols >= 2, Error::Kind::shape, "loss requires a k+1 head with k >= 1");
  Var<T> col = ad::slice_cols(tape, out.probs, cols - 1, cols);
  Var<T> flat = ad::reshape(tape, col, Shape{out.probs.value().dim(0)});
  return ad::clamp(tape, flat, static_cast<T>(kProbClamp), T(1) - static_cast<T>(kProbClamp));
}

}  // namespace detail

// Supervised term: negative mean log-likelihood of the true label under the
// class distribution renormalized over the k real classes. One-sided label
// smoothing scales the positive target to `alpha`. Labels are 1-based class
// indices; an empty label list contributes zero.
template <typename T>
Var<T> supervised_loss(Tape<T>& tape, const DiscriminatorOutput<T>& out,
                       const std::vector<int>& labels, T alpha = T(1)) {
  check(alpha > T(0) && alpha <= T(1), Error::Kind::value, "smoothing alpha must be in (0,1]");
  if (labels.empty()) return tape.leaf(Tensor<T>::scalar(T(0)));
  const std::size_t k = out.logits.value().dim(1) - 1;
  check(labels.size() == out.logits.value().dim(0), Error::Kind::shape,
        "supervised_loss: one label per sample required");
  std::vector<std::size_t> cols(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    check(labels[i] >= 1 && static_cast<std::size_t>(labels[i]) <= k, Error::Kind::value,
          "label ", labels[i], " outside the real-class range 1..", k);
    cols[i] = static_cast<std::size_t>(labels[i] - 1);
  }
  Var<T> real_logits = ad::slice_cols(tape, out.logits, 0, k);
  Var<T> logp = ad::log_softmax(tape, real_logits);
  Var<T> picked = ad::gather_cols(tape, logp, std::move(cols));
  return ad::mul_scalar(tape, ad::mean_all(tape, picked), -alpha);
}

// Unsupervised (GAN) term: pushes real samples away from the fake class and
// generated samples toward it.
template <typename T>
Var<T> unsupervised_loss(Tape<T>& tape, const DiscriminatorOutput<T>& real_out,
                         const DiscriminatorOutput<T>& fake_out) {
  Var<T> p_fake_on_real = detail::clamped_fake_prob(tape, real_out);
  Var<T> p_fake_on_fake = detail::clamped_fake_prob(tape, fake_out);
  Var<T> real_term =
      ad::neg(tape, ad::mean_all(tape, ad::log(tape, ad::rsub_scalar(tape, T(1), p_fake_on_real))));
  Var<T> fake_term = ad::neg(tape, ad::mean_all(tape, ad::log(tape, p_fake_on_fake)));
  return ad::add(tape, real_term, fake_term);
}

template <typename T>
T total_loss(T theta, T delta) {
  return theta + delta;
}

template <typename T>
Var<T> total_loss(Tape<T>& tape, Var<T> theta, Var<T> delta) {
  return ad::add(tape, theta, delta);
}

// Squared L2 distance between the batch means of the tapped features.
template <typename T>
Var<T> feature_matching_loss(Tape<T>& tape, Var<T> real_features, Var<T> fake_features) {
  check(real_features.value().rank() == 2 && fake_features.value().rank() == 2,
        Error::Kind::shape, "feature_matching_loss expects [B x F] features");
  check(real_features.value().dim(1) == fake_features.value().dim(1), Error::Kind::shape,
        "feature width mismatch: ", real_features.value().dim(1), " vs ",
        fake_features.value().dim(1));
  Var<T> mu_real = ad::reduce_mean(tape, real_features, {0});
  Var<T> mu_fake = ad::reduce_mean(tape, fake_features, {0});
  Var<T> diff = ad::sub(tape, mu_real, mu_fake);
  return ad::sum_all(tape, ad::mul(tape, diff, diff));
}

// Plain GAN discriminator objective (the quantity to ASCEND); callers negate
// it for a descent-only optimizer.
template <typename T>
Var<T> vanilla_d_objective(Tape<T>& tape, Var<T> d_real, Var<T> d_fake) {
  const T lo = static_cast<T>(kProbClamp), hi = T(1) - static_cast<T>(kProbClamp);
  Var<T> r = ad::clamp(tape, d_real, lo, hi);
  Var<T> f = ad::clamp(tape, d_fake, lo, hi);
  Var<T> term_real = ad::mean_all(tape, ad::log(tape, r));
  Var<T> term_fake = ad::mean_all(tape, ad::log(tape, ad::rsub_scalar(tape, T(1), f)));
  return ad::add(tape, term_real, term_fake);
}

// Plain GAN generator objective (the quantity to DESCEND).
template <typename T>
Var<T> vanilla_g_objective(Tape<T>& tape, Var<T> d_fake) {
  const T lo = static_cast<T>(kProbClamp), hi = T(1) - static_cast<T>(kProbClamp);
  Var<T> f = ad::clamp(tape, d_fake, lo, hi);
  return ad::mean_all(tape, ad::log(tape, ad::rsub_scalar(tape, T(1), f)));
}

template <typename T>
Var<T> generator_loss(Tape<T>& tape, GenLossMode mode, const DiscriminatorOutput<T>& real_out,
                      const DiscriminatorOutput<T>& fake_out) {
  switch (mode) {
    case GenLossMode::feature_matching:
      return feature_matching_loss(tape, real_out.features, fake_out.features);
    case GenLossMode::nonsaturating: {
      Var<T> p_fake = detail::clamped_fake_prob(tape, fake_out);
      return ad::neg(
          tape, ad::mean_all(tape, ad::log(tape, ad::rsub_scalar(tape, T(1), p_fake))));
    }
  }
  fail(Error::Kind::value, "generator_loss: unknown mode");
}

// One-sided label smoothing on one-hot target rows: the positive entry is
// scaled to alpha, zeros stay zero.
template <typename T>
Tensor<T> apply_label_smoothing(const Tensor<T>& one_hot, T alpha) {
  check(alpha > T(0) && alpha <= T(1), Error::Kind::value, "smoothing alpha must be in (0,1]");
  check(one_hot.rank() == 2, Error::Kind::shape, "apply_label_smoothing expects [B x k] targets");
  const std::size_t rows = one_hot.dim(0), cols = one_hot.dim(1);
  Tensor<T> out = one_hot;
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t ones = 0;
    for (std::size_t j = 0; j < cols; ++j) {
      const T v = one_hot.at(r, j);
      if (v == T(1)) {
        ++ones;
        out.at(r, j) = alpha;
      } else {
        check(v == T(0), Error::Kind::value, "row ", r, " is not one-hot: entry ", v);
      }
    }
    check(ones == 1, Error::Kind::value, "row ", r, " is not one-hot: ", ones, " positive entries");
  }
  return out;
}

}  // namespace ssgan
