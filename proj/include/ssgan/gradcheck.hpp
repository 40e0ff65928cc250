#pragma once

#include <string>
#include <vector>

#include "ssgan/losses.hpp"

namespace ssgan {

struct GradCheckResult {
  std::string op;
  double max_rel_err = 0;
  bool pass = false;
};

inline constexpr double kGradCheckTolerance = 1e-4;

// Central-finite-difference verification of every layer and loss backward
// pass. Each entry runs `trials` random shapes/values and reports the worst
// relative error across all differentiated inputs (data and parameters).
// `inject_sign_error` is a negative-control hook: it flips the analytic
// gradient of the leaky_relu entry so a broken check is observable.
template <typename T>
std::vector<GradCheckResult> run_gradcheck_suite(std::size_t trials, std::uint64_t seed,
                                                 bool inject_sign_error = false) {
  RandomSource rng(RandomSource(seed).fork("gradcheck").next_u64());
  const T h = static_cast<T>(1e-5);
  std::vector<GradCheckResult> results;

  auto weighted = [](Tape<T>& t, Var<T> v, const Tensor<T>& w) {
    return ad::sum_all(t, ad::mul(t, v, t.leaf(w)));
  };

  auto record = [&](const std::string& op, auto&& runner) {
    GradCheckResult r{op, 0, false};
    for (std::size_t i = 0; i < trials; ++i)
      r.max_rel_err = std::max(r.max_rel_err, static_cast<double>(runner()));
    r.pass = r.max_rel_err < kGradCheckTolerance;
    results.push_back(std::move(r));
  };

  record("dense", [&] {
    const std::size_t b = 2 + rng.next_below(3), in = 2 + rng.next_below(4),
                      out = 2 + rng.next_below(4);
    DenseLayer<T> layer("fc", in, out);
    layer.init(rng, T(0.5));
    layer.bias = rng.uniform<T>({out}, T(-1), T(1));
    auto x = rng.uniform<T>({b, in}, T(-1), T(1));
    auto w = rng.uniform<T>({b, out}, T(-1), T(1));
    double err = grad_check<T>(
        [&](Tape<T>& t, Var<T> v) { return weighted(t, layer.forward(t, v, {}), w); }, x, h);
    err = std::max<double>(
        err, grad_check_param<T>(
                 [&](Tape<T>& t) { return weighted(t, layer.forward(t, t.leaf(x), {}), w); },
                 layer.weight, h));
    err = std::max<double>(
        err, grad_check_param<T>(
                 [&](Tape<T>& t) { return weighted(t, layer.forward(t, t.leaf(x), {}), w); },
                 layer.bias, h));
    return err;
  });

  record("conv2d", [&] {
    const std::size_t stride = 1 + rng.next_below(2), pad = rng.next_below(2);
    const std::size_t kh = 2 + rng.next_below(2);
    const std::size_t side = kh + stride * (1 + rng.next_below(3));
    Conv2dLayer<T> layer("conv", 1 + rng.next_below(2), 1 + rng.next_below(3), kh, stride, pad);
    layer.init(rng, T(0.5));
    layer.bias = rng.uniform<T>({layer.kernel.dim(0)}, T(-0.5), T(0.5));
    auto x = rng.uniform<T>({2, layer.kernel.dim(1), side, side}, T(-1), T(1));
    Tensor<T> w;
    {
      Tape<T> probe;
      probe.set_recording(false);
      w = rng.uniform<T>(layer.forward(probe, probe.leaf(x), {}).shape(), T(-1), T(1));
    }
    double err = grad_check<T>(
        [&](Tape<T>& t, Var<T> v) { return weighted(t, layer.forward(t, v, {}), w); }, x, h);
    err = std::max<double>(
        err, grad_check_param<T>(
                 [&](Tape<T>& t) { return weighted(t, layer.forward(t, t.leaf(x), {}), w); },
                 layer.kernel, h));
    return err;
  });

  record("conv2d_transpose", [&] {
    const std::size_t side = 2 + rng.next_below(3);
    ConvTranspose2dLayer<T> layer("up", 1 + rng.next_below(3), 1 + rng.next_below(2), 4, 2, 1);
    layer.init(rng, T(0.5));
    auto x = rng.uniform<T>({2, layer.kernel.dim(0), side, side}, T(-1), T(1));
    Tensor<T> w;
    {
      Tape<T> probe;
      probe.set_recording(false);
      w = rng.uniform<T>(layer.forward(probe, probe.leaf(x), {}).shape(), T(-1), T(1));
    }
    double err = grad_check<T>(
        [&](Tape<T>& t, Var<T> v) { return weighted(t, layer.forward(t, v, {}), w); }, x, h);
    err = std::max<double>(
        err, grad_check_param<T>(
                 [&](Tape<T>& t) { return weighted(t, layer.forward(t, t.leaf(x), {}), w); },
                 layer.kernel, h));
    return err;
  });

  record("batchnorm", [&] {
    const std::size_t b = 3 + rng.next_below(3), c = 1 + rng.next_below(3),
                      side = 2 + rng.next_below(2);
    BatchNormLayer<T> layer("bn", c);
    layer.gamma = rng.uniform<T>({c}, T(0.5), T(1.5));
    layer.beta = rng.uniform<T>({c}, T(-0.5), T(0.5));
    auto x = rng.uniform<T>({b, c, side, side}, T(-1), T(1));
    auto w = rng.uniform<T>(x.shape(), T(-1), T(1));
    const ForwardCtx ctx{Mode::train, false, nullptr};
    double err = grad_check<T>(
        [&](Tape<T>& t, Var<T> v) { return weighted(t, layer.forward(t, v, ctx), w); }, x, h);
    err = std::max<double>(
        err, grad_check_param<T>(
                 [&](Tape<T>& t) { return weighted(t, layer.forward(t, t.leaf(x), ctx), w); },
                 layer.gamma, h));
    err = std::max<double>(
        err, grad_check_param<T>(
                 [&](Tape<T>& t) { return weighted(t, layer.forward(t, t.leaf(x), ctx), w); },
                 layer.beta, h));
    return err;
  });

  record("leaky_relu", [&] {
    // Keep samples away from the kink; finite differences straddle it.
    auto x = rng.uniform<T>({3, 5}, T(0.05), T(2));
    for (std::size_t i = 0; i < x.size(); ++i)
      if (rng.next_uniform() < 0.5) x[i] = -x[i];
    auto w = rng.uniform<T>(x.shape(), T(-1), T(1));
    auto forward = [&](Tape<T>& t, Var<T> v) {
      if (!inject_sign_error) return ad::leaky_relu(t, v, T(0.2));
      // Negative-control hook: correct forward, sign-flipped backward on the
      // positive branch. The suite must flag this entry.
      const std::size_t iv = v.index();
      return t.emit(ssgan::leaky_relu(v.value(), T(0.2)),
                    [iv](Tape<T>& tp, std::size_t out) {
                      const Tensor<T>& xv = tp.value(iv);
                      ad::detail::accum_map(tp.grad(iv), tp.grad(out), [&](T gv, std::size_t i) {
                        return xv[i] >= T(0) ? -gv : T(0.2) * gv;
                      });
                    });
    };
    return grad_check<T>([&](Tape<T>& t, Var<T> v) { return weighted(t, forward(t, v), w); }, x,
                         h);
  });

  record("sigmoid", [&] {
    auto x = rng.uniform<T>({3, 5}, T(-4), T(4));
    auto w = rng.uniform<T>(x.shape(), T(-1), T(1));
    return grad_check<T>(
        [&](Tape<T>& t, Var<T> v) { return weighted(t, ad::sigmoid(t, v), w); }, x, h);
  });

  record("tanh", [&] {
    auto x = rng.uniform<T>({3, 5}, T(-2), T(2));
    auto w = rng.uniform<T>(x.shape(), T(-1), T(1));
    return grad_check<T>([&](Tape<T>& t, Var<T> v) { return weighted(t, ad::tanh(t, v), w); },
                         x, h);
  });

  record("softmax", [&] {
    auto x = rng.uniform<T>({3, 4 + rng.next_below(3)}, T(-3), T(3));
    auto w = rng.uniform<T>(x.shape(), T(-1), T(1));
    return grad_check<T>(
        [&](Tape<T>& t, Var<T> v) { return weighted(t, ad::softmax(t, v), w); }, x, h);
  });

  record("frozen_noise", [&] {
    auto x = rng.uniform<T>({3, 4}, T(-1), T(1));
    auto noise = rng.normal<T>(x.shape(), T(0), T(0.5));
    auto w = rng.uniform<T>(x.shape(), T(-1), T(1));
    return grad_check<T>(
        [&](Tape<T>& t, Var<T> v) { return weighted(t, ad::add(t, v, t.leaf(noise)), w); }, x,
        h);
  });

  record("matmul", [&] {
    const std::size_t m = 2 + rng.next_below(3), k = 2 + rng.next_below(3),
                      n = 2 + rng.next_below(3);
    auto a = rng.uniform<T>({m, k}, T(-1), T(1));
    auto b = rng.uniform<T>({k, n}, T(-1), T(1));
    auto w = rng.uniform<T>({m, n}, T(-1), T(1));
    double err = grad_check<T>(
        [&](Tape<T>& t, Var<T> v) { return weighted(t, ad::matmul(t, v, t.leaf(b)), w); }, a, h);
    return std::max<double>(
        err, grad_check<T>(
                 [&](Tape<T>& t, Var<T> v) { return weighted(t, ad::matmul(t, t.leaf(a), v), w); },
                 b, h));
  });

  const std::size_t k = 3;
  auto make_output = [&](Tape<T>& t, Var<T> logits) {
    DiscriminatorOutput<T> out;
    out.logits = logits;
    out.probs = ad::softmax(t, logits);
    out.features = t.leaf(Tensor<T>({logits.value().dim(0), 2}));
    return out;
  };

  record("loss_supervised", [&] {
    auto logits = rng.uniform<T>({4, k + 1}, T(-2), T(2));
    std::vector<int> labels;
    for (int i = 0; i < 4; ++i) labels.push_back(1 + static_cast<int>(rng.next_below(k)));
    return grad_check<T>(
        [&](Tape<T>& t, Var<T> v) {
          return supervised_loss(t, make_output(t, v), labels, T(0.9));
        },
        logits, h);
  });

  record("loss_unsupervised", [&] {
    auto rl = rng.uniform<T>({4, k + 1}, T(-2), T(2));
    auto fl = rng.uniform<T>({4, k + 1}, T(-2), T(2));
    double err = grad_check<T>(
        [&](Tape<T>& t, Var<T> v) {
          return unsupervised_loss(t, make_output(t, v), make_output(t, t.leaf(fl)));
        },
        rl, h);
    return std::max<double>(
        err, grad_check<T>(
                 [&](Tape<T>& t, Var<T> v) {
                   return unsupervised_loss(t, make_output(t, t.leaf(rl)), make_output(t, v));
                 },
                 fl, h));
  });

  record("loss_total", [&] {
    auto rl = rng.uniform<T>({4, k + 1}, T(-2), T(2));
    auto fl = rng.uniform<T>({4, k + 1}, T(-2), T(2));
    std::vector<int> labels;
    for (int i = 0; i < 4; ++i) labels.push_back(1 + static_cast<int>(rng.next_below(k)));
    return grad_check<T>(
        [&](Tape<T>& t, Var<T> v) {
          auto real_out = make_output(t, v);
          auto fake_out = make_output(t, t.leaf(fl));
          return total_loss(t, supervised_loss(t, real_out, labels),
                            unsupervised_loss(t, real_out, fake_out));
        },
        rl, h);
  });

  record("loss_feature_matching", [&] {
    auto rf = rng.uniform<T>({3, 6}, T(-1), T(1));
    auto ff = rng.uniform<T>({4, 6}, T(-1), T(1));
    double err = grad_check<T>(
        [&](Tape<T>& t, Var<T> v) { return feature_matching_loss(t, v, t.leaf(ff)); }, rf, h);
    return std::max<double>(
        err, grad_check<T>(
                 [&](Tape<T>& t, Var<T> v) { return feature_matching_loss(t, t.leaf(rf), v); },
                 ff, h));
  });

  record("loss_vanilla_d", [&] {
    auto pre_real = rng.uniform<T>({4}, T(-2), T(2));
    auto pre_fake = rng.uniform<T>({4}, T(-2), T(2));
    double err = grad_check<T>(
        [&](Tape<T>& t, Var<T> v) {
          return vanilla_d_objective(t, ad::sigmoid(t, v), ad::sigmoid(t, t.leaf(pre_fake)));
        },
        pre_real, h);
    return std::max<double>(
        err,
        grad_check<T>(
            [&](Tape<T>& t, Var<T> v) {
              return vanilla_d_objective(t, ad::sigmoid(t, t.leaf(pre_real)), ad::sigmoid(t, v));
            },
            pre_fake, h));
  });

  record("loss_vanilla_g", [&] {
    auto pre = rng.uniform<T>({4}, T(-2), T(2));
    return grad_check<T>(
        [&](Tape<T>& t, Var<T> v) { return vanilla_g_objective(t, ad::sigmoid(t, v)); }, pre, h);
  });

  record("loss_nonsaturating", [&] {
    auto fl = rng.uniform<T>({4, k + 1}, T(-2), T(2));
    return grad_check<T>(
        [&](Tape<T>& t, Var<T> v) {
          auto out = make_output(t, v);
          return generator_loss(t, GenLossMode::nonsaturating, out, out);
        },
        fl, h);
  });

  return results;
}

}  // namespace ssgan
