#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "ssgan/autodiff.hpp"
#include "ssgan/random.hpp"

namespace ssgan {

enum class Mode { train, eval };

// Per-forward execution context. `update_stats` gates batchnorm running-stat
// updates so a frozen model can be forwarded in train mode (generator step)
// without mutating any of its state. `rng` feeds the stochastic layers.
struct ForwardCtx {
  Mode mode = Mode::eval;
  bool update_stats = true;
  RandomSource* rng = nullptr;
};

template <typename T>
using ParamVisitor = std::function<void(const std::string&, Tensor<T>&, bool trainable)>;

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Var<T> forward(Tape<T>& tape, Var<T> x, const ForwardCtx& ctx) = 0;
  virtual void visit_params(const ParamVisitor<T>&) {}
  virtual std::string_view kind() const = 0;
};

// ---------------------------------------------------------------------------

template <typename T>
class DenseLayer final : public Layer<T> {
 public:
  DenseLayer(std::string name, std::size_t in, std::size_t out)
      : name_(std::move(name)), weight({in, out}), bias({out}) {}

  Var<T> forward(Tape<T>& tape, Var<T> x, const ForwardCtx&) override {
    check(x.value().rank() == 2 && x.value().dim(1) == weight.dim(0), Error::Kind::shape,
          name_, ": input ", shape_str(x.shape()), " does not match weight ",
          shape_str(weight.shape()));
    Var<T> w = tape.param(weight);
    Var<T> b = tape.param(bias);
    Var<T> y = ad::matmul(tape, x, w);
    return ad::add(tape, y, ad::broadcast_channel(tape, b, y.shape()));
  }

  void visit_params(const ParamVisitor<T>& visit) override {
    visit(name_ + ".weight", weight, true);
    visit(name_ + ".bias", bias, true);
  }

  void init(RandomSource& rng, T stddev) { weight = rng.normal<T>(weight.shape(), T(0), stddev); }

  std::string_view kind() const override { return "dense"; }

  Tensor<T> weight, bias;

 private:
  std::string name_;
};

template <typename T>
class Conv2dLayer final : public Layer<T> {
 public:
  Conv2dLayer(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t ksize,
              std::size_t stride, std::size_t pad)
      : name_(std::move(name)),
        kernel({out_ch, in_ch, ksize, ksize}),
        bias({out_ch}),
        stride_(stride),
        pad_(pad) {}

  Var<T> forward(Tape<T>& tape, Var<T> x, const ForwardCtx&) override {
    Var<T> k = tape.param(kernel);
    Var<T> b = tape.param(bias);
    Var<T> y = ad::conv2d(tape, x, k, stride_, pad_);
    return ad::add(tape, y, ad::broadcast_channel(tape, b, y.shape()));
  }

  void visit_params(const ParamVisitor<T>& visit) override {
    visit(name_ + ".kernel", kernel, true);
    visit(name_ + ".bias", bias, true);
  }

  void init(RandomSource& rng, T stddev) { kernel = rng.normal<T>(kernel.shape(), T(0), stddev); }

  std::string_view kind() const override { return "conv2d"; }

  Tensor<T> kernel, bias;

 private:
  std::string name_;
  std::size_t stride_, pad_;
};

template <typename T>
class ConvTranspose2dLayer final : public Layer<T> {
 public:
  ConvTranspose2dLayer(std::string name, std::size_t in_ch, std::size_t out_ch,
                       std::size_t ksize, std::size_t stride, std::size_t pad)
      : name_(std::move(name)),
        kernel({in_ch, out_ch, ksize, ksize}),
        bias({out_ch}),
        stride_(stride),
        pad_(pad) {}

  Var<T> forward(Tape<T>& tape, Var<T> x, const ForwardCtx&) override {
    Var<T> k = tape.param(kernel);
    Var<T> b = tape.param(bias);
    Var<T> y = ad::conv2d_transpose(tape, x, k, stride_, pad_);
    return ad::add(tape, y, ad::broadcast_channel(tape, b, y.shape()));
  }

  void visit_params(const ParamVisitor<T>& visit) override {
    visit(name_ + ".kernel", kernel, true);
    visit(name_ + ".bias", bias, true);
  }

  void init(RandomSource& rng, T stddev) { kernel = rng.normal<T>(kernel.shape(), T(0), stddev); }

  std::string_view kind() const override { return "conv_transpose2d"; }

  Tensor<T> kernel, bias;

 private:
  std::string name_;
  std::size_t stride_, pad_;
};

// Batch normalization over axis 1 of rank-2 [B,C] or rank-4 [B,C,H,W]
// inputs. Train mode normalizes by batch statistics (biased variance) and
// folds them into the running estimates; eval mode uses the running
// estimates only. The normalization is built from primitive tape ops, so the
// backward pass through the batch statistics comes from the tape.
template <typename T>
class BatchNormLayer final : public Layer<T> {
 public:
  BatchNormLayer(std::string name, std::size_t channels, T momentum = T(0.1), T eps = T(1e-5))
      : name_(std::move(name)),
        gamma(Tensor<T>::ones({channels})),
        beta({channels}),
        running_mean({channels}),
        running_var(Tensor<T>::ones({channels})),
        momentum_(momentum),
        eps_(eps) {}

  Var<T> forward(Tape<T>& tape, Var<T> x, const ForwardCtx& ctx) override {
    const Shape shape = x.value().shape();
    check(shape.size() == 2 || shape.size() == 4, Error::Kind::shape,
          name_, ": batchnorm expects rank-2 or rank-4 input, got ", shape_str(shape));
    check(shape[1] == gamma.dim(0), Error::Kind::shape, name_, ": channel count ", shape[1],
          " does not match ", gamma.dim(0));
    std::vector<std::size_t> axes = shape.size() == 2 ? std::vector<std::size_t>{0}
                                                      : std::vector<std::size_t>{0, 2, 3};
    Var<T> g = tape.param(gamma);
    Var<T> b = tape.param(beta);
    Var<T> xn;
    if (ctx.mode == Mode::train) {
      check(shape[0] >= 2, Error::Kind::value, name_,
            ": batchnorm train mode requires batch size >= 2, got ", shape[0]);
      Var<T> mu = ad::reduce_mean(tape, x, axes);
      Var<T> xc = ad::sub(tape, x, ad::broadcast_channel(tape, mu, shape));
      Var<T> var = ad::reduce_mean(tape, ad::mul(tape, xc, xc), axes);
      if (ctx.update_stats) {
        running_mean = ssgan::add(mul_scalar(running_mean, T(1) - momentum_),
                                  mul_scalar(mu.value(), momentum_));
        running_var = ssgan::add(mul_scalar(running_var, T(1) - momentum_),
                                 mul_scalar(var.value(), momentum_));
      }
      Var<T> inv = ad::sqrt(tape, ad::add_scalar(tape, var, eps_));
      xn = ad::divide(tape, xc, ad::broadcast_channel(tape, inv, shape));
    } else {
      Var<T> mu = tape.leaf(running_mean);
      Var<T> sd = tape.leaf(ssgan::sqrt(add_scalar(running_var, eps_)));
      Var<T> xc = ad::sub(tape, x, ad::broadcast_channel(tape, mu, shape));
      xn = ad::divide(tape, xc, ad::broadcast_channel(tape, sd, shape));
    }
    Var<T> scaled = ad::mul(tape, xn, ad::broadcast_channel(tape, g, shape));
    return ad::add(tape, scaled, ad::broadcast_channel(tape, b, shape));
  }

  void visit_params(const ParamVisitor<T>& visit) override {
    visit(name_ + ".gamma", gamma, true);
    visit(name_ + ".beta", beta, true);
    visit(name_ + ".running_mean", running_mean, false);
    visit(name_ + ".running_var", running_var, false);
  }

  std::string_view kind() const override { return "batchnorm"; }

  Tensor<T> gamma, beta, running_mean, running_var;

 private:
  std::string name_;
  T momentum_, eps_;
};

template <typename T>
class LeakyReLULayer final : public Layer<T> {
 public:
  explicit LeakyReLULayer(T slope = T(0.2)) : slope_(slope) {}

  Var<T> forward(Tape<T>& tape, Var<T> x, const ForwardCtx&) override {
    return ad::leaky_relu(tape, x, slope_);
  }

  std::string_view kind() const override { return "leaky_relu"; }

 private:
  T slope_;
};

template <typename T>
class TanhLayer final : public Layer<T> {
 public:
  Var<T> forward(Tape<T>& tape, Var<T> x, const ForwardCtx&) override {
    return ad::tanh(tape, x);
  }
  std::string_view kind() const override { return "tanh"; }
};

template <typename T>
class SigmoidLayer final : public Layer<T> {
 public:
  Var<T> forward(Tape<T>& tape, Var<T> x, const ForwardCtx&) override {
    return ad::sigmoid(tape, x);
  }
  std::string_view kind() const override { return "sigmoid"; }
};

// Additive zero-centered Gaussian noise; active only in train mode. The
// gradient passes through unchanged.
template <typename T>
class GaussianNoiseLayer final : public Layer<T> {
 public:
  explicit GaussianNoiseLayer(T stddev) : stddev_(stddev) {
    check(stddev >= T(0), Error::Kind::value, "noise stddev must be non-negative");
  }

  Var<T> forward(Tape<T>& tape, Var<T> x, const ForwardCtx& ctx) override {
    if (ctx.mode != Mode::train || stddev_ == T(0)) return x;
    check(ctx.rng != nullptr, Error::Kind::state,
          "gaussian noise layer requires an rng in train mode");
    Tensor<T> n = ctx.rng->normal<T>(x.value().shape(), T(0), stddev_);
    return ad::add(tape, x, tape.leaf(std::move(n)));
  }

  std::string_view kind() const override { return "gaussian_noise"; }

 private:
  T stddev_;
};

template <typename T>
class FlattenLayer final : public Layer<T> {
 public:
  Var<T> forward(Tape<T>& tape, Var<T> x, const ForwardCtx&) override {
    const Shape& s = x.value().shape();
    std::size_t inner = 1;
    for (std::size_t i = 1; i < s.size(); ++i) inner *= s[i];
    return ad::reshape(tape, x, Shape{s[0], inner});
  }
  std::string_view kind() const override { return "flatten"; }
};

// Reshapes [B, prod(dims)] to [B, dims...].
template <typename T>
class ReshapeLayer final : public Layer<T> {
 public:
  explicit ReshapeLayer(Shape inner_dims) : inner_(std::move(inner_dims)) {}

  Var<T> forward(Tape<T>& tape, Var<T> x, const ForwardCtx&) override {
    Shape target{x.value().dim(0)};
    target.insert(target.end(), inner_.begin(), inner_.end());
    return ad::reshape(tape, x, std::move(target));
  }
  std::string_view kind() const override { return "reshape"; }

 private:
  Shape inner_;
};

// Free-function layer surface used by tests and callers that operate on
// plain tensors.

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  check(logits.all_finite(), Error::Kind::domain, "softmax requires finite logits");
  return softmax_rows(logits);
}

template <typename T>
Tensor<T> gaussian_noise_forward(const Tensor<T>& x, T stddev, Mode mode, RandomSource& rng) {
  check(stddev >= T(0), Error::Kind::value, "noise stddev must be non-negative");
  if (mode != Mode::train || stddev == T(0)) return x;
  return ssgan::add(x, rng.normal<T>(x.shape(), T(0), stddev));
}

}  // namespace ssgan
