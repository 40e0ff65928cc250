#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "ssgan/layers.hpp"

namespace ssgan {

struct ImageShape {
  std::size_t channels = 1;
  std::size_t height = 16;
  std::size_t width = 16;

  Shape chw() const { return {channels, height, width}; }
  std::size_t pixels() const { return channels * height * width; }
  bool operator==(const ImageShape&) const = default;
};

namespace detail {

// Number of stride-2 halvings between the image side and the 4x4 base grid.
inline std::size_t conv_block_count(const ImageShape& img) {
  check(img.height == img.width, Error::Kind::value, "image must be square, got ", img.height,
        "x", img.width);
  const std::size_t side = img.height;
  check(side >= 8 && (side & (side - 1)) == 0, Error::Kind::value,
        "image side must be a power of two >= 8, got ", side);
  std::size_t blocks = 0, s = side;
  while (s > 4) {
    s /= 2;
    ++blocks;
  }
  return blocks;
}

constexpr std::size_t kKernelSize = 4;
constexpr double kWeightInitStd = 0.02;

}  // namespace detail

// DCGAN-style generator: dense projection from the latent vector onto a 4x4
// grid, then stride-2 transposed-conv blocks up to the image size, tanh
// output. Output values lie in (-1,1).
template <typename T>
class Generator {
 public:
  Var<T> forward(Tape<T>& tape, Var<T> z, const ForwardCtx& ctx) {
    check(z.value().rank() == 2 && z.value().dim(1) == static_cast<std::size_t>(latent_dim_),
          Error::Kind::shape, "generator expects z of shape [B x ", latent_dim_, "], got ",
          shape_str(z.shape()));
    Var<T> h = z;
    for (auto& layer : layers_) h = layer->forward(tape, h, ctx);
    return h;
  }

  void visit_params(const ParamVisitor<T>& visit) {
    for (auto& layer : layers_) layer->visit_params(visit);
  }

  int latent_dim() const { return latent_dim_; }
  const ImageShape& image_shape() const { return image_shape_; }

  std::vector<std::unique_ptr<Layer<T>>> layers_;
  int latent_dim_ = 0;
  ImageShape image_shape_;
};

template <typename T>
struct DiscriminatorOutput {
  Var<T> logits;    // [B x (k+1)] (or [B x 1] for the single-unit baseline)
  Var<T> probs;     // softmax(logits), rows sum to 1
  Var<T> features;  // [B x F], flattened feature-matching tap
};

// K+1-headed convolutional discriminator/classifier. The trunk is a stack of
// stride-2 conv blocks (conv -> batchnorm -> leaky relu -> noise) with
// Gaussian noise on the input; the head is a dense layer over the flattened
// trunk output. The feature tap is the last hidden activation (the final
// leaky relu, before its noise layer), flattened.
template <typename T>
class Discriminator {
 public:
  DiscriminatorOutput<T> forward(Tape<T>& tape, Var<T> x, const ForwardCtx& ctx) {
    check(num_classes_ >= 2, Error::Kind::state,
          "forward requires the k+1 classifier head; use forward_score for the baseline");
    const Shape s = x.value().shape();
    check(s.size() == 4 && s[1] == image_shape_.channels && s[2] == image_shape_.height &&
              s[3] == image_shape_.width,
          Error::Kind::shape, "discriminator expects [B x ", image_shape_.channels, " x ",
          image_shape_.height, " x ", image_shape_.width, "], got ", shape_str(s));
    Var<T> h = x;
    Var<T> tap;
    for (std::size_t i = 0; i < trunk_.size(); ++i) {
      h = trunk_[i]->forward(tape, h, ctx);
      if (i == feature_tap_) tap = h;
    }
    FlattenLayer<T> flatten;
    Var<T> flat = flatten.forward(tape, h, ctx);
    Var<T> logits = head_->forward(tape, flat, ctx);
    DiscriminatorOutput<T> out;
    out.logits = logits;
    out.probs = ad::softmax(tape, logits);
    out.features = flatten.forward(tape, tap, ctx);
    return out;
  }

  // Baseline head: per-sample probability-real from the single sigmoid unit.
  Var<T> forward_score(Tape<T>& tape, Var<T> x, const ForwardCtx& ctx) {
    check(num_classes_ == 0, Error::Kind::state,
          "forward_score requires the single-unit baseline head");
    DiscriminatorOutput<T> out;
    Var<T> h = x;
    for (auto& layer : trunk_) h = layer->forward(tape, h, ctx);
    FlattenLayer<T> flatten;
    Var<T> logits = head_->forward(tape, flatten.forward(tape, h, ctx), ctx);
    Var<T> flat = ad::reshape(tape, logits, Shape{logits.value().dim(0)});
    return ad::sigmoid(tape, flat);
  }

  void visit_params(const ParamVisitor<T>& visit) {
    for (auto& layer : trunk_) layer->visit_params(visit);
    head_->visit_params(visit);
  }

  int num_classes() const { return num_classes_; }
  const ImageShape& image_shape() const { return image_shape_; }

  std::vector<std::unique_ptr<Layer<T>>> trunk_;
  std::unique_ptr<DenseLayer<T>> head_;
  std::size_t feature_tap_ = 0;  // trunk index whose output feeds feature matching
  int num_classes_ = 0;          // k; 0 marks the vanilla single-unit head
  ImageShape image_shape_;
};

template <typename T>
Generator<T> build_generator(int latent_dim, const ImageShape& img,
                             const std::vector<std::size_t>& channel_widths,
                             std::uint64_t seed) {
  check(latent_dim >= 1, Error::Kind::value, "latent_dim must be >= 1, got ", latent_dim);
  const std::size_t blocks = detail::conv_block_count(img);
  check(channel_widths.size() == blocks, Error::Kind::value, "expected ", blocks,
        " channel widths for a ", img.height, "x", img.width, " image, got ",
        channel_widths.size());
  for (std::size_t w : channel_widths)
    check(w >= 1, Error::Kind::value, "channel widths must be positive");

  RandomSource rng = RandomSource(seed).fork("generator_init");
  Generator<T> g;
  g.latent_dim_ = latent_dim;
  g.image_shape_ = img;

  const std::size_t base_ch = channel_widths.back();
  auto proj = std::make_unique<DenseLayer<T>>("proj", static_cast<std::size_t>(latent_dim),
                                              base_ch * 4 * 4);
  proj->init(rng, static_cast<T>(detail::kWeightInitStd));
  g.layers_.push_back(std::move(proj));
  g.layers_.push_back(std::make_unique<ReshapeLayer<T>>(Shape{base_ch, 4, 4}));
  g.layers_.push_back(std::make_unique<BatchNormLayer<T>>("bn_proj", base_ch));
  g.layers_.push_back(std::make_unique<LeakyReLULayer<T>>());

  // Mirror the discriminator widths upward: base_ch -> ... -> widths[0] -> C.
  std::size_t in_ch = base_ch;
  for (std::size_t i = blocks - 1; i-- > 0;) {
    const std::size_t out_ch = channel_widths[i];
    auto up = std::make_unique<ConvTranspose2dLayer<T>>(str("up", blocks - 2 - i), in_ch, out_ch,
                                                        detail::kKernelSize, 2, 1);
    up->init(rng, static_cast<T>(detail::kWeightInitStd));
    g.layers_.push_back(std::move(up));
    g.layers_.push_back(
        std::make_unique<BatchNormLayer<T>>(str("bn_up", blocks - 2 - i), out_ch));
    g.layers_.push_back(std::make_unique<LeakyReLULayer<T>>());
    in_ch = out_ch;
  }
  auto out_conv = std::make_unique<ConvTranspose2dLayer<T>>("to_image", in_ch, img.channels,
                                                            detail::kKernelSize, 2, 1);
  out_conv->init(rng, static_cast<T>(detail::kWeightInitStd));
  g.layers_.push_back(std::move(out_conv));
  g.layers_.push_back(std::make_unique<TanhLayer<T>>());
  return g;
}

namespace detail {

template <typename T>
Discriminator<T> build_discriminator_impl(int head_units, int num_classes, const ImageShape& img,
                                          const std::vector<std::size_t>& channel_widths,
                                          T noise_std, std::uint64_t seed) {
  const std::size_t blocks = conv_block_count(img);
  check(channel_widths.size() == blocks, Error::Kind::value, "expected ", blocks,
        " channel widths for a ", img.height, "x", img.width, " image, got ",
        channel_widths.size());

  RandomSource rng = RandomSource(seed).fork("discriminator_init");
  Discriminator<T> d;
  d.num_classes_ = num_classes;
  d.image_shape_ = img;

  d.trunk_.push_back(std::make_unique<GaussianNoiseLayer<T>>(noise_std));
  std::size_t in_ch = img.channels;
  for (std::size_t i = 0; i < blocks; ++i) {
    const std::size_t out_ch = channel_widths[i];
    auto conv = std::make_unique<Conv2dLayer<T>>(str("conv", i), in_ch, out_ch, kKernelSize, 2, 1);
    conv->init(rng, static_cast<T>(kWeightInitStd));
    d.trunk_.push_back(std::move(conv));
    d.trunk_.push_back(std::make_unique<BatchNormLayer<T>>(str("bn", i), out_ch));
    d.trunk_.push_back(std::make_unique<LeakyReLULayer<T>>());
    if (i + 1 == blocks) d.feature_tap_ = d.trunk_.size() - 1;
    d.trunk_.push_back(std::make_unique<GaussianNoiseLayer<T>>(noise_std));
    in_ch = out_ch;
  }
  const std::size_t flat = in_ch * 4 * 4;
  d.head_ = std::make_unique<DenseLayer<T>>("head", flat, static_cast<std::size_t>(head_units));
  d.head_->init(rng, static_cast<T>(kWeightInitStd));
  return d;
}

}  // namespace detail

template <typename T>
Discriminator<T> build_discriminator(int k, const ImageShape& img,
                                     const std::vector<std::size_t>& channel_widths, T noise_std,
                                     std::uint64_t seed) {
  check(k >= 2, Error::Kind::value, "discriminator requires k >= 2 classes, got ", k);
  return detail::build_discriminator_impl<T>(k + 1, k, img, channel_widths, noise_std, seed);
}

// Single-sigmoid-unit head for the plain GAN baseline.
template <typename T>
Discriminator<T> build_vanilla_discriminator(const ImageShape& img,
                                             const std::vector<std::size_t>& channel_widths,
                                             T noise_std, std::uint64_t seed) {
  return detail::build_discriminator_impl<T>(1, 0, img, channel_widths, noise_std, seed);
}

// Per-sample probability that the input is real: 1 - p_model(fake | x),
// which equals the summed probability over the k real classes.
template <typename T>
Tensor<T> real_score(const DiscriminatorOutput<T>& out) {
  const Tensor<T>& p = out.probs.value();
  const std::size_t rows = p.dim(0), cols = p.dim(1);
  Tensor<T> score({rows});
  for (std::size_t r = 0; r < rows; ++r) score[r] = T(1) - p.at(r, cols - 1);
  return score;
}

// Row-sliced view of a joint forward pass (real half / fake half). Softmax
// and the feature tap are row-wise, so slicing commutes with both.
template <typename T>
DiscriminatorOutput<T> slice_output(Tape<T>& tape, const DiscriminatorOutput<T>& out,
                                    std::size_t r0, std::size_t r1) {
  DiscriminatorOutput<T> s;
  s.logits = ad::slice_batch(tape, out.logits, r0, r1);
  s.probs = ad::slice_batch(tape, out.probs, r0, r1);
  s.features = ad::slice_batch(tape, out.features, r0, r1);
  return s;
}

template <typename T>
DiscriminatorOutput<T> take_output_rows(Tape<T>& tape, const DiscriminatorOutput<T>& out,
                                        const std::vector<std::size_t>& rows) {
  DiscriminatorOutput<T> s;
  s.logits = ad::take_rows(tape, out.logits, rows);
  s.probs = ad::take_rows(tape, out.probs, rows);
  s.features = ad::take_rows(tape, out.features, rows);
  return s;
}

}  // namespace ssgan
