#include <doctest.h>

#include "ssgan/layers.hpp"

using namespace ssgan;

TEST_SUITE("layers") {

TEST_CASE("dense with identity weight and zero bias is the identity") {
  DenseLayer<double> layer("fc", 3, 3);
  layer.weight = Tensor<double>({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tape<double> tape;
  RandomSource rng(1);
  auto x = rng.uniform<double>({4, 3}, -1, 1);
  Var<double> y = layer.forward(tape, tape.leaf(x), {});
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.value()[i] == x[i]);
}

TEST_CASE("dense on zero input broadcasts the bias") {
  DenseLayer<double> layer("fc", 2, 3);
  layer.bias = Tensor<double>({3}, {1, 2, 3});
  Tape<double> tape;
  Var<double> y = layer.forward(tape, tape.leaf(Tensor<double>({2, 2})), {});
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 3; ++c) CHECK(y.value().at(r, c) == layer.bias[c]);
}

TEST_CASE("dense matches a matmul-plus-broadcast oracle") {
  RandomSource rng(9);
  DenseLayer<double> layer("fc", 5, 4);
  layer.init(rng, 0.5);
  layer.bias = rng.uniform<double>({4}, -1, 1);
  auto x = rng.uniform<double>({3, 5}, -1, 1);
  Tape<double> tape;
  Var<double> y = layer.forward(tape, tape.leaf(x), {});
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      double s = layer.bias[c];
      for (std::size_t k = 0; k < 5; ++k) s += x.at(r, k) * layer.weight.at(k, c);
      CHECK(y.value().at(r, c) == doctest::Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("dense rejects mismatched input width") {
  DenseLayer<double> layer("fc", 3, 2);
  Tape<double> tape;
  CHECK_THROWS_AS(layer.forward(tape, tape.leaf(Tensor<double>({2, 4})), {}), Error);
}

TEST_CASE("leaky relu values") {
  Tensor<double> x({3}, {-1.0, 2.0, 0.0});
  auto y = leaky_relu(x, 0.2);
  CHECK(y[0] == doctest::Approx(-0.2));
  CHECK(y[1] == 2.0);
  CHECK(y[2] == 0.0);
  CHECK_THROWS_AS(leaky_relu(x, 1.0), Error);
}

TEST_CASE("sigmoid values and stability") {
  Tensor<double> zero({1}, {0.0});
  CHECK(sigmoid(zero)[0] == 0.5);

  RandomSource rng(12);
  auto x = rng.uniform<double>({32}, -8, 8);
  auto a = sigmoid(x);
  auto b = sigmoid(neg(x));
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(a[i] == doctest::Approx(1.0 - b[i]).epsilon(1e-12));

  Tensor<double> forty({1}, {40.0});
  const double v = sigmoid(forty)[0];
  CHECK(v > 1.0 - 1e-15);
  CHECK(v <= 1.0);
  Tensor<double> eighty({2}, {80.0, -80.0});
  auto s = sigmoid(eighty);
  CHECK(std::isfinite(s[0]));
  CHECK(std::isfinite(s[1]));
}

TEST_CASE("batchnorm normalizes a two-point batch to +/-1") {
  BatchNormLayer<double> bn("bn", 1, 0.1, 1e-12);
  Tape<double> tape;
  Var<double> y = bn.forward(tape, tape.leaf(Tensor<double>({2, 1}, {1.0, 3.0})),
                             {Mode::train, true, nullptr});
  CHECK(y.value()[0] == doctest::Approx(-1.0).epsilon(1e-5));
  CHECK(y.value()[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("batchnorm on a constant batch returns beta") {
  BatchNormLayer<double> bn("bn", 2);
  bn.beta = Tensor<double>({2}, {5.0, 5.0});
  Tape<double> tape;
  Var<double> y = bn.forward(tape, tape.leaf(Tensor<double>::full({3, 2}, 7.0)),
                             {Mode::train, true, nullptr});
  for (std::size_t i = 0; i < y.value().size(); ++i)
    CHECK(y.value()[i] == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("batchnorm train-mode output statistics") {
  RandomSource rng(21);
  BatchNormLayer<double> bn("bn", 3);
  Tape<double> tape;
  auto x = rng.normal<double>({16, 3, 4, 4}, 2.0, 3.0);
  Var<double> y = bn.forward(tape, tape.leaf(x), {Mode::train, true, nullptr});
  const auto& v = y.value();
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0;
    std::size_t count = 0;
    for (std::size_t n = 0; n < 16; ++n)
      for (std::size_t h = 0; h < 4; ++h)
        for (std::size_t w = 0; w < 4; ++w) {
          mean += v.at(n, c, h, w);
          ++count;
        }
    mean /= static_cast<double>(count);
    double var = 0;
    for (std::size_t n = 0; n < 16; ++n)
      for (std::size_t h = 0; h < 4; ++h)
        for (std::size_t w = 0; w < 4; ++w) var += (v.at(n, c, h, w) - mean) * (v.at(n, c, h, w) - mean);
    var /= static_cast<double>(count);
    CHECK(std::abs(mean) < 1e-6);
    CHECK(std::abs(var - 1.0) < 1e-4);
  }
}

TEST_CASE("batchnorm updates running stats with the configured momentum") {
  BatchNormLayer<double> bn("bn", 1, 0.5, 1e-5);
  Tape<double> tape;
  bn.forward(tape, tape.leaf(Tensor<double>({2, 1}, {1.0, 3.0})), {Mode::train, true, nullptr});
  // running <- 0.5*initial + 0.5*batch: mean 0->1, var 1->(1+1)/2.
  CHECK(bn.running_mean[0] == doctest::Approx(1.0));
  CHECK(bn.running_var[0] == doctest::Approx(1.0));  // batch var of {1,3} is 1
  CHECK(bn.running_var[0] >= 0.0);
}

TEST_CASE("batchnorm train mode on a single-sample batch is an error") {
  BatchNormLayer<double> bn("bn", 2);
  Tape<double> tape;
  CHECK_THROWS_AS(
      bn.forward(tape, tape.leaf(Tensor<double>({1, 2}, {1.0, 2.0})), {Mode::train, true, nullptr}),
      Error);
}

TEST_CASE("batchnorm eval mode uses running stats and skips updates") {
  BatchNormLayer<double> bn("bn", 1);
  bn.running_mean = Tensor<double>({1}, {2.0});
  bn.running_var = Tensor<double>({1}, {4.0});
  Tape<double> tape;
  Var<double> y =
      bn.forward(tape, tape.leaf(Tensor<double>({1, 1}, {4.0})), {Mode::eval, true, nullptr});
  CHECK(y.value()[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(bn.running_mean[0] == 2.0);
}

TEST_CASE("gaussian noise layer mode contract") {
  GaussianNoiseLayer<float> noise(0.5f);
  RandomSource rng(5);
  Tape<float> tape;
  auto x = rng.uniform<float>({4, 4}, -1, 1);
  ForwardCtx eval_ctx{Mode::eval, true, &rng};
  Var<float> y = noise.forward(tape, tape.leaf(x), eval_ctx);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.value()[i] == x[i]);

  GaussianNoiseLayer<float> zero_noise(0.0f);
  ForwardCtx train_ctx{Mode::train, true, &rng};
  Var<float> y2 = zero_noise.forward(tape, tape.leaf(x), train_ctx);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y2.value()[i] == x[i]);

  CHECK_THROWS_AS(noise.forward(tape, tape.leaf(x), {Mode::train, true, nullptr}), Error);
}

TEST_CASE("gaussian noise train-mode sample statistics") {
  GaussianNoiseLayer<double> noise(0.5);
  RandomSource rng(31);
  Tape<double> tape;
  Var<double> y =
      noise.forward(tape, tape.leaf(Tensor<double>({100000})), {Mode::train, true, &rng});
  double mean = 0;
  for (std::size_t i = 0; i < y.value().size(); ++i) mean += y.value()[i];
  mean /= static_cast<double>(y.value().size());
  double var = 0;
  for (std::size_t i = 0; i < y.value().size(); ++i)
    var += (y.value()[i] - mean) * (y.value()[i] - mean);
  var /= static_cast<double>(y.value().size());
  const double sd = std::sqrt(var);
  CHECK(sd > 0.49);
  CHECK(sd < 0.51);
}

TEST_CASE("softmax rows") {
  Tensor<double> uniform({1, 3});
  auto p = softmax(uniform);
  for (std::size_t i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(1.0 / 3).epsilon(1e-12));

  Tensor<double> logits({1, 3}, {0.0, std::log(2.0), std::log(3.0)});
  auto q = softmax(logits);
  CHECK(q[0] == doctest::Approx(1.0 / 6).epsilon(1e-12));
  CHECK(q[1] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(q[2] == doctest::Approx(1.0 / 2).epsilon(1e-12));
}

TEST_CASE("softmax is invariant under per-row shifts and rows sum to 1") {
  RandomSource rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = rng.uniform<double>({4, 6}, -5, 5);
    const double c = rng.next_uniform() * 20 - 10;
    auto p = softmax(x);
    auto ps = softmax(add_scalar(x, c));
    for (std::size_t i = 0; i < p.size(); ++i)
      CHECK(p[i] == doctest::Approx(ps[i]).epsilon(1e-6));
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0;
      for (std::size_t j = 0; j < 6; ++j) {
        CHECK(p.at(r, j) > 0.0);
        CHECK(p.at(r, j) < 1.0);
        s += p.at(r, j);
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("softmax of extreme logits does not overflow") {
  Tensor<double> x({1, 3}, {1000.0, 999.0, -1000.0});
  auto p = softmax(x);
  CHECK(p.all_finite());
  CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-9));
}

TEST_CASE("layer backward passes grad_check, noise frozen") {
  RandomSource rng(55);
  const double tol = 1e-4;
  const double h = 1e-5;

  // dense wrt x / W / b
  DenseLayer<double> fc("fc", 4, 3);
  fc.init(rng, 0.5);
  fc.bias = rng.uniform<double>({3}, -1, 1);
  auto x2 = rng.uniform<double>({3, 4}, -1, 1);
  auto wsum = rng.uniform<double>({3, 3}, -1, 1);
  CHECK(grad_check<double>(
            [&](Tape<double>& t, Var<double> v) {
              return ad::sum_all(t, ad::mul(t, fc.forward(t, v, {}), t.leaf(wsum)));
            },
            x2, h) < tol);
  CHECK(grad_check_param<double>(
            [&](Tape<double>& t) {
              return ad::sum_all(t, ad::mul(t, fc.forward(t, t.leaf(x2), {}), t.leaf(wsum)));
            },
            fc.weight, h) < tol);
  CHECK(grad_check_param<double>(
            [&](Tape<double>& t) {
              return ad::sum_all(t, ad::mul(t, fc.forward(t, t.leaf(x2), {}), t.leaf(wsum)));
            },
            fc.bias, h) < tol);

  // batchnorm wrt x, gamma, beta (train mode)
  auto x4 = rng.uniform<double>({4, 2, 3, 3}, -1, 1);
  BatchNormLayer<double> bn("bn", 2);
  bn.gamma = rng.uniform<double>({2}, 0.5, 1.5);
  bn.beta = rng.uniform<double>({2}, -0.5, 0.5);
  auto w4 = rng.uniform<double>(x4.shape(), -1, 1);
  CHECK(grad_check<double>(
            [&](Tape<double>& t, Var<double> v) {
              BatchNormLayer<double> probe("p", 2);
              probe.gamma = bn.gamma;
              probe.beta = bn.beta;
              Var<double> y = probe.forward(t, v, {Mode::train, false, nullptr});
              return ad::sum_all(t, ad::mul(t, y, t.leaf(w4)));
            },
            x4, h) < tol);

  // frozen-noise layer: the additive sample held fixed
  auto noise_sample = rng.normal<double>(x4.shape(), 0.0, 0.5);
  CHECK(grad_check<double>(
            [&](Tape<double>& t, Var<double> v) {
              Var<double> y = ad::add(t, v, t.leaf(noise_sample));
              return ad::sum_all(t, ad::mul(t, y, t.leaf(w4)));
            },
            x4, h) < tol);
}

TEST_CASE("eval-mode layers are pure and deterministic") {
  RandomSource rng(60);
  BatchNormLayer<float> bn("bn", 2);
  bn.running_mean = rng.uniform<float>({2}, -1, 1);
  bn.running_var = rng.uniform<float>({2}, 0.5, 1.5);
  GaussianNoiseLayer<float> noise(0.5f);
  auto x = rng.uniform<float>({3, 2}, -1, 1);
  ForwardCtx ctx{Mode::eval, true, &rng};
  Tensor<float> first, second;
  {
    Tape<float> tape;
    first = noise.forward(tape, bn.forward(tape, tape.leaf(x), ctx), ctx).value();
  }
  {
    Tape<float> tape;
    second = noise.forward(tape, bn.forward(tape, tape.leaf(x), ctx), ctx).value();
  }
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(first[i] == second[i]);
}

}  // TEST_SUITE
