#include <doctest.h>

#include <map>

#include "ssgan/models.hpp"

using namespace ssgan;

namespace {

template <typename T>
std::map<std::string, Tensor<T>> snapshot(Discriminator<T>& d) {
  std::map<std::string, Tensor<T>> out;
  d.visit_params([&](const std::string& n, Tensor<T>& v, bool) { out.emplace(n, v); });
  return out;
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("generator forward maps latent batch to the configured image shape") {
  ImageShape img{3, 64, 64};
  auto g = build_generator<float>(100, img, {64, 128, 256, 512}, 7);
  Tape<float> tape;
  tape.set_recording(false);
  RandomSource rng(1);
  Var<float> z = tape.leaf(rng.normal<float>({2, 100}, 0.f, 1.f));
  Var<float> y = g.forward(tape, z, {Mode::train, false, nullptr});
  CHECK(y.value().shape() == Shape{2, 3, 64, 64});
}

TEST_CASE("same seed builds identical generators") {
  ImageShape img{1, 16, 16};
  auto g1 = build_generator<float>(32, img, {8, 16}, 99);
  auto g2 = build_generator<float>(32, img, {8, 16}, 99);
  std::vector<float> p1, p2;
  g1.visit_params([&](const std::string&, Tensor<float>& v, bool) {
    p1.insert(p1.end(), v.vec().begin(), v.vec().end());
  });
  g2.visit_params([&](const std::string&, Tensor<float>& v, bool) {
    p2.insert(p2.end(), v.vec().begin(), v.vec().end());
  });
  REQUIRE(p1.size() == p2.size());
  CHECK(p1 == p2);
}

TEST_CASE("untrained generator output lies in (-1,1)") {
  ImageShape img{1, 16, 16};
  auto g = build_generator<float>(16, img, {8, 16}, 3);
  Tape<float> tape;
  RandomSource rng(4);
  Var<float> y = g.forward(tape, tape.leaf(rng.normal<float>({4, 16}, 0.f, 1.f)),
                           {Mode::train, false, nullptr});
  for (std::size_t i = 0; i < y.value().size(); ++i) {
    CHECK(y.value()[i] > -1.0f);
    CHECK(y.value()[i] < 1.0f);
  }
}

TEST_CASE("generator rejects unsupported image shapes") {
  CHECK_THROWS_AS(build_generator<float>(8, ImageShape{1, 12, 12}, {8}, 1), Error);
  CHECK_THROWS_AS(build_generator<float>(8, ImageShape{1, 4, 4}, {}, 1), Error);
  CHECK_THROWS_AS(build_generator<float>(0, ImageShape{1, 16, 16}, {8, 16}, 1), Error);
  CHECK_THROWS_AS(build_generator<float>(8, ImageShape{1, 16, 16}, {8}, 1), Error);
}

TEST_CASE("discriminator head width is k+1") {
  ImageShape img{1, 16, 16};
  auto d101 = build_discriminator<float>(101, img, {8, 16}, 0.5f, 1);
  CHECK(d101.head_->weight.dim(1) == 102);
  auto d50 = build_discriminator<float>(50, img, {8, 16}, 0.5f, 1);
  CHECK(d50.head_->weight.dim(1) == 51);
  CHECK_THROWS_AS(build_discriminator<float>(1, img, {8, 16}, 0.5f, 1), Error);
}

TEST_CASE("discriminator forward on a batch: probs rows sum to 1, shapes stable") {
  ImageShape img{1, 16, 16};
  auto d = build_discriminator<float>(4, img, {8, 16}, 0.5f, 11);
  RandomSource rng(2);
  Tape<float> tape;
  auto x = rng.uniform<float>({8, 1, 16, 16}, -1, 1);
  auto out = d.forward(tape, tape.leaf(x), {Mode::train, true, &rng});
  CHECK(out.logits.value().shape() == Shape{8, 5});
  CHECK(out.probs.value().shape() == Shape{8, 5});
  CHECK(out.features.value().dim(0) == 8);
  for (std::size_t r = 0; r < 8; ++r) {
    float s = 0;
    for (std::size_t c = 0; c < 5; ++c) s += out.probs.value().at(r, c);
    CHECK(s == doctest::Approx(1.0f).epsilon(1e-6));
  }

  Tape<float> tape2;
  auto x2 = rng.uniform<float>({3, 1, 16, 16}, -1, 1);
  auto out2 = d.forward(tape2, tape2.leaf(x2), {Mode::eval, false, nullptr});
  CHECK(out2.features.value().dim(1) == out.features.value().dim(1));
}

TEST_CASE("eval-mode discriminator is deterministic") {
  ImageShape img{1, 16, 16};
  auto d = build_discriminator<float>(3, img, {8, 16}, 0.5f, 13);
  RandomSource rng(8);
  auto x = rng.uniform<float>({2, 1, 16, 16}, -1, 1);
  Tensor<float> a, b;
  {
    Tape<float> tape;
    a = d.forward(tape, tape.leaf(x), {Mode::eval, false, nullptr}).logits.value();
  }
  {
    Tape<float> tape;
    b = d.forward(tape, tape.leaf(x), {Mode::eval, false, nullptr}).logits.value();
  }
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("real_score identities") {
  Tape<double> tape;
  DiscriminatorOutput<double> out;
  out.logits = tape.leaf(Tensor<double>({1, 3}));  // uniform logits, k=2
  out.probs = ad::softmax(tape, out.logits);
  auto score = real_score(out);
  CHECK(score[0] == doctest::Approx(2.0 / 3).epsilon(1e-9));

  DiscriminatorOutput<double> sure_fake;
  sure_fake.logits = tape.leaf(Tensor<double>({1, 3}, {0.0, 0.0, 60.0}));
  sure_fake.probs = ad::softmax(tape, sure_fake.logits);
  CHECK(real_score(sure_fake)[0] == doctest::Approx(0.0).epsilon(1e-9));

  RandomSource rng(3);
  DiscriminatorOutput<double> random_out;
  random_out.logits = tape.leaf(rng.uniform<double>({5, 4}, -3, 3));
  random_out.probs = ad::softmax(tape, random_out.logits);
  auto s = real_score(random_out);
  for (std::size_t r = 0; r < 5; ++r) {
    double sum_real = 0;
    for (std::size_t c = 0; c + 1 < 4; ++c) sum_real += random_out.probs.value().at(r, c);
    CHECK(s[r] == doctest::Approx(sum_real).epsilon(1e-9));
    CHECK(s[r] + random_out.probs.value().at(r, 3) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("two builds from the same config are parameter-identical") {
  ImageShape img{1, 16, 16};
  auto a = build_discriminator<float>(4, img, {8, 16}, 0.5f, 77);
  auto b = build_discriminator<float>(4, img, {8, 16}, 0.5f, 77);
  auto sa = snapshot(a);
  auto sb = snapshot(b);
  REQUIRE(sa.size() == sb.size());
  for (auto& [name, va] : sa) {
    auto it = sb.find(name);
    REQUIRE(it != sb.end());
    CHECK(va.vec() == it->second.vec());
  }
}

TEST_CASE("vanilla discriminator produces per-sample scores in (0,1)") {
  ImageShape img{1, 16, 16};
  auto d = build_vanilla_discriminator<float>(img, {8, 16}, 0.0f, 5);
  Tape<float> tape;
  RandomSource rng(6);
  auto x = rng.uniform<float>({6, 1, 16, 16}, -1, 1);
  Var<float> s = d.forward_score(tape, tape.leaf(x), {Mode::train, true, &rng});
  CHECK(s.value().shape() == Shape{6});
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(s.value()[i] > 0.0f);
    CHECK(s.value()[i] < 1.0f);
  }
  CHECK_THROWS_AS(d.forward(tape, tape.leaf(x), {Mode::train, true, &rng}), Error);
}

TEST_CASE("end-to-end gradient check on a tiny generator-discriminator composite") {
  ImageShape img{1, 8, 8};
  auto g = build_generator<double>(4, img, {3}, 21);
  auto d = build_discriminator<double>(3, img, {3}, 0.0, 22);

  auto z0 = RandomSource(23).normal<double>({2, 4}, 0.0, 1.0);
  auto composite = [&](Tape<double>& t, Var<double> z) {
    ForwardCtx ctx{Mode::train, false, nullptr};
    Var<double> fake = g.forward(t, z, ctx);
    auto out = d.forward(t, fake, ctx);
    Var<double> p_fake = ad::slice_cols(t, out.probs, 3, 4);
    return ad::mean_all(t, p_fake);
  };
  CHECK(grad_check<double>(composite, z0, 1e-5) < 1e-4);

  // And through parameter tensors: every trainable tensor of G and D.
  auto e2e_loss = [&](Tape<double>& t) {
    ForwardCtx ctx{Mode::train, false, nullptr};
    Var<double> fake = g.forward(t, t.leaf(z0), ctx);
    auto out = d.forward(t, fake, ctx);
    Var<double> p_fake = ad::slice_cols(t, out.probs, 3, 4);
    return ad::mean_all(t, p_fake);
  };
  std::vector<std::pair<std::string, Tensor<double>*>> trainables;
  auto collect = [&](const std::string& name, Tensor<double>& v, bool trainable) {
    if (trainable) trainables.emplace_back(name, &v);
  };
  g.visit_params(collect);
  d.visit_params(collect);
  REQUIRE(trainables.size() > 4);
  for (auto& [name, p] : trainables) {
    INFO("parameter ", name);
    CHECK(grad_check_param<double>(e2e_loss, *p, 1e-5) < 1e-4);
  }
}

}  // TEST_SUITE
