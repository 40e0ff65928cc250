#include <doctest.h>

#include "ssgan/losses.hpp"

using namespace ssgan;

namespace {

template <typename T>
DiscriminatorOutput<T> output_from_logits(Tape<T>& tape, Tensor<T> logits) {
  DiscriminatorOutput<T> out;
  out.logits = tape.leaf(std::move(logits));
  out.probs = ad::softmax(tape, out.logits);
  const std::size_t rows = out.logits.value().dim(0);
  out.features = tape.leaf(Tensor<T>({rows, 2}));
  return out;
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("supervised loss worked value: k=2, logits (ln2,0,0), label 1") {
  Tape<double> tape;
  auto out = output_from_logits<double>(tape, Tensor<double>({1, 3}, {std::log(2.0), 0.0, 0.0}));
  Var<double> theta = supervised_loss(tape, out, {1});
  // Renormalized over the two real classes: p = 2/3.
  CHECK(theta.value()[0] == doctest::Approx(-std::log(2.0 / 3.0)).epsilon(1e-9));
  CHECK(theta.value()[0] == doctest::Approx(0.405465).epsilon(1e-6));
}

TEST_CASE("supervised loss of a perfectly confident logit tends to zero") {
  Tape<double> tape;
  auto out = output_from_logits<double>(tape, Tensor<double>({1, 3}, {50.0, 0.0, 10.0}));
  Var<double> theta = supervised_loss(tape, out, {1});
  CHECK(theta.value()[0] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("supervised loss of uniform logits is ln k") {
  for (std::size_t k : {2, 5, 11}) {
    Tape<double> tape;
    auto out = output_from_logits<double>(tape, Tensor<double>({3, k + 1}));
    Var<double> theta = supervised_loss(tape, out, std::vector<int>{1, static_cast<int>(k), 2});
    CHECK(theta.value()[0] ==
          doctest::Approx(std::log(static_cast<double>(k))).epsilon(1e-9));
  }
}

TEST_CASE("supervised loss rejects the fake class and out-of-range labels") {
  Tape<double> tape;
  auto out = output_from_logits<double>(tape, Tensor<double>({1, 3}));
  CHECK_THROWS_AS(supervised_loss(tape, out, {3}), Error);  // k+1 = 3 is the fake class
  Tape<double> tape2;
  auto out2 = output_from_logits<double>(tape2, Tensor<double>({1, 3}));
  CHECK_THROWS_AS(supervised_loss(tape2, out2, {0}), Error);
}

TEST_CASE("supervised loss is invariant to a constant shift of the real logits") {
  RandomSource rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto logits = rng.uniform<double>({4, 5}, -2, 2);
    auto shifted = logits;
    const double c = rng.next_uniform() * 6 - 3;
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t j = 0; j + 1 < 5; ++j) shifted.at(r, j) += c;
    Tape<double> t1, t2;
    auto o1 = output_from_logits<double>(t1, logits);
    auto o2 = output_from_logits<double>(t2, shifted);
    std::vector<int> labels{1, 2, 3, 4};
    CHECK(supervised_loss(t1, o1, labels).value()[0] ==
          doctest::Approx(supervised_loss(t2, o2, labels).value()[0]).epsilon(1e-9));
  }
}

TEST_CASE("label smoothing scales theta by alpha without changing the argmax target") {
  Tape<double> t1, t2;
  Tensor<double> logits({2, 4}, {1.0, 0.5, -0.2, 0.0, -1.0, 2.0, 0.3, 0.0});
  auto o1 = output_from_logits<double>(t1, logits);
  auto o2 = output_from_logits<double>(t2, logits);
  const double plain = supervised_loss(t1, o1, {1, 2}).value()[0];
  const double smoothed = supervised_loss(t2, o2, {1, 2}, 0.9).value()[0];
  CHECK(smoothed == doctest::Approx(0.9 * plain).epsilon(1e-12));
}

TEST_CASE("unsupervised loss worked value: one real + one fake, zero logits, k=2") {
  Tape<double> tape;
  auto real_out = output_from_logits<double>(tape, Tensor<double>({1, 3}));
  auto fake_out = output_from_logits<double>(tape, Tensor<double>({1, 3}));
  Var<double> delta = unsupervised_loss(tape, real_out, fake_out);
  const double expected = -std::log(2.0 / 3.0) - std::log(1.0 / 3.0);
  CHECK(delta.value()[0] == doctest::Approx(expected).epsilon(1e-9));
  CHECK(delta.value()[0] == doctest::Approx(1.504077).epsilon(1e-6));
}

TEST_CASE("unsupervised loss vanishes for a perfect discriminator") {
  Tape<double> tape;
  auto real_out = output_from_logits<double>(tape, Tensor<double>({1, 3}, {40.0, 0.0, -40.0}));
  auto fake_out = output_from_logits<double>(tape, Tensor<double>({1, 3}, {-40.0, 0.0, 40.0}));
  Var<double> delta = unsupervised_loss(tape, real_out, fake_out);
  CHECK(delta.value()[0] == doctest::Approx(0.0).epsilon(1e-5));
  CHECK(delta.value()[0] >= 0.0);
}

TEST_CASE("delta via log(1-p_fake) equals delta via log sum of real probs") {
  RandomSource rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto rl = rng.uniform<double>({4, 5}, -3, 3);
    auto fl = rng.uniform<double>({4, 5}, -3, 3);
    Tape<double> tape;
    auto real_out = output_from_logits<double>(tape, rl);
    auto fake_out = output_from_logits<double>(tape, fl);
    const double delta = unsupervised_loss(tape, real_out, fake_out).value()[0];

    // Alternative route: -mean log sum_{i<=k} p_i - mean log p_{k+1}.
    double alt = 0;
    const auto& rp = real_out.probs.value();
    for (std::size_t r = 0; r < 4; ++r) {
      double sum_real = 0;
      for (std::size_t j = 0; j + 1 < 5; ++j) sum_real += rp.at(r, j);
      alt += -std::log(sum_real) / 4.0;
    }
    const auto& fp = fake_out.probs.value();
    for (std::size_t r = 0; r < 4; ++r) alt += -std::log(fp.at(r, 4)) / 4.0;
    CHECK(delta == doctest::Approx(alt).epsilon(1e-9));
    CHECK(delta >= 0.0);
  }
}

TEST_CASE("total loss is exactly theta + delta") {
  CHECK(total_loss(0.0, 0.0) == 0.0);
  const double theta = 0.4054651081, delta = 1.5040773967;
  CHECK(total_loss(theta, delta) == theta + delta);
  CHECK(total_loss(theta, delta) == doctest::Approx(1.9095).epsilon(1e-3));

  // Batch with no labeled members: theta contributes zero.
  Tape<double> tape;
  auto out = output_from_logits<double>(tape, Tensor<double>({2, 3}));
  Var<double> th = supervised_loss(tape, out, {});
  CHECK(th.value()[0] == 0.0);
}

TEST_CASE("feature matching loss identities") {
  Tape<double> tape;
  RandomSource rng(3);
  auto f = rng.uniform<double>({4, 6}, -1, 1);
  Var<double> same = feature_matching_loss(tape, tape.leaf(f), tape.leaf(f));
  CHECK(same.value()[0] == 0.0);

  Var<double> l = feature_matching_loss(
      tape, tape.leaf(Tensor<double>({1, 2}, {1.0, 0.0})),
      tape.leaf(Tensor<double>({1, 2}, {0.0, 1.0})));
  CHECK(l.value()[0] == doctest::Approx(2.0).epsilon(1e-12));

  // Permuting samples leaves the loss unchanged (mean over the batch).
  auto g = rng.uniform<double>({4, 6}, -1, 1);
  Tensor<double> g_perm({4, 6});
  const std::size_t perm[4] = {2, 0, 3, 1};
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 6; ++c) g_perm.at(r, c) = g.at(perm[r], c);
  Var<double> a = feature_matching_loss(tape, tape.leaf(f), tape.leaf(g));
  Var<double> b = feature_matching_loss(tape, tape.leaf(f), tape.leaf(g_perm));
  CHECK(a.value()[0] == doctest::Approx(b.value()[0]).epsilon(1e-12));
  CHECK(a.value()[0] >= 0.0);

  CHECK_THROWS_AS(
      feature_matching_loss(tape, tape.leaf(Tensor<double>({2, 3})), tape.leaf(Tensor<double>({2, 4}))),
      Error);
}

TEST_CASE("vanilla objectives worked values") {
  Tape<double> tape;
  Var<double> half_real = tape.leaf(Tensor<double>::full({4}, 0.5));
  Var<double> half_fake = tape.leaf(Tensor<double>::full({4}, 0.5));
  Var<double> d_obj = vanilla_d_objective(tape, half_real, half_fake);
  CHECK(d_obj.value()[0] == doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-9));
  CHECK(d_obj.value()[0] == doctest::Approx(-1.3863).epsilon(1e-4));

  Var<double> perfect = vanilla_d_objective(tape, tape.leaf(Tensor<double>::full({4}, 1.0)),
                                            tape.leaf(Tensor<double>::full({4}, 0.0)));
  CHECK(perfect.value()[0] == doctest::Approx(0.0).epsilon(1e-5));

  Var<double> g_obj = vanilla_g_objective(tape, tape.leaf(Tensor<double>::full({3}, 0.5)));
  CHECK(g_obj.value()[0] == doctest::Approx(std::log(0.5)).epsilon(1e-9));

  // Generator winning: D(G(z)) -> 1 drives the objective strongly negative.
  Var<double> winning = vanilla_g_objective(tape, tape.leaf(Tensor<double>::full({3}, 0.999)));
  CHECK(winning.value()[0] < -6.0);

  // Mean over a constant batch equals the single-sample value.
  Var<double> single = vanilla_g_objective(tape, tape.leaf(Tensor<double>::full({1}, 0.5)));
  CHECK(g_obj.value()[0] == doctest::Approx(single.value()[0]).epsilon(1e-12));
}

TEST_CASE("vanilla d objective is symmetric in batch order") {
  Tape<double> tape;
  Tensor<double> r({3}, {0.2, 0.7, 0.5});
  Tensor<double> r_perm({3}, {0.5, 0.2, 0.7});
  Tensor<double> f({3}, {0.4, 0.1, 0.9});
  Tensor<double> f_perm({3}, {0.9, 0.4, 0.1});
  Var<double> a = vanilla_d_objective(tape, tape.leaf(r), tape.leaf(f));
  Var<double> b = vanilla_d_objective(tape, tape.leaf(r_perm), tape.leaf(f_perm));
  CHECK(a.value()[0] == doctest::Approx(b.value()[0]).epsilon(1e-12));
}

TEST_CASE("generator loss modes") {
  Tape<double> tape;
  auto real_out = output_from_logits<double>(tape, Tensor<double>({2, 3}));
  auto fake_out = output_from_logits<double>(tape, Tensor<double>({2, 3}));
  Var<double> fm = generator_loss(tape, GenLossMode::feature_matching, real_out, fake_out);
  CHECK(fm.value()[0] == 0.0);  // identical (zero) feature taps

  Var<double> ns = generator_loss(tape, GenLossMode::nonsaturating, real_out, fake_out);
  CHECK(ns.value()[0] == doctest::Approx(-std::log(2.0 / 3.0)).epsilon(1e-9));

  // Monotone: lower p_fake on generated samples lowers the loss.
  Tape<double> t2;
  auto better = output_from_logits<double>(t2, Tensor<double>({2, 3}, {2.0, 2.0, -2.0,
                                                                       2.0, 2.0, -2.0}));
  auto real2 = output_from_logits<double>(t2, Tensor<double>({2, 3}));
  Var<double> ns_better = generator_loss(t2, GenLossMode::nonsaturating, real2, better);
  CHECK(ns_better.value()[0] < ns.value()[0]);
}

TEST_CASE("apply_label_smoothing") {
  Tensor<double> t({1, 3}, {0.0, 1.0, 0.0});
  auto s = apply_label_smoothing(t, 0.9);
  CHECK(s.at(0, 0) == 0.0);
  CHECK(s.at(0, 1) == doctest::Approx(0.9));
  CHECK(s.at(0, 2) == 0.0);

  auto identity = apply_label_smoothing(t, 1.0);
  CHECK(identity.vec() == t.vec());

  Tensor<double> bad({1, 3}, {0.0, 0.5, 0.5});
  CHECK_THROWS_AS(apply_label_smoothing(bad, 0.9), Error);
  Tensor<double> two_hot({1, 3}, {1.0, 1.0, 0.0});
  CHECK_THROWS_AS(apply_label_smoothing(two_hot, 0.9), Error);
  CHECK_THROWS_AS(apply_label_smoothing(t, 0.0), Error);
}

TEST_CASE("losses pass grad_check through the logits") {
  RandomSource rng(29);
  const double h = 1e-5, tol = 1e-4;
  auto real_logits = rng.uniform<double>({3, 4}, -2, 2);
  auto fake_logits = rng.uniform<double>({3, 4}, -2, 2);
  const std::vector<int> labels{1, 3, 2};

  CHECK(grad_check<double>(
            [&](Tape<double>& t, Var<double> v) {
              DiscriminatorOutput<double> out;
              out.logits = v;
              out.probs = ad::softmax(t, v);
              out.features = t.leaf(Tensor<double>({3, 2}));
              return supervised_loss(t, out, labels, 0.9);
            },
            real_logits, h) < tol);

  CHECK(grad_check<double>(
            [&](Tape<double>& t, Var<double> v) {
              DiscriminatorOutput<double> real_out, fake_out;
              real_out.logits = v;
              real_out.probs = ad::softmax(t, v);
              real_out.features = t.leaf(Tensor<double>({3, 2}));
              fake_out.logits = t.leaf(fake_logits);
              fake_out.probs = ad::softmax(t, fake_out.logits);
              fake_out.features = t.leaf(Tensor<double>({3, 2}));
              Var<double> theta = supervised_loss(t, real_out, labels);
              Var<double> delta = unsupervised_loss(t, real_out, fake_out);
              return total_loss(t, theta, delta);
            },
            real_logits, h) < tol);

  auto rf = rng.uniform<double>({3, 5}, -1, 1);
  auto ff = rng.uniform<double>({4, 5}, -1, 1);
  CHECK(grad_check<double>(
            [&](Tape<double>& t, Var<double> v) {
              return feature_matching_loss(t, t.leaf(rf), v);
            },
            ff, h) < tol);

  auto pre_sig = rng.uniform<double>({4}, -2, 2);
  CHECK(grad_check<double>(
            [&](Tape<double>& t, Var<double> v) {
              Var<double> d_real = ad::sigmoid(t, v);
              Var<double> d_fake = ad::sigmoid(t, t.leaf(pre_sig));
              return vanilla_d_objective(t, d_real, d_fake);
            },
            pre_sig, h) < tol);
  CHECK(grad_check<double>(
            [&](Tape<double>& t, Var<double> v) {
              return vanilla_g_objective(t, ad::sigmoid(t, v));
            },
            pre_sig, h) < tol);
}

}  // TEST_SUITE
