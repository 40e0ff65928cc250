#pragma once

#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>

#include "ssgan/checkpoint.hpp"
#include "ssgan/data.hpp"
#include "ssgan/eval.hpp"
#include "ssgan/losses.hpp"
#include "ssgan/optim.hpp"

namespace ssgan {

enum class Algorithm { ssgan, vanilla, supervised };

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::ssgan: return "ssgan";
    case Algorithm::vanilla: return "vanilla";
    case Algorithm::supervised: return "supervised";
  }
  return "?";
}

struct TrainingConfig {
  std::size_t batch_size = 32;   // m: half real, half generated per D update
  std::size_t iterations = 1000; // I
  std::size_t k_steps = 1;       // inner discriminator steps (vanilla only)
  std::size_t eval_interval = 100;  // epochs between test-set evaluations
  GenLossMode gen_loss = GenLossMode::feature_matching;
  double smoothing_alpha = 0.9;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::ssgan;
  double lr_g = 2e-4, lr_d = 2e-4;
  double adam_beta1 = 0.5, adam_beta2 = 0.999, adam_eps = 1e-8;
  std::size_t eval_batch = 64;

  void validate() const {
    check(batch_size >= 2 && batch_size % 2 == 0, Error::Kind::value,
          "batch size must be even and >= 2, got ", batch_size);
    check(eval_interval >= 1, Error::Kind::value, "eval interval must be >= 1");
    check(k_steps >= 1, Error::Kind::value, "k_steps must be >= 1");
    check(smoothing_alpha > 0.0 && smoothing_alpha <= 1.0, Error::Kind::value,
          "smoothing alpha must be in (0,1]");
  }

  template <typename T>
  AdamConfig<T> adam_g() const {
    return {static_cast<T>(lr_g), static_cast<T>(adam_beta1), static_cast<T>(adam_beta2),
            static_cast<T>(adam_eps)};
  }
  template <typename T>
  AdamConfig<T> adam_d() const {
    return {static_cast<T>(lr_d), static_cast<T>(adam_beta1), static_cast<T>(adam_beta2),
            static_cast<T>(adam_eps)};
  }
};

// Named substreams so every consumer of randomness draws from its own
// deterministic sequence.
struct TrainRng {
  RandomSource batch;
  RandomSource latent;
  RandomSource layer_noise;

  static TrainRng from_seed(std::uint64_t seed) {
    RandomSource master(seed);
    return TrainRng{master.fork("batch_sampling"), master.fork("latent_noise"),
                    master.fork("layer_noise")};
  }

  std::vector<std::uint64_t> serialize() const {
    std::vector<std::uint64_t> words;
    for (const RandomSource* s : {&batch, &latent, &layer_noise}) {
      const auto w = s->serialize();
      words.insert(words.end(), w.begin(), w.end());
    }
    return words;
  }

  static TrainRng deserialize(std::span<const std::uint64_t> words) {
    check(words.size() == 15, Error::Kind::parse, "rng state block must hold 15 words, got ",
          words.size());
    auto take = [&](std::size_t off) {
      std::array<std::uint64_t, 5> w;
      std::copy(words.begin() + off, words.begin() + off + 5, w.begin());
      return RandomSource::deserialize(w);
    };
    return TrainRng{take(0), take(5), take(10)};
  }
};

// ---------------------------------------------------------------------------
// Minibatch composition
// ---------------------------------------------------------------------------

template <typename T>
struct Minibatch {
  Tensor<T> images;                        // [m, C, H, W]
  std::vector<std::optional<int>> labels;  // per row, 1-based

  std::size_t size() const { return labels.size(); }

  std::vector<std::size_t> labeled_rows() const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i]) rows.push_back(i);
    return rows;
  }

  std::vector<std::size_t> unlabeled_rows() const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (!labels[i]) rows.push_back(i);
    return rows;
  }

  std::vector<int> labels_of(const std::vector<std::size_t>& rows) const {
    std::vector<int> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(*labels[r]);
    return out;
  }
};

namespace detail {

template <typename T>
Minibatch<T> assemble_batch(const std::vector<const Sample*>& picks) {
  const Shape& img = picks.front()->image.shape();
  Minibatch<T> batch;
  batch.images = Tensor<T>({picks.size(), img[0], img[1], img[2]});
  const std::size_t pixels = picks.front()->image.size();
  for (std::size_t i = 0; i < picks.size(); ++i) {
    check(picks[i]->image.size() == pixels, Error::Kind::shape,
          "mixed image shapes in training split near ", picks[i]->source_id);
    for (std::size_t p = 0; p < pixels; ++p)
      batch.images[i * pixels + p] = static_cast<T>(picks[i]->image[p]);
    batch.labels.push_back(picks[i]->label);
  }
  return batch;
}

template <typename T>
Minibatch<T> compose_from_pool(const std::vector<const Sample*>& pool, std::size_t m,
                               RandomSource& rng) {
  check(!pool.empty(), Error::Kind::value, "cannot sample a minibatch from an empty pool");
  std::vector<const Sample*> picks;
  picks.reserve(m);
  if (pool.size() < m) {
    for (std::size_t i = 0; i < m; ++i) picks.push_back(pool[rng.next_below(pool.size())]);
  } else {
    // Partial Fisher-Yates: m distinct samples, uniformly.
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t(0));
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + rng.next_below(idx.size() - i);
      std::swap(idx[i], idx[j]);
      picks.push_back(pool[idx[i]]);
    }
  }
  return assemble_batch<T>(picks);
}

}  // namespace detail

// Draws m samples uniformly from the pooled labeled+unlabeled train split
// (with replacement only when the pool is smaller than m). The result is
// partitioned by label presence via Minibatch::labeled_rows().
template <typename T>
Minibatch<T> compose_minibatch(const Dataset& dataset, std::size_t m, RandomSource& rng) {
  std::vector<const Sample*> pool;
  pool.reserve(dataset.train.size());
  for (const auto& s : dataset.train) pool.push_back(&s);
  return detail::compose_from_pool<T>(pool, m, rng);
}

// Labeled-only variant used by the supervised baseline.
template <typename T>
Minibatch<T> compose_labeled_minibatch(const Dataset& dataset, std::size_t m,
                                       RandomSource& rng) {
  std::vector<const Sample*> pool;
  for (const auto& s : dataset.train)
    if (s.label) pool.push_back(&s);
  check(!pool.empty(), Error::Kind::value, "training split has no labeled samples");
  return detail::compose_from_pool<T>(pool, m, rng);
}

// ---------------------------------------------------------------------------
// Parameter plumbing
// ---------------------------------------------------------------------------

namespace detail {

template <typename T, typename M>
std::map<std::string, Tensor<T>*> collect_params(M& model, bool trainable_only) {
  std::map<std::string, Tensor<T>*> out;
  model.visit_params([&](const std::string& name, Tensor<T>& v, bool trainable) {
    if (trainable_only && !trainable) return;
    const bool fresh = out.emplace(name, &v).second;
    check(fresh, Error::Kind::state, "duplicate parameter name ", name);
  });
  return out;
}

template <typename T>
void apply_gradients(Adam<T>& adam, const std::map<std::string, Tensor<T>*>& params,
                     Tape<T>& tape) {
  std::map<std::string, Tensor<T>> grads;
  for (const auto& [name, p] : params) grads.emplace(name, tape.grad_of(*p));
  adam.step(params, grads);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Step functions
// ---------------------------------------------------------------------------

// One SSGAN iteration: descend D on L = theta + delta over the joint
// real+fake batch, then descend G on the configured generator loss with D
// frozen. Fresh noise is drawn for each sub-step.
template <typename T>
LossReport<T> ssgan_step(Generator<T>& g, Discriminator<T>& d, const Minibatch<T>& batch,
                         const TrainingConfig& cfg, Adam<T>& adam_g, Adam<T>& adam_d,
                         TrainRng& rng) {
  const std::size_t m = batch.size();
  check(m >= 1, Error::Kind::value, "empty minibatch");
  const auto latent = static_cast<std::size_t>(g.latent_dim());
  LossReport<T> report;

  // --- discriminator update ------------------------------------------------
  Tensor<T> fake_images;
  {
    // Fake generation is detached from the D tape; G state is untouched.
    Tape<T> gen_tape;
    gen_tape.set_recording(false);
    Var<T> z = gen_tape.leaf(rng.latent.normal<T>({m, latent}, T(0), T(1)));
    fake_images = g.forward(gen_tape, z, {Mode::train, false, nullptr}).value();
  }
  {
    Tape<T> tape;
    Var<T> x_real = tape.leaf(batch.images);
    Var<T> x_fake = tape.leaf(std::move(fake_images));
    Var<T> x_all = ad::concat_batch(tape, x_real, x_fake);
    auto out_all = d.forward(tape, x_all, {Mode::train, true, &rng.layer_noise});
    auto out_real = slice_output(tape, out_all, 0, m);
    auto out_fake = slice_output(tape, out_all, m, 2 * m);

    Var<T> theta;
    const auto labeled = batch.labeled_rows();
    if (labeled.empty()) {
      theta = tape.leaf(Tensor<T>::scalar(T(0)));
    } else {
      auto out_labeled = take_output_rows(tape, out_real, labeled);
      theta = supervised_loss(tape, out_labeled, batch.labels_of(labeled),
                              static_cast<T>(cfg.smoothing_alpha));
    }
    Var<T> delta = unsupervised_loss(tape, out_real, out_fake);
    Var<T> total = total_loss(tape, theta, delta);
    report.theta = theta.value()[0];
    report.delta = delta.value()[0];
    report.total = total.value()[0];
    tape.backward(total);
    detail::apply_gradients(adam_d, detail::collect_params<T>(d, true), tape);
  }

  // --- generator update ----------------------------------------------------
  {
    Tape<T> tape;
    Var<T> z = tape.leaf(rng.latent.normal<T>({m, latent}, T(0), T(1)));
    Var<T> fake = g.forward(tape, z, {Mode::train, true, &rng.layer_noise});
    // D runs in train mode but frozen: no running-stat updates, and only G's
    // gradients are applied.
    const ForwardCtx frozen{Mode::train, false, &rng.layer_noise};
    auto fake_out = d.forward(tape, fake, frozen);
    Var<T> gloss;
    if (cfg.gen_loss == GenLossMode::feature_matching) {
      Var<T> x_real = tape.leaf(batch.images);
      auto real_out = d.forward(tape, x_real, frozen);
      gloss = generator_loss(tape, cfg.gen_loss, real_out, fake_out);
    } else {
      gloss = generator_loss(tape, cfg.gen_loss, fake_out, fake_out);
    }
    report.gen_loss = gloss.value()[0];
    tape.backward(gloss);
    detail::apply_gradients(adam_g, detail::collect_params<T>(g, true), tape);
  }
  return report;
}

// One Algorithm-1 iteration: k_steps ascents of the discriminator objective
// (implemented as descent on its negation), then one generator descent.
template <typename T>
std::pair<T, T> vanilla_gan_step(Generator<T>& g, Discriminator<T>& d_sigmoid,
                                 const Minibatch<T>& batch, const TrainingConfig& cfg,
                                 Adam<T>& adam_g, Adam<T>& adam_d, TrainRng& rng) {
  check(d_sigmoid.num_classes() == 0, Error::Kind::value,
        "vanilla_gan_step requires the single-unit baseline discriminator");
  const std::size_t m = batch.size();
  const auto latent = static_cast<std::size_t>(g.latent_dim());
  T d_objective = T(0);

  for (std::size_t step = 0; step < cfg.k_steps; ++step) {
    Tensor<T> fake_images;
    {
      Tape<T> gen_tape;
      gen_tape.set_recording(false);
      Var<T> z = gen_tape.leaf(rng.latent.normal<T>({m, latent}, T(0), T(1)));
      fake_images = g.forward(gen_tape, z, {Mode::train, false, nullptr}).value();
    }
    Tape<T> tape;
    Var<T> d_real =
        d_sigmoid.forward_score(tape, tape.leaf(batch.images), {Mode::train, true, &rng.layer_noise});
    Var<T> d_fake = d_sigmoid.forward_score(tape, tape.leaf(std::move(fake_images)),
                                            {Mode::train, true, &rng.layer_noise});
    Var<T> objective = vanilla_d_objective(tape, d_real, d_fake);
    d_objective = objective.value()[0];
    tape.backward(ad::neg(tape, objective));
    detail::apply_gradients(adam_d, detail::collect_params<T>(d_sigmoid, true), tape);
  }

  Tape<T> tape;
  Var<T> z = tape.leaf(rng.latent.normal<T>({m, latent}, T(0), T(1)));
  Var<T> fake = g.forward(tape, z, {Mode::train, true, &rng.layer_noise});
  Var<T> d_fake = d_sigmoid.forward_score(tape, fake, {Mode::train, false, &rng.layer_noise});
  Var<T> g_objective = vanilla_g_objective(tape, d_fake);
  const T g_value = g_objective.value()[0];
  tape.backward(g_objective);
  detail::apply_gradients(adam_g, detail::collect_params<T>(g, true), tape);
  return {d_objective, g_value};
}

// Supervised-only baseline: descend D on theta alone over labeled samples.
template <typename T>
T supervised_step(Discriminator<T>& d, const Minibatch<T>& batch, const TrainingConfig& cfg,
                  Adam<T>& adam_d, TrainRng& rng) {
  const auto labeled = batch.labeled_rows();
  check(labeled.size() == batch.size(), Error::Kind::value,
        "supervised_step requires a fully labeled batch");
  Tape<T> tape;
  auto out = d.forward(tape, tape.leaf(batch.images), {Mode::train, true, &rng.layer_noise});
  Var<T> theta = supervised_loss(tape, out, batch.labels_of(labeled),
                                 static_cast<T>(cfg.smoothing_alpha));
  const T value = theta.value()[0];
  tape.backward(theta);
  detail::apply_gradients(adam_d, detail::collect_params<T>(d, true), tape);
  return value;
}

// ---------------------------------------------------------------------------
// Checkpoint assembly
// ---------------------------------------------------------------------------

namespace detail {

inline void append_adam(std::vector<std::pair<std::string, Tensor<float>>>& tensors,
                        const std::string& prefix, const Adam<float>& adam) {
  for (const auto& [name, slot] : adam.slots()) {
    tensors.emplace_back(prefix + ".m." + name, slot.m);
    tensors.emplace_back(prefix + ".v." + name, slot.v);
  }
  tensors.emplace_back(prefix + ".t",
                       Tensor<float>::scalar(static_cast<float>(adam.step_count())));
}

inline void restore_adam(const Checkpoint& ckpt, const std::string& prefix, Adam<float>& adam) {
  const Tensor<float>* t = ckpt.find(prefix + ".t");
  check(t != nullptr, Error::Kind::parse, "checkpoint is missing ", prefix, ".t");
  std::map<std::string, Adam<float>::Slot> slots;
  const std::string m_prefix = prefix + ".m.";
  for (const auto& [name, tensor] : ckpt.tensors) {
    if (name.rfind(m_prefix, 0) != 0) continue;
    const std::string param = name.substr(m_prefix.size());
    const Tensor<float>* v = ckpt.find(prefix + ".v." + param);
    check(v != nullptr, Error::Kind::parse, "checkpoint is missing ", prefix, ".v.", param);
    slots.emplace(param, Adam<float>::Slot{tensor, *v});
  }
  adam.restore(static_cast<std::int64_t>((*t)[0]), std::move(slots));
}

template <typename M>
void append_model(std::vector<std::pair<std::string, Tensor<float>>>& tensors,
                  const std::string& prefix, M& model) {
  for (const auto& [name, p] : collect_params<float>(model, false))
    tensors.emplace_back(prefix + "." + name, *p);
}

template <typename M>
void restore_model(const Checkpoint& ckpt, const std::string& prefix, M& model) {
  for (auto& [name, p] : collect_params<float>(model, false)) {
    const Tensor<float>* t = ckpt.find(prefix + "." + name);
    check(t != nullptr, Error::Kind::parse, "checkpoint is missing tensor ", prefix, ".", name);
    check(t->shape() == p->shape(), Error::Kind::shape, "checkpoint tensor ", prefix, ".", name,
          " has shape ", shape_str(t->shape()), " but the model expects ",
          shape_str(p->shape()));
    *p = *t;
  }
}

}  // namespace detail

inline Checkpoint make_checkpoint(Generator<float>* g, Discriminator<float>& d,
                                  const Adam<float>* adam_g, const Adam<float>& adam_d,
                                  std::uint64_t iteration, const TrainRng& rng,
                                  std::string config_echo) {
  Checkpoint ckpt;
  if (g) detail::append_model(ckpt.tensors, "g", *g);
  detail::append_model(ckpt.tensors, "d", d);
  if (adam_g) detail::append_adam(ckpt.tensors, "adam_g", *adam_g);
  detail::append_adam(ckpt.tensors, "adam_d", adam_d);
  std::sort(ckpt.tensors.begin(), ckpt.tensors.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  ckpt.iteration = iteration;
  ckpt.rng_words = rng.serialize();
  ckpt.config_echo = std::move(config_echo);
  return ckpt;
}

inline void restore_from_checkpoint(const Checkpoint& ckpt, Generator<float>* g,
                                    Discriminator<float>& d, Adam<float>* adam_g,
                                    Adam<float>& adam_d, TrainRng& rng) {
  if (g) detail::restore_model(ckpt, "g", *g);
  detail::restore_model(ckpt, "d", d);
  if (adam_g) detail::restore_adam(ckpt, "adam_g", *adam_g);
  detail::restore_adam(ckpt, "adam_d", adam_d);
  rng = TrainRng::deserialize(ckpt.rng_words);
}

// Loads just one model's parameter tensors (prefix "g" or "d"), e.g. for
// evaluation or sample generation from a checkpoint.
template <typename M>
void restore_model_params(const Checkpoint& ckpt, const std::string& prefix, M& model) {
  detail::restore_model(ckpt, prefix, model);
}

// ---------------------------------------------------------------------------
// Outer loop
// ---------------------------------------------------------------------------

struct MetricsRow {
  std::uint64_t iter = 0;
  std::size_t epoch = 0;
  std::optional<float> theta, delta, total, gen_loss;
  std::optional<EvalReport> eval;
};

struct TrainSinks {
  std::ostream* metrics = nullptr;         // CSV rows; header written here
  std::filesystem::path checkpoint_dir;    // empty disables checkpoints
  std::function<void(const std::string&)> log;
};

struct TrainResult {
  Checkpoint final_checkpoint;
  std::vector<MetricsRow> history;
};

inline constexpr const char* kMetricsHeader = "iter,epoch,theta,delta,total,gen_loss,top1,top5,top10";

namespace detail {

inline std::string metrics_row_csv(const MetricsRow& row) {
  auto cell = [](const std::optional<float>& v) {
    if (!v) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(*v));
    return std::string(buf);
  };
  std::string line = str(row.iter, ",", row.epoch, ",", cell(row.theta), ",", cell(row.delta),
                         ",", cell(row.total), ",", cell(row.gen_loss), ",");
  auto pct = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
  };
  if (row.eval)
    line += str(pct(row.eval->top1), ",", pct(row.eval->top5), ",", pct(row.eval->top10));
  else
    line += ",,";
  return line;
}

}  // namespace detail

// Runs `cfg.iterations` steps of the configured algorithm over the dataset's
// train split, evaluating on the test split every eval_interval epochs
// (one epoch = ceil(train_size / batch_size) iterations) and writing
// checkpoints at each evaluation point. Resuming from a checkpoint
// reproduces the uninterrupted trajectory.
inline TrainResult train(Generator<float>* g, Discriminator<float>& d, const Dataset& dataset,
                         const TrainingConfig& cfg, TrainSinks& sinks,
                         const std::string& config_echo = "",
                         const Checkpoint* resume = nullptr) {
  cfg.validate();
  check(!dataset.train.empty(), Error::Kind::value, "training split is empty");
  const bool needs_generator = cfg.algorithm != Algorithm::supervised;
  check(!needs_generator || g != nullptr, Error::Kind::value,
        "the ", algorithm_name(cfg.algorithm), " algorithm requires a generator");

  Adam<float> adam_g(cfg.adam_g<float>());
  Adam<float> adam_d(cfg.adam_d<float>());
  TrainRng rng = TrainRng::from_seed(cfg.seed);
  std::uint64_t start_iter = 0;
  if (resume) {
    restore_from_checkpoint(*resume, g, d, needs_generator ? &adam_g : nullptr, adam_d, rng);
    start_iter = resume->iteration;
    check(start_iter <= cfg.iterations, Error::Kind::value, "checkpoint is at iteration ",
          start_iter, ", beyond the configured ", cfg.iterations);
  }

  const std::size_t iters_per_epoch =
      (dataset.train.size() + cfg.batch_size - 1) / cfg.batch_size;

  auto snapshot = [&](std::uint64_t iter) {
    return make_checkpoint(needs_generator ? g : nullptr, d,
                           needs_generator ? &adam_g : nullptr, adam_d, iter, rng, config_echo);
  };
  auto write_ckpt = [&](std::uint64_t iter, const char* tag) {
    if (sinks.checkpoint_dir.empty()) return;
    char name[64];
    std::snprintf(name, sizeof(name), "ckpt-%s.ssgn", tag);
    save_checkpoint(snapshot(iter), sinks.checkpoint_dir / name);
  };
  auto emit_row = [&](const MetricsRow& row) {
    if (!sinks.metrics) return;
    (*sinks.metrics) << detail::metrics_row_csv(row) << "\n";
    if (!sinks.metrics->good()) {
      write_ckpt(row.iter, "abort");
      fail(Error::Kind::io, "metrics sink write failed at iteration ", row.iter);
    }
  };

  TrainResult result;
  if (sinks.metrics && start_iter == 0) {
    (*sinks.metrics) << kMetricsHeader << "\n";
    check(sinks.metrics->good(), Error::Kind::io, "metrics sink write failed on header");
  }

  for (std::uint64_t iter = start_iter; iter < cfg.iterations; ++iter) {
    MetricsRow row;
    row.iter = iter + 1;
    row.epoch = static_cast<std::size_t>(iter / iters_per_epoch) + 1;

    switch (cfg.algorithm) {
      case Algorithm::ssgan: {
        auto batch = compose_minibatch<float>(dataset, cfg.batch_size, rng.batch);
        auto report = ssgan_step(*g, d, batch, cfg, adam_g, adam_d, rng);
        row.theta = report.theta;
        row.delta = report.delta;
        row.total = report.total;
        row.gen_loss = report.gen_loss;
        break;
      }
      case Algorithm::vanilla: {
        auto batch = compose_minibatch<float>(dataset, cfg.batch_size, rng.batch);
        auto [d_obj, g_obj] = vanilla_gan_step(*g, d, batch, cfg, adam_g, adam_d, rng);
        row.total = d_obj;
        row.gen_loss = g_obj;
        break;
      }
      case Algorithm::supervised: {
        auto batch = compose_labeled_minibatch<float>(dataset, cfg.batch_size, rng.batch);
        const float theta = supervised_step(d, batch, cfg, adam_d, rng);
        row.theta = theta;
        row.total = theta;
        break;
      }
    }

    const bool epoch_done = (iter + 1) % iters_per_epoch == 0;
    const std::size_t epochs_completed = static_cast<std::size_t>((iter + 1) / iters_per_epoch);
    if (epoch_done && epochs_completed % cfg.eval_interval == 0 && !dataset.test.empty() &&
        cfg.algorithm != Algorithm::vanilla) {
      row.eval = evaluate(d, dataset.test, cfg.eval_batch,
                          str(algorithm_name(cfg.algorithm), "@", iter + 1));
      char tag[32];
      std::snprintf(tag, sizeof(tag), "%06llu", static_cast<unsigned long long>(iter + 1));
      write_ckpt(iter + 1, tag);
      if (sinks.log)
        sinks.log(str("iter ", iter + 1, " epoch ", epochs_completed, " top1 ",
                      row.eval->top1));
    }
    emit_row(row);
    result.history.push_back(std::move(row));
  }

  result.final_checkpoint = snapshot(cfg.iterations);
  write_ckpt(cfg.iterations, "final");
  return result;
}

}  // namespace ssgan
