// Command-line front end: dataset splitting, training, evaluation, sample
// grids and the gradient-check suite. Every command is reproducible from
// (config file, seed) alone.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "ssgan/config.hpp"
#include "ssgan/gradcheck.hpp"

namespace {

using namespace ssgan;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

Dataset build_dataset(const RunConfig& cfg) {
  const auto seed = static_cast<std::uint64_t>(cfg.seed);
  if (cfg.dataset_kind == "synthetic") {
    Dataset raw = make_synthetic(static_cast<int>(cfg.synth_classes),
                                 static_cast<int>(cfg.synth_per_class),
                                 static_cast<int>(cfg.image_size), seed);
    Dataset split =
        split_train_test(raw, Protocol::parse(cfg.protocol, cfg.train_fraction), seed);
    return strip_labels(split, cfg.unlabeled, seed);
  }
  check(!cfg.dataset_root.empty(), Error::Kind::value, "dataset_root is required");
  check(!cfg.manifest.empty(), Error::Kind::value,
        "a split manifest is required; run the split command first");
  return load_with_manifest(cfg.dataset_root, cfg.manifest, cfg.image_shape());
}

int cmd_split(const RunConfig& cfg) {
  cfg.validate();
  check(cfg.dataset_kind == "directory", Error::Kind::value,
        "split operates on directory datasets (set dataset_kind = directory)");
  check(!cfg.dataset_root.empty(), Error::Kind::value, "--data (dataset_root) is required");
  const auto seed = static_cast<std::uint64_t>(cfg.seed);
  Dataset loaded = load_dataset(cfg.dataset_root, cfg.image_shape());
  Dataset split =
      split_train_test(loaded, Protocol::parse(cfg.protocol, cfg.train_fraction), seed);
  Dataset stripped = strip_labels(split, cfg.unlabeled, seed);
  std::filesystem::create_directories(cfg.out_dir);
  const auto path = std::filesystem::path(cfg.out_dir) / "manifest.json";
  write_manifest(stripped, path, cfg.protocol, cfg.unlabeled, seed);
  std::size_t labeled = 0;
  for (const auto& s : stripped.train) labeled += s.label.has_value();
  std::printf("wrote %s: %zu classes, %zu train (%zu labeled), %zu test\n",
              path.string().c_str(), stripped.num_classes(), stripped.train.size(), labeled,
              stripped.test.size());
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, const std::string& resume_path) {
  cfg.validate();
  Dataset dataset = build_dataset(cfg);
  const int k = static_cast<int>(dataset.num_classes());
  const ImageShape img = cfg.image_shape();
  const auto widths = cfg.channel_widths();
  const auto seed = static_cast<std::uint64_t>(cfg.seed);
  const TrainingConfig tc = cfg.training();

  Generator<float> g;
  Discriminator<float> d;
  if (tc.algorithm == Algorithm::vanilla)
    d = build_vanilla_discriminator<float>(img, widths, static_cast<float>(cfg.noise_std), seed);
  else
    d = build_discriminator<float>(k, img, widths, static_cast<float>(cfg.noise_std), seed);
  if (tc.algorithm != Algorithm::supervised)
    g = build_generator<float>(static_cast<int>(cfg.latent_dim), img, widths, seed);

  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream metrics;
  const bool fresh = resume_path.empty();
  metrics.open(std::filesystem::path(cfg.out_dir) / "metrics.csv",
               fresh ? std::ios::out : std::ios::app);
  check(metrics.good(), Error::Kind::io, "cannot open metrics.csv under ", cfg.out_dir);

  TrainSinks sinks;
  sinks.metrics = &metrics;
  sinks.checkpoint_dir = cfg.out_dir;
  sinks.log = [](const std::string& line) { std::printf("%s\n", line.c_str()); };

  Checkpoint resume;
  const Checkpoint* resume_ptr = nullptr;
  if (!resume_path.empty()) {
    resume = load_checkpoint(resume_path);
    resume_ptr = &resume;
  }

  TrainResult result = train(tc.algorithm == Algorithm::supervised ? nullptr : &g, d, dataset,
                             tc, sinks, serialize_config(cfg), resume_ptr);
  std::printf("trained %zu iterations; final checkpoint at %s/ckpt-final.ssgn\n",
              tc.iterations, cfg.out_dir.c_str());
  if (!result.history.empty() && result.history.back().eval)
    std::printf("final top1 %.2f%%\n", result.history.back().eval->top1);
  return kExitOk;
}

RunConfig config_from_checkpoint(const Checkpoint& ckpt) {
  check(!ckpt.config_echo.empty(), Error::Kind::parse,
        "checkpoint carries no config echo; pass --config explicitly");
  return parse_config(ckpt.config_echo);
}

int cmd_eval(RunConfig cfg, bool config_given, const std::string& checkpoint_path,
             const std::function<void(RunConfig&)>& apply_flags) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  if (!config_given) {
    cfg = config_from_checkpoint(ckpt);
    apply_flags(cfg);
  }
  cfg.validate();
  Dataset dataset = build_dataset(cfg);
  check(!dataset.test.empty(), Error::Kind::value, "dataset has no test split to evaluate");
  const int k = static_cast<int>(dataset.num_classes());
  Discriminator<float> d = build_discriminator<float>(
      k, cfg.image_shape(), cfg.channel_widths(), static_cast<float>(cfg.noise_std),
      static_cast<std::uint64_t>(cfg.seed));
  restore_model_params(ckpt, "d", d);

  EvalReport report = evaluate(d, dataset.test, static_cast<std::size_t>(cfg.eval_batch),
                               std::filesystem::path(checkpoint_path).filename().string());
  std::filesystem::create_directories(cfg.out_dir);
  for (ReportFormat fmt : cfg.report_formats()) {
    const char* ext = fmt == ReportFormat::csv ? "csv" : fmt == ReportFormat::json ? "json" : "txt";
    const auto path = std::filesystem::path(cfg.out_dir) / str("report.", ext);
    write_report(report, path, fmt);
    std::printf("wrote %s\n", path.string().c_str());
  }
  std::printf("top1 %.2f%%  top5 %.2f%%  top10 %.2f%%  (%zu samples, %d classes)\n",
              report.top1, report.top5, report.top10, report.sample_count, k);
  return kExitOk;
}

int cmd_generate(RunConfig cfg, bool config_given, const std::string& checkpoint_path,
                 std::size_t count, const std::string& grid_spec, const std::string& out_png,
                 const std::function<void(RunConfig&)>& apply_flags) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  if (!config_given) {
    cfg = config_from_checkpoint(ckpt);
    apply_flags(cfg);
  }
  cfg.validate();
  const auto x = grid_spec.find('x');
  check(x != std::string::npos, Error::Kind::value, "--grid expects COLSxROWS, got ", grid_spec);
  const std::size_t cols = std::stoul(grid_spec.substr(0, x));
  const std::size_t rows = std::stoul(grid_spec.substr(x + 1));
  check(cols * rows >= count, Error::Kind::value, "grid ", grid_spec, " cannot hold ", count,
        " samples");

  Generator<float> g =
      build_generator<float>(static_cast<int>(cfg.latent_dim), cfg.image_shape(),
                             cfg.channel_widths(), static_cast<std::uint64_t>(cfg.seed));
  restore_model_params(ckpt, "g", g);
  RandomSource rng = RandomSource(static_cast<std::uint64_t>(cfg.seed)).fork("generate");
  std::filesystem::path path = out_png.empty()
                                   ? std::filesystem::path(cfg.out_dir) / "samples.png"
                                   : std::filesystem::path(out_png);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_image_grid(g, count, cols, rows, path, rng);
  std::printf("wrote %s (%zu samples on a %zux%zu grid)\n", path.string().c_str(), count, cols,
              rows);
  return kExitOk;
}

int cmd_gradcheck(const std::string& precision, std::size_t trials, std::uint64_t seed,
                  bool inject) {
  check(precision == "double" || precision == "float", Error::Kind::value,
        "--precision must be double or float");
  std::vector<GradCheckResult> results =
      precision == "double" ? run_gradcheck_suite<double>(trials, seed, inject)
                            : run_gradcheck_suite<float>(trials, seed, inject);
  bool all_pass = true;
  std::printf("%-24s %-12s %s\n", "op", "max_rel_err", "status");
  for (const auto& r : results) {
    std::printf("%-24s %-12.3e %s\n", r.op.c_str(), r.max_rel_err, r.pass ? "pass" : "FAIL");
    all_pass = all_pass && r.pass;
  }
  std::printf("%s: %zu ops, %zu trials each, threshold %.0e\n", all_pass ? "PASS" : "FAIL",
              results.size(), trials, kGradCheckTolerance);
  return all_pass ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semi-supervised GAN laboratory"};
  app.require_subcommand(1);

  std::string config_path, resume_path, checkpoint_path, grid_spec = "8x8", out_png;
  std::string precision = "double";
  std::size_t gen_count = 64, trials = 20;
  bool inject_sign_error = false;

  // Flag values land here; only flags the user actually passed override the
  // config file.
  RunConfig flags;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (key = value lines)");
    cmd->add_option("--seed", flags.seed, "master random seed");
    cmd->add_option("--out", flags.out_dir, "output directory");
  };

  CLI::App* split = app.add_subcommand("split", "write a train/test split manifest");
  add_common(split);
  split->add_option("--data", flags.dataset_root, "dataset root: one directory per class");
  split->add_option("--protocol", flags.protocol, "eth | indian | fraction");
  split->add_option("--train-fraction", flags.train_fraction, "train share (fraction protocol)");
  split->add_option("--unlabeled", flags.unlabeled, "fraction of train labels to withhold");

  CLI::App* train_cmd = app.add_subcommand("train", "run a training loop");
  add_common(train_cmd);
  train_cmd->add_option("--algorithm", flags.algorithm, "ssgan | vanilla | supervised");
  train_cmd->add_option("--iterations", flags.iterations, "total training iterations");
  train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");
  train_cmd->add_option("--data", flags.dataset_root, "dataset root (directory datasets)");
  train_cmd->add_option("--manifest", flags.manifest, "split manifest (directory datasets)");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  add_common(eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval_cmd->add_option("--format", flags.report_format, "comma list of csv,json,table");
  eval_cmd->add_option("--data", flags.dataset_root, "dataset root (directory datasets)");
  eval_cmd->add_option("--manifest", flags.manifest, "split manifest (directory datasets)");

  CLI::App* gen_cmd = app.add_subcommand("generate", "render a generator sample grid PNG");
  add_common(gen_cmd);
  gen_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  gen_cmd->add_option("--count", gen_count, "number of samples");
  gen_cmd->add_option("--grid", grid_spec, "grid as COLSxROWS");
  gen_cmd->add_option("--png", out_png, "output PNG path");

  CLI::App* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  grad_cmd->add_option("--precision", precision, "double | float");
  grad_cmd->add_option("--trials", trials, "random trials per op");
  grad_cmd->add_option("--seed", flags.seed, "suite seed");
  grad_cmd->add_option("--inject-sign-error", inject_sign_error,
                       "negative-control hook: corrupt one backward pass")
      ->group("");  // hidden

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    RunConfig cfg;
    const bool config_given = !config_path.empty();
    if (config_given) cfg = load_config(config_path);
    auto overridden = [&](CLI::App* cmd, const char* flag) {
      return cmd->count(flag) > 0;
    };
    auto apply_common = [&](CLI::App* cmd) {
      if (overridden(cmd, "--seed")) cfg.seed = flags.seed;
      if (overridden(cmd, "--out")) cfg.out_dir = flags.out_dir;
    };

    if (split->parsed()) {
      apply_common(split);
      cfg.dataset_kind = "directory";
      if (overridden(split, "--data")) cfg.dataset_root = flags.dataset_root;
      if (overridden(split, "--protocol")) cfg.protocol = flags.protocol;
      if (overridden(split, "--train-fraction")) cfg.train_fraction = flags.train_fraction;
      if (overridden(split, "--unlabeled")) cfg.unlabeled = flags.unlabeled;
      return cmd_split(cfg);
    }
    if (train_cmd->parsed()) {
      apply_common(train_cmd);
      if (overridden(train_cmd, "--algorithm")) cfg.algorithm = flags.algorithm;
      if (overridden(train_cmd, "--iterations")) cfg.iterations = flags.iterations;
      if (overridden(train_cmd, "--data")) cfg.dataset_root = flags.dataset_root;
      if (overridden(train_cmd, "--manifest")) cfg.manifest = flags.manifest;
      if (!cfg.dataset_root.empty()) cfg.dataset_kind = "directory";
      return cmd_train(cfg, resume_path);
    }
    if (eval_cmd->parsed()) {
      auto apply = [&](RunConfig& c) {
        if (overridden(eval_cmd, "--seed")) c.seed = flags.seed;
        if (overridden(eval_cmd, "--out")) c.out_dir = flags.out_dir;
        if (overridden(eval_cmd, "--format")) c.report_format = flags.report_format;
        if (overridden(eval_cmd, "--data")) c.dataset_root = flags.dataset_root;
        if (overridden(eval_cmd, "--manifest")) c.manifest = flags.manifest;
      };
      apply(cfg);
      return cmd_eval(cfg, config_given, checkpoint_path, apply);
    }
    if (gen_cmd->parsed()) {
      auto apply = [&](RunConfig& c) {
        if (overridden(gen_cmd, "--seed")) c.seed = flags.seed;
        if (overridden(gen_cmd, "--out")) c.out_dir = flags.out_dir;
      };
      apply(cfg);
      return cmd_generate(cfg, config_given, checkpoint_path, gen_count, grid_spec, out_png,
                          apply);
    }
    if (grad_cmd->parsed()) {
      const std::uint64_t seed =
          grad_cmd->count("--seed") ? static_cast<std::uint64_t>(flags.seed) : 20240601ull;
      return cmd_gradcheck(precision, trials, seed, inject_sign_error);
    }
    return kExitValidation;
  } catch (const ssgan::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.is_validation() ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}
