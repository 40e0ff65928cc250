#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ssgan/train.hpp"

namespace ssgan {

// Full experiment configuration: everything a run needs beyond the CLI
// verb. Parses from a simple `key = value` text file; serialization is
// canonical (sorted keys, fixed number formatting), so
// parse -> serialize -> parse is the identity and the serialized form is
// byte-stable for checkpoint echoes.
struct RunConfig {
  // data
  std::string dataset_kind = "synthetic";  // synthetic | directory
  std::string dataset_root;
  std::string manifest;
  std::string protocol = "fraction";  // eth | indian | fraction
  double train_fraction = 0.8;
  double unlabeled = 0.0;
  std::int64_t image_channels = 1;
  std::int64_t image_size = 16;
  std::int64_t synth_classes = 4;
  std::int64_t synth_per_class = 300;

  // model
  std::int64_t latent_dim = 64;
  std::string widths = "16,32";
  double noise_std = 0.5;

  // training
  std::string algorithm = "ssgan";  // ssgan | vanilla | supervised
  std::string gen_loss = "feature_matching";
  double smoothing_alpha = 0.9;
  std::int64_t batch_size = 32;
  std::int64_t iterations = 1000;
  std::int64_t k_steps = 1;
  std::int64_t eval_interval = 100;
  std::int64_t eval_batch = 64;
  std::int64_t seed = 0;
  double lr_g = 2e-4;
  double lr_d = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  // output
  std::string out_dir = "out";
  std::string report_format = "csv";  // comma list of csv | json | table

  void validate() const;

  TrainingConfig training() const;
  ImageShape image_shape() const;
  std::vector<std::size_t> channel_widths() const;
  Algorithm algorithm_kind() const;
  GenLossMode gen_loss_mode() const;
  std::vector<ReportFormat> report_formats() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const RunConfig& cfg);

}  // namespace ssgan
