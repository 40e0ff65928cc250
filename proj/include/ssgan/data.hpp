#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ssgan/image_io.hpp"
#include "ssgan/models.hpp"
#include "ssgan/random.hpp"

namespace ssgan {

// One image with an optional 1-based class label; label absent means the
// sample is unlabeled. Image values lie in [-1,1], channels-first.
struct Sample {
  Tensor<float> image;
  std::optional<int> label;
  std::string source_id;
};

struct Dataset {
  std::vector<std::string> class_names;  // label i corresponds to class_names[i-1]
  std::vector<Sample> train;
  std::vector<Sample> test;
  std::vector<std::string> warnings;  // skipped/undecodable files

  std::size_t num_classes() const { return class_names.size(); }
};

struct Protocol {
  enum class Kind { eth, indian, fraction };
  Kind kind = Kind::fraction;
  double fraction = 0.8;  // train share, fraction protocol only

  static Protocol parse(const std::string& name, double fraction);
  std::string name() const;
};

// Loads `root/<class_name>/<images>` into a fully labeled train split.
// Class indices follow the lexicographic order of the class directories.
// Undecodable files are skipped with a warning recorded on the dataset.
Dataset load_dataset(const std::filesystem::path& root, const ImageShape& shape);

// Per-class deterministic shuffle followed by the protocol's train/test
// counts. All input samples (train and test) are pooled before splitting.
Dataset split_train_test(const Dataset& dataset, const Protocol& protocol, std::uint64_t seed);

// Removes labels from round(u * class_train_count) train samples per class,
// chosen by seeded shuffle. The test split and all images are untouched.
Dataset strip_labels(const Dataset& dataset, double unlabeled_fraction, std::uint64_t seed);

// Bilinear resize to the target shape, channels-first, [0,255] -> [-1,1]
// via x/127.5 - 1.
Tensor<float> preprocess_image(const RawImage& raw, const ImageShape& shape);

// Tensor overload: a tensor that already conforms to the target shape is
// returned unchanged, making preprocessing idempotent.
Tensor<float> preprocess_image(const Tensor<float>& image, const ImageShape& shape);

// Procedural grayscale shape classes with seeded jitter in position, scale,
// brightness and pixel noise. Labels are exact by construction; all samples
// land in the train split.
struct SynthOptions {
  double pos_jitter = 0.16;      // center offset, fraction of the image side
  double scale_jitter = 0.30;    // relative size range around the base size
  double thickness_jitter = 0.0; // stroke-width range around the base width
  double min_brightness = 0.45;  // foreground level drawn from [min,1]
  double noise_std = 0.30;       // additive pixel noise
};

Dataset make_synthetic(int k, int per_class, int side, std::uint64_t seed,
                       const SynthOptions& options = {});

// Split manifest: JSON mapping source id -> {split, labeled, class}, plus
// the class list and provenance fields. A dataset is reproducible from the
// image root and its manifest alone.
void write_manifest(const Dataset& dataset, const std::filesystem::path& path,
                    const std::string& protocol_name, double unlabeled_fraction,
                    std::uint64_t seed);

Dataset load_with_manifest(const std::filesystem::path& root,
                           const std::filesystem::path& manifest_path, const ImageShape& shape);

}  // namespace ssgan
