#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ssgan/data.hpp"
#include "ssgan/models.hpp"

namespace ssgan {

// Cumulative match characteristic: accuracy[r-1] is the fraction of samples
// whose true class appears within the top r ranked predictions.
// Non-decreasing; exactly 1.0 at rank k.
struct CmcCurve {
  std::vector<double> accuracy;

  double at_rank(std::size_t r) const {  // clamped beyond k
    check(r >= 1, Error::Kind::value, "rank must be >= 1");
    return accuracy[std::min(r, accuracy.size()) - 1];
  }
};

struct EvalReport {
  double top1 = 0, top5 = 0, top10 = 0;  // percentages
  CmcCurve cmc;
  std::vector<double> per_class;  // per-class top-1 accuracy, index label-1
  std::size_t sample_count = 0;
  std::string model_id;

  std::size_t num_classes() const { return cmc.accuracy.size(); }
};

enum class ReportFormat { csv, json, text_table };

// Ranks the k real classes by descending renormalized probability
// (equivalently by descending real-class logit); ties break toward the
// smaller class index. The fake unit never appears.
template <typename T>
std::vector<std::vector<int>> rank_classes(const Tensor<T>& logits) {
  check(logits.rank() == 2 && logits.dim(1) >= 3, Error::Kind::shape,
        "rank_classes expects [B x (k+1)] logits with k >= 2");
  const std::size_t rows = logits.dim(0), k = logits.dim(1) - 1;
  std::vector<std::vector<int>> rankings(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<int>& order = rankings[r];
    order.resize(k);
    for (std::size_t i = 0; i < k; ++i) order[i] = static_cast<int>(i) + 1;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      const T la = logits.at(r, static_cast<std::size_t>(a - 1));
      const T lb = logits.at(r, static_cast<std::size_t>(b - 1));
      if (la != lb) return la > lb;
      return a < b;
    });
  }
  return rankings;
}

template <typename T>
std::vector<std::vector<int>> rank_classes(const DiscriminatorOutput<T>& out) {
  return rank_classes(out.logits.value());
}

CmcCurve cmc_curve(const std::vector<std::vector<int>>& rankings,
                   const std::vector<int>& labels);

// Forwards the test split in eval mode, ranks every sample and assembles the
// full report.
template <typename T>
EvalReport evaluate(Discriminator<T>& model, const std::vector<Sample>& test_split,
                    std::size_t batch_size, std::string model_id = "model") {
  check(!test_split.empty(), Error::Kind::value, "evaluate requires a non-empty test split");
  check(batch_size >= 1, Error::Kind::value, "batch size must be positive");
  const std::size_t k = static_cast<std::size_t>(model.num_classes());
  const ImageShape& img = model.image_shape();

  std::vector<std::vector<int>> rankings;
  std::vector<int> labels;
  rankings.reserve(test_split.size());
  for (std::size_t begin = 0; begin < test_split.size(); begin += batch_size) {
    const std::size_t end = std::min(begin + batch_size, test_split.size());
    Tensor<T> batch({end - begin, img.channels, img.height, img.width});
    for (std::size_t i = begin; i < end; ++i) {
      const Sample& s = test_split[i];
      check(s.label.has_value(), Error::Kind::value, "test sample ", s.source_id,
            " has no label");
      check(s.image.size() == img.pixels(), Error::Kind::shape, "test sample ", s.source_id,
            " does not match the model's image shape");
      for (std::size_t p = 0; p < s.image.size(); ++p)
        batch[(i - begin) * img.pixels() + p] = static_cast<T>(s.image[p]);
      labels.push_back(*s.label);
    }
    Tape<T> tape;
    tape.set_recording(false);
    auto out = model.forward(tape, tape.leaf(std::move(batch)), {Mode::eval, false, nullptr});
    auto batch_rankings = rank_classes(out.logits.value());
    rankings.insert(rankings.end(), batch_rankings.begin(), batch_rankings.end());
  }

  EvalReport report;
  report.cmc = cmc_curve(rankings, labels);
  report.top1 = report.cmc.at_rank(1) * 100.0;
  report.top5 = report.cmc.at_rank(5) * 100.0;
  report.top10 = report.cmc.at_rank(10) * 100.0;
  report.sample_count = labels.size();
  report.model_id = std::move(model_id);
  report.per_class.assign(k, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++counts[static_cast<std::size_t>(labels[i] - 1)];
    if (rankings[i][0] == labels[i]) report.per_class[labels[i] - 1] += 1.0;
  }
  for (std::size_t c = 0; c < k; ++c)
    if (counts[c] > 0) report.per_class[c] /= static_cast<double>(counts[c]);
  return report;
}

void write_report(const EvalReport& report, const std::filesystem::path& path,
                  ReportFormat format);

// Round-trip reader for the CSV format (used by tests and tooling).
EvalReport parse_report_csv(const std::filesystem::path& path);

// Renders `count` generated samples into a grid_cols x grid_rows tile PNG,
// mapping [-1,1] to [0,255].
template <typename T>
void write_image_grid(Generator<T>& generator, std::size_t count, std::size_t grid_cols,
                      std::size_t grid_rows, const std::filesystem::path& path,
                      RandomSource& rng) {
  check(count >= 1, Error::Kind::value, "image grid needs at least one sample");
  check(grid_cols * grid_rows >= count, Error::Kind::value, "grid ", grid_cols, "x", grid_rows,
        " cannot hold ", count, " samples");
  const ImageShape& img = generator.image_shape();
  Tensor<T> z = rng.normal<T>({count, static_cast<std::size_t>(generator.latent_dim())}, T(0),
                              T(1));
  Tape<T> tape;
  tape.set_recording(false);
  Var<T> out = generator.forward(tape, tape.leaf(std::move(z)), {Mode::eval, false, nullptr});
  const Tensor<T>& images = out.value();

  RawImage grid;
  grid.width = grid_cols * img.width;
  grid.height = grid_rows * img.height;
  grid.channels = img.channels;
  grid.pixels.assign(grid.width * grid.height * grid.channels, 0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t gx = (i % grid_cols) * img.width;
    const std::size_t gy = (i / grid_cols) * img.height;
    for (std::size_t c = 0; c < img.channels; ++c)
      for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x) {
          const T v = images[((i * img.channels + c) * img.height + y) * img.width + x];
          const double byte = std::clamp((static_cast<double>(v) + 1.0) * 127.5, 0.0, 255.0);
          grid.pixels[((gy + y) * grid.width + (gx + x)) * grid.channels + c] =
              static_cast<std::uint8_t>(std::lround(byte));
        }
  }
  encode_png(grid, path);
}

}  // namespace ssgan
