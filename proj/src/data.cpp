#include "ssgan/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

namespace ssgan {

using nlohmann::json;

Protocol Protocol::parse(const std::string& name, double fraction) {
  Protocol p;
  if (name == "eth") {
    p.kind = Kind::eth;
  } else if (name == "indian") {
    p.kind = Kind::indian;
  } else if (name == "fraction") {
    check(fraction > 0.0 && fraction <= 1.0, Error::Kind::value,
          "fraction protocol requires a train share in (0,1], got ", fraction);
    p.kind = Kind::fraction;
    p.fraction = fraction;
  } else {
    fail(Error::Kind::value, "unknown protocol '", name, "' (expected eth, indian or fraction)");
  }
  return p;
}

std::string Protocol::name() const {
  switch (kind) {
    case Kind::eth: return "eth";
    case Kind::indian: return "indian";
    case Kind::fraction: return "fraction";
  }
  return "?";
}

Tensor<float> preprocess_image(const Tensor<float>& image, const ImageShape& shape) {
  check(image.shape() == shape.chw(), Error::Kind::shape,
        "tensor input to preprocess must already have shape ", shape_str(shape.chw()), ", got ",
        shape_str(image.shape()));
  return image;
}

Tensor<float> preprocess_image(const RawImage& raw, const ImageShape& shape) {
  check(raw.width > 0 && raw.height > 0, Error::Kind::value, "zero-area image");
  check(raw.channels == 1 || raw.channels == 3, Error::Kind::value,
        "expected 1 or 3 channel raster, got ", raw.channels);

  // Channel conversion first: BT.601 luma for RGB->gray, replication for
  // gray->RGB.
  const std::size_t tc = shape.channels;
  check(tc == 1 || tc == 3, Error::Kind::value, "target channels must be 1 or 3");
  std::vector<float> converted(raw.width * raw.height * tc);
  for (std::size_t i = 0; i < raw.width * raw.height; ++i) {
    if (raw.channels == tc) {
      for (std::size_t c = 0; c < tc; ++c)
        converted[i * tc + c] = static_cast<float>(raw.pixels[i * raw.channels + c]);
    } else if (raw.channels == 3) {  // -> gray
      const float r = raw.pixels[i * 3], g = raw.pixels[i * 3 + 1], b = raw.pixels[i * 3 + 2];
      converted[i] = 0.299f * r + 0.587f * g + 0.114f * b;
    } else {  // gray -> rgb
      for (std::size_t c = 0; c < 3; ++c) converted[i * 3 + c] = raw.pixels[i];
    }
  }

  Tensor<float> out(shape.chw());
  const double sx = static_cast<double>(raw.width) / static_cast<double>(shape.width);
  const double sy = static_cast<double>(raw.height) / static_cast<double>(shape.height);
  for (std::size_t y = 0; y < shape.height; ++y) {
    double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(raw.height - 1));
    const std::size_t y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, raw.height - 1);
    const float wy = static_cast<float>(fy - static_cast<double>(y0));
    for (std::size_t x = 0; x < shape.width; ++x) {
      double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(raw.width - 1));
      const std::size_t x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, raw.width - 1);
      const float wx = static_cast<float>(fx - static_cast<double>(x0));
      for (std::size_t c = 0; c < tc; ++c) {
        auto px = [&](std::size_t yy, std::size_t xx) {
          return converted[(yy * raw.width + xx) * tc + c];
        };
        const float top = px(y0, x0) * (1.f - wx) + px(y0, x1) * wx;
        const float bot = px(y1, x0) * (1.f - wx) + px(y1, x1) * wx;
        const float v = top * (1.f - wy) + bot * wy;
        out[(c * shape.height + y) * shape.width + x] = v / 127.5f - 1.f;
      }
    }
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& root, const ImageShape& shape) {
  namespace fs = std::filesystem;
  check(fs::is_directory(root), Error::Kind::io, "dataset root is not a directory: ",
        root.string());
  std::vector<std::string> class_dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) class_dirs.push_back(entry.path().filename().string());
  std::sort(class_dirs.begin(), class_dirs.end());
  check(!class_dirs.empty(), Error::Kind::value, "no class directories under ", root.string());

  Dataset ds;
  ds.class_names = class_dirs;
  for (std::size_t ci = 0; ci < class_dirs.size(); ++ci) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(root / class_dirs[ci]))
      if (entry.is_regular_file()) files.push_back(entry.path().filename().string());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      const std::string source_id = class_dirs[ci] + "/" + file;
      try {
        RawImage raw = decode_image(root / class_dirs[ci] / file);
        ds.train.push_back(Sample{preprocess_image(raw, shape), static_cast<int>(ci) + 1,
                                  source_id});
      } catch (const Error& e) {
        ds.warnings.push_back(str("skipped ", source_id, ": ", e.what()));
      }
    }
  }
  return ds;
}

namespace {

// Samples of one class, sorted by source id for machine-independent order.
std::vector<const Sample*> class_members(const Dataset& ds, int label) {
  std::vector<const Sample*> members;
  for (const auto& s : ds.train)
    if (s.label && *s.label == label) members.push_back(&s);
  for (const auto& s : ds.test)
    if (s.label && *s.label == label) members.push_back(&s);
  std::sort(members.begin(), members.end(),
            [](const Sample* a, const Sample* b) { return a->source_id < b->source_id; });
  return members;
}

}  // namespace

Dataset split_train_test(const Dataset& dataset, const Protocol& protocol, std::uint64_t seed) {
  Dataset out;
  out.class_names = dataset.class_names;
  out.warnings = dataset.warnings;
  RandomSource rng = RandomSource(seed).fork("split");
  for (std::size_t ci = 0; ci < dataset.class_names.size(); ++ci) {
    const int label = static_cast<int>(ci) + 1;
    std::vector<const Sample*> members = class_members(dataset, label);
    const std::size_t n = members.size();

    std::size_t n_train = 0, n_test = 0;
    switch (protocol.kind) {
      case Protocol::Kind::eth:
        check(n >= 1000, Error::Kind::value, "class '", dataset.class_names[ci], "' has ", n,
              " images; the eth protocol requires 1000 (750 train + 250 test)");
        n_train = 750;
        n_test = 250;
        break;
      case Protocol::Kind::indian:
        check(n > 80, Error::Kind::value, "class '", dataset.class_names[ci], "' has ", n,
              " images; the indian protocol requires more than 80 (80 train + rest test)");
        n_train = 80;
        n_test = n - 80;
        break;
      case Protocol::Kind::fraction:
        check(n >= 1, Error::Kind::value, "class '", dataset.class_names[ci], "' has no images");
        n_train = static_cast<std::size_t>(
            std::lround(protocol.fraction * static_cast<double>(n)));
        n_train = std::min(n_train, n);
        n_test = n - n_train;
        break;
    }
    rng.shuffle(members.begin(), members.end());
    for (std::size_t i = 0; i < n_train; ++i) out.train.push_back(*members[i]);
    for (std::size_t i = n_train; i < n_train + n_test; ++i) out.test.push_back(*members[i]);
  }
  return out;
}

Dataset strip_labels(const Dataset& dataset, double unlabeled_fraction, std::uint64_t seed) {
  check(unlabeled_fraction >= 0.0 && unlabeled_fraction <= 1.0, Error::Kind::value,
        "unlabeled fraction must be in [0,1], got ", unlabeled_fraction);
  Dataset out = dataset;
  if (unlabeled_fraction == 0.0) return out;
  RandomSource rng = RandomSource(seed).fork("strip_labels");
  for (std::size_t ci = 0; ci < out.class_names.size(); ++ci) {
    const int label = static_cast<int>(ci) + 1;
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < out.train.size(); ++i)
      if (out.train[i].label && *out.train[i].label == label) indices.push_back(i);
    std::sort(indices.begin(), indices.end(), [&](std::size_t a, std::size_t b) {
      return out.train[a].source_id < out.train[b].source_id;
    });
    const auto n_strip = static_cast<std::size_t>(
        std::lround(unlabeled_fraction * static_cast<double>(indices.size())));
    rng.shuffle(indices.begin(), indices.end());
    for (std::size_t i = 0; i < n_strip && i < indices.size(); ++i)
      out.train[indices[i]].label.reset();
  }
  return out;
}

namespace {

// The first four shapes carry distinct spatial-frequency signatures (blob,
// horizontal texture, 2-d texture, diagonal strokes) so the default k=4
// task keeps a high accuracy ceiling even under heavy pose jitter.
constexpr const char* kShapeNames[] = {
    "disc",     "hstripes", "checker", "xcross", "ring",    "cross",
    "vstripes", "square",   "frame",   "diamond", "dots",   "half",
    "triangle", "hbar",     "vbar",    "glow",
};

// Paints shape `kind` with unit brightness onto a side x side canvas of
// zeros. (cx, cy) is the center in pixels, r the half-extent, thick a
// stroke-width multiplier.
void paint_shape(std::vector<float>& img, int side, int kind, double cx, double cy, double r,
                 double thick) {
  auto at = [&](int y, int x) -> float& { return img[y * side + x]; };
  const double w = std::max(1.0, r * 0.38 * thick);  // stroke width
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      const double rad = std::sqrt(dx * dx + dy * dy);
      bool on = false;
      switch (kind) {
        case 0: on = rad <= r; break;                                       // disc
        case 1: on = std::fmod(std::abs(y + 0.5 - cy + 100.0), 2.0 * w) < w; break;  // hstripes
        case 2: {
          const double cell = std::max(2.0, r * 0.8 * thick);
          const int qx = static_cast<int>(std::floor((x + 0.5 - cx) / cell + 100));
          const int qy = static_cast<int>(std::floor((y + 0.5 - cy) / cell + 100));
          on = (qx + qy) % 2 == 0;
          break;  // checker
        }
        case 3: on = (std::abs(dx - dy) <= w * 0.7 || std::abs(dx + dy) <= w * 0.7) &&
                     rad <= r * 1.3; break;                                 // xcross
        case 4: on = rad <= r && rad >= r - w; break;                       // ring
        case 5: on = (std::abs(dx) <= w * 0.7 || std::abs(dy) <= w * 0.7) &&
                     std::abs(dx) <= r && std::abs(dy) <= r; break;         // cross
        case 6: on = std::fmod(std::abs(x + 0.5 - cx + 100.0), 2.0 * w) < w; break;  // vstripes
        case 7: on = std::abs(dx) <= r * 0.8 && std::abs(dy) <= r * 0.8; break;  // square
        case 8: on = std::abs(dx) <= r && std::abs(dy) <= r &&
                     !(std::abs(dx) <= r - w && std::abs(dy) <= r - w); break;   // frame
        case 9: on = std::abs(dx) + std::abs(dy) <= r; break;               // diamond
        case 10: {
          const double cell = std::max(2.5, r * 0.9);
          const double mx = std::fmod(std::abs(dx) + cell / 2, cell) - cell / 2;
          const double my = std::fmod(std::abs(dy) + cell / 2, cell) - cell / 2;
          on = mx * mx + my * my <= (cell * 0.3) * (cell * 0.3);
          break;  // dot grid
        }
        case 11: on = dx <= 0; break;                                       // half plane
        case 12: on = std::abs(dx) <= r && std::abs(dy) <= r && dy >= dx; break;  // triangle
        case 13: on = std::abs(dy) <= w; break;                             // hbar
        case 14: on = std::abs(dx) <= w; break;                             // vbar
        case 15:
          at(y, x) = static_cast<float>(std::max(0.0, 1.0 - rad / (1.6 * r)));
          continue;  // radial glow, soft-valued
      }
      if (on) at(y, x) = 1.f;
    }
}

}  // namespace

Dataset make_synthetic(int k, int per_class, int side, std::uint64_t seed,
                       const SynthOptions& options) {
  constexpr int kMaxShapes = static_cast<int>(std::size(kShapeNames));
  check(k >= 2 && k <= kMaxShapes, Error::Kind::value, "synthetic classes must lie in [2,",
        kMaxShapes, "], got ", k);
  check(side == 8 || side == 16 || side == 32, Error::Kind::value,
        "synthetic image side must be 8, 16 or 32, got ", side);
  check(per_class >= 1, Error::Kind::value, "per_class must be positive");

  RandomSource rng = RandomSource(seed).fork("synthetic");
  Dataset ds;
  for (int c = 0; c < k; ++c) ds.class_names.emplace_back(kShapeNames[c]);

  const double base_r = side * 0.30;
  for (int c = 0; c < k; ++c) {
    for (int i = 0; i < per_class; ++i) {
      const double jx = (rng.next_uniform() * 2 - 1) * options.pos_jitter * side;
      const double jy = (rng.next_uniform() * 2 - 1) * options.pos_jitter * side;
      const double scale = 1.0 + (rng.next_uniform() * 2 - 1) * options.scale_jitter;
      const double thick = 1.0 + (rng.next_uniform() * 2 - 1) * options.thickness_jitter;
      const double brightness =
          options.min_brightness + rng.next_uniform() * (1.0 - options.min_brightness);

      std::vector<float> canvas(static_cast<std::size_t>(side) * side, 0.f);
      paint_shape(canvas, side, c, side / 2.0 + jx, side / 2.0 + jy, base_r * scale, thick);

      Tensor<float> img({1, static_cast<std::size_t>(side), static_cast<std::size_t>(side)});
      for (std::size_t p = 0; p < canvas.size(); ++p) {
        double v = -1.0 + 2.0 * brightness * canvas[p];
        if (options.noise_std > 0) v += options.noise_std * rng.next_normal();
        img[p] = static_cast<float>(std::clamp(v, -1.0, 1.0));
      }
      char id[64];
      std::snprintf(id, sizeof(id), "%s/%05d", kShapeNames[c], i);
      ds.train.push_back(Sample{std::move(img), c + 1, id});
    }
  }
  return ds;
}

void write_manifest(const Dataset& dataset, const std::filesystem::path& path,
                    const std::string& protocol_name, double unlabeled_fraction,
                    std::uint64_t seed) {
  json entries = json::object();
  auto add = [&](const Sample& s, const char* split) {
    // Unlabeled train samples keep their class in the manifest via the
    // directory component of the source id.
    const std::string cls = s.label ? dataset.class_names[*s.label - 1]
                                    : s.source_id.substr(0, s.source_id.find('/'));
    entries[s.source_id] = {{"split", split}, {"labeled", s.label.has_value()}, {"class", cls}};
  };
  for (const auto& s : dataset.train) add(s, "train");
  for (const auto& s : dataset.test) add(s, "test");
  json manifest{{"classes", dataset.class_names},
                {"protocol", protocol_name},
                {"unlabeled_fraction", unlabeled_fraction},
                {"seed", seed},
                {"warnings", dataset.warnings},
                {"entries", entries}};
  std::ofstream out(path);
  check(out.good(), Error::Kind::io, "cannot write manifest ", path.string());
  out << manifest.dump(2) << "\n";
  check(out.good(), Error::Kind::io, "manifest write failed: ", path.string());
}

Dataset load_with_manifest(const std::filesystem::path& root,
                           const std::filesystem::path& manifest_path, const ImageShape& shape) {
  std::ifstream in(manifest_path);
  check(in.good(), Error::Kind::io, "cannot read manifest ", manifest_path.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    fail(Error::Kind::parse, "malformed manifest ", manifest_path.string(), ": ", e.what());
  }
  Dataset ds;
  ds.class_names = manifest.at("classes").get<std::vector<std::string>>();
  std::map<std::string, int> class_index;
  for (std::size_t i = 0; i < ds.class_names.size(); ++i)
    class_index[ds.class_names[i]] = static_cast<int>(i) + 1;

  // Sorted iteration for a machine-independent sample order.
  const auto& entries = manifest.at("entries");
  std::vector<std::string> ids;
  for (auto it = entries.begin(); it != entries.end(); ++it) ids.push_back(it.key());
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) {
    const auto& e = entries.at(id);
    RawImage raw = decode_image(root / id);
    Sample s{preprocess_image(raw, shape), std::nullopt, id};
    const std::string cls = e.at("class").get<std::string>();
    auto ci = class_index.find(cls);
    check(ci != class_index.end(), Error::Kind::parse, "manifest entry ", id,
          " references unknown class '", cls, "'");
    const bool labeled = e.at("labeled").get<bool>();
    const std::string split = e.at("split").get<std::string>();
    if (split == "test") {
      s.label = ci->second;  // test samples are always labeled
      ds.test.push_back(std::move(s));
    } else {
      if (labeled) s.label = ci->second;
      ds.train.push_back(std::move(s));
    }
  }
  return ds;
}

}  // namespace ssgan
