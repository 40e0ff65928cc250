#include "ssgan/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace ssgan {

namespace {

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    check(pos == v.size(), Error::Kind::parse, "trailing characters in value for ", key, ": ", v);
    return d;
  } catch (const std::exception&) {
    fail(Error::Kind::parse, "cannot parse number for key ", key, ": '", v, "'");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  check(ec == std::errc() && ptr == v.data() + v.size(), Error::Kind::parse,
        "cannot parse integer for key ", key, ": '", v, "'");
  return out;
}

const std::map<std::string, Field>& field_table() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    auto str_field = [&t](const char* key, std::string RunConfig::* member) {
      t[key] = Field{[member](const RunConfig& c) { return c.*member; },
                     [member](RunConfig& c, const std::string& v) { c.*member = v; }};
    };
    auto int_field = [&t](const char* key, std::int64_t RunConfig::* member) {
      t[key] = Field{[member](const RunConfig& c) { return std::to_string(c.*member); },
                     [key, member](RunConfig& c, const std::string& v) {
                       c.*member = parse_int(key, v);
                     }};
    };
    auto dbl_field = [&t](const char* key, double RunConfig::* member) {
      t[key] = Field{[member](const RunConfig& c) { return fmt_double(c.*member); },
                     [key, member](RunConfig& c, const std::string& v) {
                       c.*member = parse_double(key, v);
                     }};
    };
    str_field("dataset_kind", &RunConfig::dataset_kind);
    str_field("dataset_root", &RunConfig::dataset_root);
    str_field("manifest", &RunConfig::manifest);
    str_field("protocol", &RunConfig::protocol);
    dbl_field("train_fraction", &RunConfig::train_fraction);
    dbl_field("unlabeled", &RunConfig::unlabeled);
    int_field("image_channels", &RunConfig::image_channels);
    int_field("image_size", &RunConfig::image_size);
    int_field("synth_classes", &RunConfig::synth_classes);
    int_field("synth_per_class", &RunConfig::synth_per_class);
    int_field("latent_dim", &RunConfig::latent_dim);
    str_field("widths", &RunConfig::widths);
    dbl_field("noise_std", &RunConfig::noise_std);
    str_field("algorithm", &RunConfig::algorithm);
    str_field("gen_loss", &RunConfig::gen_loss);
    dbl_field("smoothing_alpha", &RunConfig::smoothing_alpha);
    int_field("batch_size", &RunConfig::batch_size);
    int_field("iterations", &RunConfig::iterations);
    int_field("k_steps", &RunConfig::k_steps);
    int_field("eval_interval", &RunConfig::eval_interval);
    int_field("eval_batch", &RunConfig::eval_batch);
    int_field("seed", &RunConfig::seed);
    dbl_field("lr_g", &RunConfig::lr_g);
    dbl_field("lr_d", &RunConfig::lr_d);
    dbl_field("adam_beta1", &RunConfig::adam_beta1);
    dbl_field("adam_beta2", &RunConfig::adam_beta2);
    dbl_field("adam_eps", &RunConfig::adam_eps);
    str_field("out_dir", &RunConfig::out_dir);
    str_field("report_format", &RunConfig::report_format);
    return t;
  }();
  return table;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    check(eq != std::string::npos, Error::Kind::parse, "config line ", lineno,
          " is not 'key = value': ", line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& table = field_table();
    auto it = table.find(key);
    check(it != table.end(), Error::Kind::parse, "unknown config key '", key, "' on line ",
          lineno);
    it->second.set(cfg, value);
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  check(in.good(), Error::Kind::io, "cannot read config ", path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [key, field] : field_table()) out += str(key, " = ", field.get(cfg), "\n");
  return out;
}

void RunConfig::validate() const {
  check(dataset_kind == "synthetic" || dataset_kind == "directory", Error::Kind::value,
        "dataset_kind must be synthetic or directory, got '", dataset_kind, "'");
  check(unlabeled >= 0.0 && unlabeled <= 1.0, Error::Kind::value,
        "unlabeled fraction must lie in [0,1], got ", unlabeled);
  check(image_channels == 1 || image_channels == 3, Error::Kind::value,
        "image_channels must be 1 or 3");
  check(image_size >= 8, Error::Kind::value, "image_size must be >= 8");
  check(latent_dim >= 1, Error::Kind::value, "latent_dim must be >= 1");
  check(noise_std >= 0.0, Error::Kind::value, "noise_std must be non-negative");
  check(iterations >= 0, Error::Kind::value, "iterations must be non-negative");
  algorithm_kind();
  gen_loss_mode();
  Protocol::parse(protocol, train_fraction);
  report_formats();
  channel_widths();
  training().validate();
}

TrainingConfig RunConfig::training() const {
  TrainingConfig t;
  t.batch_size = static_cast<std::size_t>(batch_size);
  t.iterations = static_cast<std::size_t>(iterations);
  t.k_steps = static_cast<std::size_t>(k_steps);
  t.eval_interval = static_cast<std::size_t>(eval_interval);
  t.gen_loss = gen_loss_mode();
  t.smoothing_alpha = smoothing_alpha;
  t.seed = static_cast<std::uint64_t>(seed);
  t.algorithm = algorithm_kind();
  t.lr_g = lr_g;
  t.lr_d = lr_d;
  t.adam_beta1 = adam_beta1;
  t.adam_beta2 = adam_beta2;
  t.adam_eps = adam_eps;
  t.eval_batch = static_cast<std::size_t>(eval_batch);
  return t;
}

ImageShape RunConfig::image_shape() const {
  return ImageShape{static_cast<std::size_t>(image_channels),
                    static_cast<std::size_t>(image_size), static_cast<std::size_t>(image_size)};
}

std::vector<std::size_t> RunConfig::channel_widths() const {
  std::vector<std::size_t> out;
  std::stringstream ss(widths);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::int64_t w = parse_int("widths", trim(item));
    check(w >= 1, Error::Kind::value, "channel widths must be positive");
    out.push_back(static_cast<std::size_t>(w));
  }
  check(!out.empty(), Error::Kind::value, "widths must list at least one channel count");
  return out;
}

Algorithm RunConfig::algorithm_kind() const {
  if (algorithm == "ssgan") return Algorithm::ssgan;
  if (algorithm == "vanilla") return Algorithm::vanilla;
  if (algorithm == "supervised") return Algorithm::supervised;
  fail(Error::Kind::value, "unknown algorithm '", algorithm,
       "' (expected ssgan, vanilla or supervised)");
}

GenLossMode RunConfig::gen_loss_mode() const {
  if (gen_loss == "feature_matching") return GenLossMode::feature_matching;
  if (gen_loss == "nonsaturating") return GenLossMode::nonsaturating;
  fail(Error::Kind::value, "unknown gen_loss '", gen_loss,
       "' (expected feature_matching or nonsaturating)");
}

std::vector<ReportFormat> RunConfig::report_formats() const {
  std::vector<ReportFormat> out;
  std::stringstream ss(report_format);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item == "csv")
      out.push_back(ReportFormat::csv);
    else if (item == "json")
      out.push_back(ReportFormat::json);
    else if (item == "table")
      out.push_back(ReportFormat::text_table);
    else
      fail(Error::Kind::value, "unknown report format '", item, "'");
  }
  check(!out.empty(), Error::Kind::value, "report_format must list at least one format");
  return out;
}

}  // namespace ssgan
