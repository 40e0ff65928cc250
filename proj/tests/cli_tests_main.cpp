// End-to-end exercises of the ssgan binary: every subcommand, the exit-code
// contract and byte-level reproducibility of the artifacts it writes.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ssgan/data.hpp"
#include "ssgan/eval.hpp"

namespace fs = std::filesystem;
using namespace ssgan;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SSGAN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("ssgan_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RawImage tiny_image(std::uint8_t v) {
  RawImage img;
  img.width = img.height = 4;
  img.channels = 1;
  img.pixels.assign(16, v);
  return img;
}

fs::path make_tree(const std::string& name, int classes, int per_class) {
  fs::path root = fresh_dir(name);
  for (int c = 0; c < classes; ++c) {
    fs::path dir = root / ("class" + std::to_string(c));
    fs::create_directories(dir);
    for (int i = 0; i < per_class; ++i) {
      char file[32];
      std::snprintf(file, sizeof(file), "%05d.png", i);
      encode_png(tiny_image(static_cast<std::uint8_t>((c * 37 + i) % 256)), dir / file);
    }
  }
  return root;
}

std::string base_config(const fs::path& out_dir) {
  std::ostringstream cfg;
  cfg << "dataset_kind = synthetic\n"
      << "synth_classes = 3\n"
      << "synth_per_class = 20\n"
      << "image_size = 16\n"
      << "protocol = fraction\n"
      << "train_fraction = 0.8\n"
      << "unlabeled = 0.5\n"
      << "latent_dim = 8\n"
      << "widths = 4,8\n"
      << "batch_size = 8\n"
      << "iterations = 4\n"
      << "eval_interval = 1000\n"
      << "seed = 11\n"
      << "out_dir = " << out_dir.string() << "\n";
  return cfg.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  fs::path path = dir / "run.toml";
  std::ofstream out(path);
  out << text;
  return path;
}

}  // namespace

TEST_CASE("split writes a deterministic manifest with the requested protocol") {
  fs::path root = make_tree("split_tree", 2, 100);
  fs::path out = fresh_dir("split_out");
  const std::string args = "split --data " + root.string() + " --protocol indian --unlabeled 0.5 --seed 7 --out " +
                           out.string();
  CHECK(run_cli(args) == 0);
  const std::string first = slurp(out / "manifest.json");
  CHECK(run_cli(args) == 0);
  CHECK(slurp(out / "manifest.json") == first);  // identical bytes on rerun

  Dataset ds = load_with_manifest(root, out / "manifest.json", ImageShape{1, 4, 4});
  CHECK(ds.train.size() == 160);  // 80 per class
  CHECK(ds.test.size() == 40);
  std::size_t labeled = 0;
  for (const auto& s : ds.train) labeled += s.label.has_value();
  CHECK(labeled == 80);  // half withheld

  fs::remove_all(root);
  fs::remove_all(out);
}

TEST_CASE("split validation errors exit with code 1") {
  fs::path root = make_tree("split_small", 2, 10);
  fs::path out = fresh_dir("split_small_out");
  CHECK(run_cli("split --data " + root.string() + " --protocol indian --out " + out.string()) ==
        1);  // too few images per class
  CHECK(run_cli("split --data " + root.string() + " --unlabeled 1.5 --out " + out.string()) ==
        1);  // range check
  CHECK(run_cli("split --data /nonexistent_dir_xyz --out " + out.string()) != 0);
  fs::remove_all(root);
  fs::remove_all(out);
}

TEST_CASE("train writes metrics and checkpoints; iterations 0 gives initial checkpoint only") {
  fs::path dir = fresh_dir("train_out");
  fs::path cfg = write_config(dir, base_config(dir / "run"));
  CHECK(run_cli("train --config " + cfg.string() + " --iterations 0") == 0);
  CHECK(fs::exists(dir / "run" / "ckpt-final.ssgn"));
  const std::string metrics = slurp(dir / "run" / "metrics.csv");
  CHECK(metrics == "iter,epoch,theta,delta,total,gen_loss,top1,top5,top10\n");

  CHECK(run_cli("train --config " + cfg.string() + " --out " + (dir / "run2").string()) == 0);
  const std::string metrics2 = slurp(dir / "run2" / "metrics.csv");
  CHECK(std::count(metrics2.begin(), metrics2.end(), '\n') == 5);  // header + 4 iterations
  fs::remove_all(dir);
}

TEST_CASE("train resumes from a checkpoint and extends the trajectory") {
  fs::path dir = fresh_dir("resume_out");
  std::string cfg_text = base_config(dir / "full");
  fs::path cfg_full = write_config(dir, cfg_text + "iterations = 6\n");
  CHECK(run_cli("train --config " + cfg_full.string()) == 0);

  std::string cfg_half_text = base_config(dir / "half");
  fs::path cfg_half = dir / "half.toml";
  {
    std::ofstream out(cfg_half);
    out << cfg_half_text << "iterations = 3\n";
  }
  CHECK(run_cli("train --config " + cfg_half.string()) == 0);
  // Resume to 6 iterations from the 3-iteration checkpoint.
  fs::path cfg_resume = dir / "resume.toml";
  {
    std::ofstream out(cfg_resume);
    out << base_config(dir / "half") << "iterations = 6\n";
  }
  CHECK(run_cli("train --config " + cfg_resume.string() + " --resume " +
                (dir / "half" / "ckpt-final.ssgn").string()) == 0);

  // Last metric rows of the uninterrupted and resumed runs agree.
  auto last_line = [](const std::string& text) {
    std::istringstream ss(text);
    std::string line, last;
    while (std::getline(ss, line))
      if (!line.empty()) last = line;
    return last;
  };
  CHECK(last_line(slurp(dir / "full" / "metrics.csv")) ==
        last_line(slurp(dir / "half" / "metrics.csv")));
  fs::remove_all(dir);
}

TEST_CASE("train without a manifest on a directory dataset fails") {
  fs::path root = make_tree("train_nomanifest", 2, 10);
  fs::path dir = fresh_dir("train_nomanifest_out");
  CHECK(run_cli("train --data " + root.string() + " --out " + dir.string()) == 1);
  fs::remove_all(root);
  fs::remove_all(dir);
}

TEST_CASE("eval writes reports in all requested formats") {
  fs::path dir = fresh_dir("eval_out");
  fs::path cfg = write_config(dir, base_config(dir / "run"));
  REQUIRE(run_cli("train --config " + cfg.string()) == 0);
  CHECK(run_cli("eval --checkpoint " + (dir / "run" / "ckpt-final.ssgn").string() +
                " --format csv,json,table --out " + (dir / "run").string()) == 0);
  CHECK(fs::exists(dir / "run" / "report.csv"));
  CHECK(fs::exists(dir / "run" / "report.json"));
  CHECK(fs::exists(dir / "run" / "report.txt"));

  EvalReport report = parse_report_csv(dir / "run" / "report.csv");
  CHECK(report.num_classes() == 3);
  CHECK(report.cmc.accuracy.back() == 1.0);

  CHECK(run_cli("eval --checkpoint /nonexistent.ssgn --out " + dir.string()) == 2);
  fs::remove_all(dir);
}

TEST_CASE("eval detects a checkpoint/manifest class mismatch") {
  fs::path dir = fresh_dir("eval_mismatch");
  fs::path cfg = write_config(dir, base_config(dir / "run"));
  REQUIRE(run_cli("train --config " + cfg.string()) == 0);
  // Same checkpoint, but a config demanding 4 classes.
  std::string bad = base_config(dir / "run");
  bad += "synth_classes = 4\n";
  fs::path bad_cfg = dir / "bad.toml";
  {
    std::ofstream out(bad_cfg);
    out << bad;
  }
  CHECK(run_cli("eval --checkpoint " + (dir / "run" / "ckpt-final.ssgn").string() +
                " --config " + bad_cfg.string()) != 0);
  fs::remove_all(dir);
}

TEST_CASE("generate renders a deterministic PNG grid") {
  fs::path dir = fresh_dir("gen_out");
  fs::path cfg = write_config(dir, base_config(dir / "run"));
  REQUIRE(run_cli("train --config " + cfg.string()) == 0);
  const std::string ckpt = (dir / "run" / "ckpt-final.ssgn").string();

  CHECK(run_cli("generate --checkpoint " + ckpt + " --count 16 --grid 4x4 --seed 5 --png " +
                (dir / "a.png").string()) == 0);
  CHECK(run_cli("generate --checkpoint " + ckpt + " --count 16 --grid 4x4 --seed 5 --png " +
                (dir / "b.png").string()) == 0);
  CHECK(slurp(dir / "a.png") == slurp(dir / "b.png"));

  RawImage grid = decode_image(dir / "a.png");
  CHECK(grid.width == 64);
  CHECK(grid.height == 64);

  CHECK(run_cli("generate --checkpoint " + ckpt + " --count 64 --grid 4x4 --png " +
                (dir / "c.png").string()) == 1);  // grid too small
  fs::remove_all(dir);
}

TEST_CASE("gradcheck command honors flags and the negative control") {
  CHECK(run_cli("gradcheck --trials 2 --precision double") == 0);
  CHECK(run_cli("gradcheck --trials 2 --precision double --inject-sign-error true") == 1);
  CHECK(run_cli("gradcheck --precision half") == 1);
}

TEST_CASE("unknown flags and missing subcommands exit with code 1") {
  CHECK(run_cli("") == 1);
  CHECK(run_cli("train --bogus-flag 1") == 1);
  CHECK(run_cli("frobnicate") == 1);
}
