#include <doctest.h>

#include "ssgan/config.hpp"

using namespace ssgan;

TEST_SUITE("config") {

TEST_CASE("defaults validate and round-trip canonically") {
  RunConfig cfg;
  cfg.validate();
  const std::string text = serialize_config(cfg);
  RunConfig parsed = parse_config(text);
  CHECK(serialize_config(parsed) == text);  // canonical fixed point
}

TEST_CASE("parse -> serialize -> parse is the identity on edited configs") {
  RunConfig cfg;
  cfg.seed = 123456789;
  cfg.lr_g = 3.5e-4;
  cfg.unlabeled = 0.9;
  cfg.widths = "16,32,64";
  cfg.algorithm = "supervised";
  cfg.out_dir = "runs/exp-1";
  const std::string once = serialize_config(cfg);
  const std::string twice = serialize_config(parse_config(once));
  CHECK(once == twice);
  RunConfig back = parse_config(twice);
  CHECK(back.seed == cfg.seed);
  CHECK(back.lr_g == cfg.lr_g);  // %.17g survives the double round-trip
  CHECK(back.unlabeled == cfg.unlabeled);
  CHECK(back.widths == cfg.widths);
}

TEST_CASE("comments and blank lines are tolerated, unknown keys are not") {
  RunConfig cfg = parse_config("# experiment\n\nseed = 9\nbatch_size = 16 # inline\n");
  CHECK(cfg.seed == 9);
  CHECK(cfg.batch_size == 16);

  CHECK_THROWS_AS(parse_config("sede = 9\n"), Error);
  CHECK_THROWS_AS(parse_config("seed 9\n"), Error);
  CHECK_THROWS_AS(parse_config("seed = nine\n"), Error);
}

TEST_CASE("validation rejects out-of-range values") {
  RunConfig cfg;
  cfg.unlabeled = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.unlabeled = 0.5;
  cfg.algorithm = "sgd";
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.algorithm = "ssgan";
  cfg.widths = "16,-3";
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.widths = "16,32";
  cfg.report_format = "csv,xml";
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.report_format = "csv,json,table";
  cfg.validate();
}

TEST_CASE("derived accessors") {
  RunConfig cfg;
  cfg.widths = "8, 16";
  CHECK(cfg.channel_widths() == std::vector<std::size_t>{8, 16});
  CHECK(cfg.image_shape().height == 16);
  CHECK(cfg.algorithm_kind() == Algorithm::ssgan);
  CHECK(cfg.gen_loss_mode() == GenLossMode::feature_matching);
  CHECK(cfg.report_formats().size() == 1);
  CHECK(cfg.training().batch_size == 32);
}

}  // TEST_SUITE
