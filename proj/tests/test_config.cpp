#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "cag/error.hpp"
#include "cag/run_config.hpp"

using namespace cag;

TEST_CASE("every key round trips through to_text") {
  RunConfig a;
  a.seed = 42;
  a.cluster.candidate_ks = {2, 7};
  a.train.optim.learning_rate = 1e-3;
  a.hybrid_continuous = true;
  RunConfig b;
  apply_config_text(b, a.to_text());
  CHECK(b.to_text() == a.to_text());
  CHECK(run_config_keys().size() == 43);
}

TEST_CASE("config parsing") {
  RunConfig c;
  apply_config_text(c, "# comment\n\n seed = 7 \ntrain.epochs=12\nconv.gen_channels=4, 8\n");
  CHECK(c.seed == 7);
  CHECK(c.train.epochs == 12);
  CHECK(c.conv.gen_channels == std::vector<std::size_t>{4, 8});
  CHECK_THROWS_AS(c.set("nope", "1"), Error);
  CHECK_THROWS_AS(c.set("seed", "-1"), Error);
  CHECK_THROWS_AS(c.set("no_clusters", "maybe"), Error);
  CHECK_THROWS_AS(apply_config_text(c, "seed\n"), Error);

  const auto path = std::filesystem::path(CAG_TEST_TMP) / "cfg.txt";
  std::filesystem::create_directories(path.parent_path());
  std::ofstream(path) << "segment_len=64\n";
  CHECK(load_run_config(path).segment_len == 64);
}

TEST_CASE("validation") {
  RunConfig c;
  c.validate();
  c.jobs = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.segment_len = 2;
  CHECK_THROWS_AS(c.validate(), Error);
}
