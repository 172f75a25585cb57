#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "cag/error.hpp"
#include "cag/gan.hpp"

using namespace cag;

namespace {

ConvArch tiny_arch() {
  ConvArch a;
  a.bridge_channels = 2;
  a.gen_channels = {4};
  a.gen_kernels = {3};
  a.disc_channels = {4};
  a.disc_kernels = {3};
  return a;
}

TrainConfig quick(std::size_t epochs = 3) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = 4;
  t.latent_dim = 4;
  t.seed = 17;
  return t;
}

SeriesSet toy(std::size_t n, std::size_t len) {
  SeriesSet s;
  for (std::size_t i = 0; i < n; ++i) {
    Series x(len);
    for (std::size_t t = 0; t < len; ++t) x[t] = 100.0 * std::sin(0.3 * static_cast<double>(t + i));
    s.push_back(x);
  }
  return s;
}

}  // namespace

TEST_CASE("data range maps onto [-1, 1]") {
  const auto r = DataRange::of({{2.0, 4.0}, {6.0}});
  CHECK(r.normalize(2.0) == -1.0);
  CHECK(r.normalize(6.0) == 1.0);
  CHECK(r.denormalize(r.normalize(5.0)) == doctest::Approx(5.0));
  const auto flat = DataRange::of({{3.0, 3.0}});
  CHECK(flat.normalize(3.0) == 0.0);
  CHECK(flat.denormalize(0.7) == 3.0);
}

TEST_CASE("conv GAN trains, samples deterministically and round-trips") {
  const auto data = toy(8, 16);
  const auto m = train_cluster_gan(data, quick(), tiny_arch());
  REQUIRE(m.history.size() == 3);
  for (const auto& e : m.history) {
    CHECK(std::isfinite(e.discriminator));
    CHECK(std::isfinite(e.generator));
  }
  const auto a = sample(m, 5, 99), b = sample(m, 5, 99);
  CHECK(a == b);
  CHECK(a.size() == 5);
  CHECK(a[0].size() == 16);
  for (const auto& s : sample_normalized(m, 5, 1))
    for (double v : s) CHECK(std::abs(v) <= 1.0);

  const auto text = checkpoint_to_string(m);
  const auto back = checkpoint_from_string(text);
  CHECK(sample(back, 5, 99) == a);
  CHECK(back.history.size() == 3);
  CHECK(checkpoint_to_string(back) == text);

  const auto dir = std::filesystem::path(CAG_TEST_TMP) / "gan";
  save_checkpoint(dir / "m.json", m);
  CHECK(sample(load_checkpoint(dir / "m.json"), 5, 99) == a);

  auto same = train_cluster_gan(data, quick(), tiny_arch());
  CHECK(checkpoint_to_string(same) == text);
}

TEST_CASE("bad checkpoints and inputs are rejected") {
  CHECK_THROWS_AS(checkpoint_from_string("{}"), Error);
  CHECK_THROWS_AS(checkpoint_from_string("not json"), Error);
  CHECK_THROWS_AS(train_cluster_gan(toy(1, 16), quick(), tiny_arch()), Error);
  SeriesSet ragged = toy(3, 16);
  ragged[1].pop_back();
  CHECK_THROWS_AS(train_cluster_gan(ragged, quick(), tiny_arch()), Error);
  TrainConfig bad = quick();
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("recurrent GAN and shared discriminator phase") {
  RecurrentArch ra;
  ra.hidden = 4;
  ra.layers = 1;
  const auto m = train_continuous_gan(toy(2, 12), quick(2), ra);
  CHECK(m.branch == Branch::Continuous);
  CHECK(sample(m, 2, 3)[1].size() == 12);

  auto a = train_cluster_gan(toy(6, 16), quick(2), tiny_arch());
  auto b = train_cluster_gan(toy(4, 16), quick(2), tiny_arch());
  finetune_shared_discriminator({&a, &b}, {toy(6, 16), toy(4, 16)}, quick(2), tiny_arch());
  CHECK(a.history.size() == 4);
  CHECK(b.history.size() == 4);
}

TEST_CASE("loss history csv") {
  CHECK(loss_history_csv({{0.5, 0.25}}) == "epoch,discriminator_loss,generator_loss\n1,0.5,0.25\n");
  CHECK(branch_from_string(to_string(Branch::Spike)) == Branch::Spike);
}
