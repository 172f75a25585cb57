// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cag/cluster.hpp"
#include "cag/error.hpp"
#include "cag/gan.hpp"
#include "cag/hybrid.hpp"
#include "cag/metrics.hpp"
#include "cag/pipeline.hpp"
#include "cag/resample.hpp"
#include "cag/router.hpp"
#include "cag/seed.hpp"
#include "cag/trace.hpp"
#include "gradcheck.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace cag;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and limits.
constexpr double kRoutingSeconds = 1.0;
constexpr double kGradRelTol = 1e-4;
constexpr std::size_t kGradProbes = 64;
constexpr std::size_t kGradSeeds = 10;
constexpr double kGradSeconds = 30.0;
constexpr double kSilhouetteTol = 1e-9;
constexpr std::size_t kBlobsRequired = 4;
constexpr std::size_t kChooseFactorMaxT = 1000000;
constexpr double kFeatureFidIdentityTol = 1e-6;
constexpr double kUnivariateFidTol = 1e-9;
constexpr double kTemplateTol = 0.2;
constexpr double kTemplateFraction = 0.9;
constexpr double kTrainingSeconds = 180.0;
constexpr double kAblationSeconds = 600.0;
constexpr double kSpikeCountTol = 0.05;
constexpr double kSpikeGapTol = 0.10;
constexpr double kSmokeSeconds = 900.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(CAG_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ConvArch desk_arch() {
  ConvArch a;
  a.bridge_channels = 8;
  a.gen_channels = {8, 16, 16};
  a.gen_kernels = {3, 5, 5};
  a.disc_channels = {16, 8};
  a.disc_kernels = {5, 3};
  return a;
}

ConvArch tiny_arch() {
  ConvArch a;
  a.bridge_channels = 2;
  a.gen_channels = {4};
  a.gen_kernels = {3};
  a.disc_channels = {4};
  a.disc_kernels = {3};
  return a;
}

// ---------------------------------------------------------------- 1 routing

Outcome routing_conformance() {
  const RoutingConfig cfg;
  std::vector<std::pair<std::string, std::vector<double>>> suite;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t T = 1000;
  const double two_pi = 2.0 * std::numbers::pi;

  for (int i = 0; i < 10; ++i) {  // leading zeros, then bursts
    std::vector<double> x(T, 0.0);
    for (std::size_t t = 100 + static_cast<std::size_t>(50 * u(rng)); t < T; t += 80)
      for (std::size_t j = t; j < std::min(T, t + 20); ++j) x[j] = 500.0 + 1500.0 * u(rng);
    suite.emplace_back("r0", x);
  }
  for (int i = 0; i < 12; ++i) {  // smooth, fully occupied
    const double level = 50 + 150 * u(rng), amp = 1 + 4 * u(rng), period = 200 + 400 * u(rng);
    std::vector<double> x(T);
    for (std::size_t t = 0; t < T; ++t) x[t] = level + amp * std::sin(two_pi * static_cast<double>(t) / period);
    suite.emplace_back("smooth", x);
  }
  for (int i = 0; i < 8; ++i) {  // smooth but occupancy below the threshold
    const double level = 0.5 + 0.5 * u(rng);
    const auto on = static_cast<std::size_t>(T * (0.45 + 0.2 * u(rng)));
    std::vector<double> x(T, 0.0);
    for (std::size_t t = 0; t < on; ++t) x[t] = level + 0.05 * std::sin(two_pi * static_cast<double>(t) / 300.0);
    suite.emplace_back("low_occupancy", x);
  }
  for (int i = 0; i < 10; ++i) {  // occupied but rough
    std::vector<double> x(T);
    for (std::size_t t = 0; t < T; ++t) x[t] = 100.0 + (t % 2 ? 1.0 : -1.0) * 50.0 * (0.5 + 0.5 * u(rng));
    suite.emplace_back("rough", x);
  }
  for (int i = 0; i < 10; ++i) {  // sparse bursts
    std::vector<double> x(T, 0.0);
    x[0] = 5.0;
    for (std::size_t t = 30 + static_cast<std::size_t>(40 * u(rng)); t < T; t += 150)
      for (std::size_t j = t; j < std::min(T, t + 20); ++j) x[j] = 1000.0 * (0.9 + 0.2 * u(rng));
    suite.emplace_back("sparse", x);
  }

  const auto t0 = std::chrono::steady_clock::now();
  std::size_t agree = 0, continuous = 0, stats_ok = 0;
  std::vector<DeviceClass> got;
  for (const auto& [family, x] : suite) {
    got.push_back(classify(routing_stats(x, cfg), cfg));
  }
  const double secs = seconds_since(t0);

  for (std::size_t i = 0; i < suite.size(); ++i) {
    const auto& x = suite[i].second;
    const bool r0 = std::all_of(x.begin(), x.begin() + 100, [](double v) { return v == 0.0; });
    double nz = 0;
    for (double v : x) nz += v != 0.0;
    const double p_nz = nz / static_cast<double>(x.size());
    const auto d = oracle::smoothed_diff(x, cfg.smoothing_window);
    const double var = oracle::var_with_divisor(d, static_cast<double>(d.size()));
    const bool truth = oracle::routing_truth(r0, p_nz, var, cfg.occupancy_threshold, cfg.derivative_variance_threshold);
    continuous += truth;
    agree += truth == (got[i] == DeviceClass::Continuous);
    const auto s = routing_stats(x, cfg);
    stats_ok += s.r0 == r0 && s.p_nz == p_nz && std::abs(s.var_smoothed_diff - var) <= 1e-9 * std::max(1.0, var);
  }
  const bool pass = agree == suite.size() && stats_ok == suite.size() && secs < kRoutingSeconds;
  return {pass, fmt("%zu/%zu agree with the truth table, %zu continuous truths, stats %zu/%zu, %.3fs", agree,
                    suite.size(), continuous, stats_ok, suite.size(), secs)};
}

// ---------------------------------------------------------------- 2 gradients

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_case;
  std::size_t checks = 0;
  for (const auto& c : gradcheck::layer_cases()) {
    for (std::uint64_t seed = 1; seed <= kGradSeeds; ++seed) {
      const auto r = gradcheck::check(c.specs, c.input_shape, seed, kGradProbes);
      checks += r.probed;
      if (r.max_rel_error >= worst) {
        worst = r.max_rel_error;
        worst_case = c.name;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= kGradRelTol && secs < kGradSeconds,
          fmt("%zu layer cases x %zu seeds, %zu probes, worst rel err %.2e (%s), %.2fs",
              gradcheck::layer_cases().size(), kGradSeeds, checks, worst, worst_case.c_str(), secs)};
}

// ---------------------------------------------------------------- 3 clustering

Outcome clustering_oracle() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double sil_err = 0.0;
  std::size_t monotone_runs = 0, runs = 0;
  auto check_history = [&](const Clustering& c) {
    ++runs;
    bool ok = true;
    for (std::size_t i = 1; i < c.inertia_history.size(); ++i)
      ok = ok && c.inertia_history[i] <= c.inertia_history[i - 1] * (1.0 + 1e-12);
    monotone_runs += ok;
  };

  for (int inst = 0; inst < 10; ++inst) {
    const std::size_t dim = 2 + static_cast<std::size_t>(inst % 3), k = 2 + static_cast<std::size_t>(inst % 3);
    PointSet pts(20, Point(dim));
    for (auto& p : pts)
      for (auto& v : p) v = u(rng);
    std::vector<std::size_t> labels(20);
    std::uniform_int_distribution<std::size_t> lab(0, k - 1);
    for (std::size_t i = 0; i < 20; ++i) labels[i] = i < k ? i : lab(rng);
    sil_err = std::max(sil_err, std::abs(silhouette(pts, labels).mean - oracle::silhouette(pts, labels, k)));

    for (std::size_t kk = 2; kk <= 6; ++kk) {
      for (std::uint64_t s = 1; s <= 5; ++s) {
        ClusterConfig cfg;
        cfg.seed = s;
        cfg.n_init = 1;
        check_history(kmeans(pts, kk, cfg));
      }
    }
  }

  std::size_t recovered = 0;
  std::string picks;
  for (std::size_t K = 2; K <= 6; ++K) {
    std::mt19937_64 brng(1000 + K);
    std::uniform_real_distribution<double> center(-10.0, 10.0);
    std::normal_distribution<double> noise(0.0, 0.5);
    PointSet centers;
    while (centers.size() < K) {
      Point c(5);
      for (auto& v : c) v = center(brng);
      bool far = true;
      for (const auto& o : centers) far = far && std::sqrt(squared_distance(c, o)) >= 6.0;
      if (far) centers.push_back(c);
    }
    PointSet pts;
    for (const auto& c : centers)
      for (int i = 0; i < 20; ++i) {
        Point p = c;
        for (auto& v : p) v += noise(brng);
        pts.push_back(p);
      }
    ClusterConfig cfg;
    cfg.seed = K;
    const auto sel = select_k(pts, cfg);
    check_history(sel.clustering);
    recovered += sel.best_k == K;
    picks += fmt("%s%zu->%zu", picks.empty() ? "" : " ", K, sel.best_k);
  }
  const bool pass = sil_err <= kSilhouetteTol && monotone_runs == runs && recovered >= kBlobsRequired;
  return {pass, fmt("silhouette max err %.1e, monotone inertia %zu/%zu runs, planted K recovered %zu/5 (%s)", sil_err,
                    monotone_runs, runs, recovered, picks.c_str())};
}

// ---------------------------------------------------------------- 4 resampler

Outcome resampler_exactness() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> val(-1000.0, 1000.0);
  std::uniform_int_distribution<std::size_t> fpick(1, 20), mpick(1, 200);

  std::size_t identity = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t F = fpick(rng), m = mpick(rng);
    std::vector<double> x;
    for (std::size_t b = 0; b < m; ++b) x.insert(x.end(), F, val(rng));
    const auto s = downsample(x, F);
    identity += reconstruct(s.values, F, x.size()) == x;
  }

  std::size_t lengths = 0;
  std::uniform_int_distribution<std::size_t> ylen(1, 100), fl(1, 50), tl(1, 6000);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> y(ylen(rng));
    for (auto& v : y) v = val(rng);
    const std::size_t T = tl(rng);
    lengths += reconstruct(y, fl(rng), T).size() == T;
  }

  // floor(T/F) is non-increasing in F, so F is minimal iff F-1 fails.
  std::size_t minimal = 0, scanned = 0, scan_ok = 0;
  for (std::size_t U : {1u, 7u, 1000u}) {
    for (std::size_t T = 1; T <= kChooseFactorMaxT; ++T) {
      const std::size_t F = choose_factor(T, U);
      minimal += T / F <= U && (F == 1 || T / (F - 1) > U);
    }
    std::uniform_int_distribution<std::size_t> tpick(1, kChooseFactorMaxT);
    for (int i = 0; i < 200; ++i) {
      const std::size_t T = i == 0 ? kChooseFactorMaxT : tpick(rng);
      ++scanned;
      scan_ok += choose_factor(T, U) == oracle::choose_factor_scan(T, U);
    }
  }
  const bool pass = identity == 100 && lengths == 1000 && minimal == 3 * kChooseFactorMaxT && scan_ok == scanned;
  return {pass, fmt("identity %zu/100, lengths %zu/1000, minimality %zu/%zu, brute-force scan %zu/%zu", identity,
                    lengths, minimal, 3 * kChooseFactorMaxT, scan_ok, scanned)};
}

// ---------------------------------------------------------------- 5 metrics

Outcome metric_identity() {
  std::vector<FixtureSpec> specs(5);
  specs[0].kind = FixtureKind::Constant;
  specs[1].kind = FixtureKind::SquareWave;
  specs[1].half_period = 30;
  specs[2].kind = FixtureKind::Spiky;
  specs[3].kind = FixtureKind::NoisySine;
  specs[4].kind = FixtureKind::IntermittentBursts;
  std::size_t ok = 0;
  std::string failures;
  for (auto& spec : specs) {
    spec.length = 3000;
    spec.seed = 5;
    const auto x = make_fixture(spec).samples;
    const auto f = featurize(x, 60);
    ClusterConfig cfg;
    cfg.seed = 1;
    auto c = select_k(f.standardized, cfg).clustering;
    c.scaler = f.scaler;
    c.segment_len = 60;
    const auto r = evaluate_all(x, x, c);
    const bool good = r.me == 0.0 && r.std_err == 0.0 && r.fid_rmse == 0.0 && r.period_mae == 0.0 &&
                      r.feature_fid <= kFeatureFidIdentityTol && r.cluster_coverage == 1.0 && r.cluster_js == 0.0;
    ok += good;
    if (!good) failures += fmt(" %s(FeatureFID %.2e CC %.3f)", std::string(to_string(spec.kind)).c_str(),
                               r.feature_fid, r.cluster_coverage);
  }

  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> mu(-5, 5), sd(0.5, 3);
  std::uniform_int_distribution<std::size_t> n(10, 50);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    auto draw = [&] {
      std::normal_distribution<double> g(mu(rng), sd(rng));
      PointSet p(n(rng), Point(1));
      for (auto& v : p) v[0] = g(rng);
      return p;
    };
    const auto a = draw(), b = draw();
    auto moments = [](const PointSet& p) {
      std::vector<double> v;
      for (const auto& q : p) v.push_back(q[0]);
      const double m = oracle::mean(v);
      return std::pair{m, std::sqrt(oracle::var_with_divisor(v, static_cast<double>(v.size() - 1)))};
    };
    const auto [ma, sa] = moments(a);
    const auto [mb, sb] = moments(b);
    const double closed = (ma - mb) * (ma - mb) + (sa - sb) * (sa - sb);
    worst = std::max(worst, std::abs(frechet_distance(fid_stats(a), fid_stats(b)) - closed));
  }
  return {ok == specs.size() && worst <= kUnivariateFidTol,
          fmt("identity holds on %zu/%zu fixtures%s, univariate closed form max err %.1e", ok, specs.size(),
              failures.c_str(), worst)};
}

// ---------------------------------------------------------------- 6 training

Outcome training_sanity() {
  const std::size_t L = 64;
  Series tmpl(L);
  for (std::size_t i = 0; i < L; ++i)
    tmpl[i] = (i >= 16 && i < 40) ? 1000.0 + 200.0 * std::sin(0.3 * static_cast<double>(i)) : 5.0;
  const SeriesSet data(512, tmpl);
  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 32;
  tc.seed = 1;

  const auto t0 = std::chrono::steady_clock::now();
  const auto m = train_cluster_gan(data, tc, desk_arch());
  const auto samples = sample_normalized(m, 64, 7);
  const double secs = seconds_since(t0);

  bool finite = m.history.size() == tc.epochs;
  for (const auto& e : m.history) finite = finite && std::isfinite(e.discriminator) && std::isfinite(e.generator);
  std::size_t close = 0;
  bool bounded = true;
  for (const auto& s : samples) {
    double err = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
      err = std::max(err, std::abs(s[i] - m.range.normalize(tmpl[i])));
      bounded = bounded && s[i] >= -1.0 && s[i] <= 1.0;
    }
    close += err <= kTemplateTol;
  }
  const bool pass = close >= static_cast<std::size_t>(std::ceil(kTemplateFraction * 64)) && finite && bounded &&
                    secs < kTrainingSeconds;
  return {pass, fmt("%zu/64 samples within %.1f, losses finite %s, outputs in [-1,1] %s, %.1fs", close, kTemplateTol,
                    finite ? "yes" : "no", bounded ? "yes" : "no", secs)};
}

// ---------------------------------------------------------------- 7 ablation

DeviceTraceSet two_mode_fixture() {
  const std::size_t L = 64, nseg = 300;
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> nz(0, 1);
  std::vector<double> x;
  for (std::size_t s = 0; s < nseg; ++s) {
    const bool minority = u(rng) < 0.12;
    for (std::size_t i = 0; i < L; ++i) {
      double v = 0.0;
      if (!minority && i >= 10 && i < 18) v = 1500.0 + 20.0 * nz(rng);
      if (minority && i >= 12 && i < 52) v = 300.0 + 5.0 * nz(rng);
      x.push_back(v);
    }
  }
  DeviceTraceSet set;
  set.add({"two_mode", x});
  return set;
}

Outcome ablation_direction() {
  const auto traces = two_mode_fixture();
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t wins = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    double cc[2] = {0, 0}, fid[2] = {0, 0};
    for (int pooled = 0; pooled < 2; ++pooled) {
      RunConfig cfg;
      cfg.out_dir = scratch(fmt("ablation_%d_%d", static_cast<int>(seed), pooled));
      cfg.seed = seed;
      cfg.segment_len = 64;
      cfg.train.epochs = 200;
      cfg.train.latent_dim = 32;
      cfg.conv = desk_arch();
      cfg.no_clusters = pooled == 1;
      const auto m = run_pipeline(cfg, traces);
      const auto& d = m.devices.at(0);
      if (!d.ok || !d.metrics) throw Error(ErrorKind::State, "ablation run failed: " + d.error);
      cc[pooled] = d.metrics->cluster_coverage;
      fid[pooled] = d.metrics->fid_rmse;
    }
    wins += cc[0] > cc[1] && fid[0] < fid[1];
    detail += fmt("%sseed %d CC %.2f vs %.2f Fid %.1f vs %.1f", detail.empty() ? "" : "; ", static_cast<int>(seed),
                  cc[0], cc[1], fid[0], fid[1]);
  }
  const double secs = seconds_since(t0);
  return {wins == 3 && secs < kAblationSeconds,
          fmt("clustered beats pooled on %zu/3 seeds (%s), %.0fs", wins, detail.c_str(), secs)};
}

// ---------------------------------------------------------------- 8 hybrid

Outcome hybrid_branch() {
  std::size_t correct = 0, cases = 0;
  auto expect = [&](const std::vector<double>& x, bool square) {
    ++cases;
    correct += detect_square_wave(x).is_square == square;
  };
  // half periods start at the block size; a faster wave averages out
  std::size_t hp = HybridConfig{}.square_downsample;
  for (int i = 0; i < 8; ++i, hp = hp * 3 / 2 + 3) {
    FixtureSpec s;
    s.kind = FixtureKind::SquareWave;
    s.length = 2000;
    s.half_period = hp;
    s.low = 10.0 * i;
    s.high = s.low + 50.0 + 40.0 * i;
    auto x = make_fixture(s).samples;
    if (i % 2) {
      std::mt19937_64 rng(i);
      std::normal_distribution<double> n(0.0, 2.0);
      for (auto& v : x) v += n(rng);
    }
    expect(x, true);
  }
  for (double level : {0.0, 1e-3, 1.0, 50.0, 100.0, 1e3}) expect(std::vector<double>(2000, level), false);
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(100.0, 10.0);
    std::vector<double> x(2000);
    for (auto& v : x) v = n(rng);
    expect(x, false);
  }

  std::size_t counts_ok = 0, gaps_ok = 0;
  double worst_count = 0.0, worst_gap = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    FixtureSpec s;
    s.kind = FixtureKind::Spiky;
    s.length = 100000;
    s.seed = seed;
    const auto fx = make_fixture_with_truth(s);
    const auto& x = fx.trace.samples;
    const auto ex = extract_spikes(x, spike_threshold(x, 0.9), 64);
    const double planted = static_cast<double>(fx.events.size());
    const double count_err = std::abs(static_cast<double>(ex.peaks.size()) - planted) / planted;
    counts_ok += count_err <= kSpikeCountTol;
    worst_count = std::max(worst_count, count_err);

    const double planted_gap =
        static_cast<double>(fx.events.back() - fx.events.front()) / static_cast<double>(fx.events.size() - 1);
    const auto placed = spike_positions(ex.gap_mean, ex.gap_std, x.size(), derive_seed(seed, 8));
    const double placed_gap =
        static_cast<double>(placed.back() - placed.front()) / static_cast<double>(placed.size() - 1);
    const double gap_err = std::abs(placed_gap - planted_gap) / planted_gap;
    gaps_ok += gap_err <= kSpikeGapTol;
    worst_gap = std::max(worst_gap, gap_err);
  }

  FixtureSpec small;
  small.kind = FixtureKind::Spiky;
  small.length = 3000;
  TrainConfig tc;
  tc.epochs = 5;
  tc.batch_size = 8;
  tc.latent_dim = 8;
  const auto model = train_spike_model(make_fixture(small).samples, HybridConfig{}, tc, tiny_arch());
  const auto gen = interleave_spikes(model, 3000, 11);
  const bool interleave_ok =
      gen.size() == 3000 && std::all_of(gen.begin(), gen.end(), [](double v) { return std::isfinite(v); });

  return {correct == cases && cases == 20 && counts_ok == 100 && gaps_ok == 100 && interleave_ok,
          fmt("square detection %zu/%zu, peak counts %zu/100 (worst %.1f%%), placed gap mean %zu/100 (worst %.1f%%), "
              "interleave %s",
              correct, cases, counts_ok, 100 * worst_count, gaps_ok, 100 * worst_gap, interleave_ok ? "ok" : "bad")};
}

// ---------------------------------------------------------------- 9 determinism

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files[fs::relative(e.path(), root).generic_string()] = ss.str();
  }
  return files;
}

DeviceTraceSet determinism_traces() {
  DeviceTraceSet set;
  FixtureSpec b;
  b.kind = FixtureKind::IntermittentBursts;
  b.length = 3000;
  b.burst_length = 10;
  b.mean_idle = 60;
  for (std::uint64_t s = 1; s <= 2; ++s) {
    b.seed = s;
    b.device_id = fmt("bursts_%d", static_cast<int>(s));
    auto t = make_fixture(b);
    t.samples[0] = 1.0;
    set.add(t);
  }
  FixtureSpec sine;
  sine.kind = FixtureKind::NoisySine;
  sine.length = 1500;
  sine.noise_std = 0.5;
  sine.device_id = "sine";
  set.add(make_fixture(sine));
  FixtureSpec sq;
  sq.kind = FixtureKind::SquareWave;
  sq.length = 1500;
  sq.half_period = 20;
  sq.device_id = "square";
  set.add(make_fixture(sq));
  FixtureSpec sp;
  sp.kind = FixtureKind::Spiky;
  sp.length = 3000;
  sp.device_id = "spiky";
  set.add(make_fixture(sp));
  return set;
}

RunConfig small_run(const fs::path& out, std::size_t jobs, bool hybrid) {
  RunConfig c;
  c.out_dir = out;
  c.seed = 9;
  c.jobs = jobs;
  c.segment_len = 50;
  c.samples_per_cluster = 4;
  c.train.epochs = 4;
  c.train.batch_size = 8;
  c.train.latent_dim = 8;
  c.conv = tiny_arch();
  c.recurrent.hidden = 6;
  c.recurrent.layers = 2;
  c.continuous.max_surrogate_len = 60;
  c.continuous.window_len = 60;
  c.shared_discriminator = !hybrid;
  c.shared_epochs = 2;
  c.hybrid_continuous = hybrid;
  return c;
}

Outcome determinism() {
  const auto traces = determinism_traces();
  std::size_t compared = 0, differing = 0, runs_ok = 0;
  std::string first_diff;
  std::set<std::string> kinds;
  for (bool hybrid : {false, true}) {
    const auto a = scratch(fmt("det_a_%d", hybrid)), b = scratch(fmt("det_b_%d", hybrid));
    const auto ma = run_pipeline(small_run(a, 1, hybrid), traces);
    const auto mb = run_pipeline(small_run(b, 2, hybrid), traces);
    for (const auto* m : {&ma, &mb})
      for (const auto& d : m->devices) runs_ok += d.ok;
    auto sa = snapshot(a), sb = snapshot(b);
    sa.erase("config.txt");
    sb.erase("config.txt");
    for (auto* s : {&sa, &sb}) {
      // the config section records the output path and worker count
      auto j = nlohmann::ordered_json::parse(s->at("manifest.json"));
      j["config"].erase("out");
      j["config"].erase("jobs");
      (*s)["manifest.json"] = j.dump();
    }
    if (sa.size() != sb.size()) {
      ++differing;
      first_diff = "file sets differ";
    }
    for (const auto& [path, bytes] : sa) {
      ++compared;
      kinds.insert(fs::path(path).extension().string());
      const auto it = sb.find(path);
      if (it == sb.end() || it->second != bytes) {
        ++differing;
        if (first_diff.empty()) first_diff = path;
      }
    }
  }
  const std::size_t expected_ok = 2 * 2 * traces.size();
  std::string exts;
  for (const auto& k : kinds) exts += k + " ";
  return {differing == 0 && runs_ok == expected_ok && compared > 0,
          fmt("%zu files compared (%s), %zu differ%s%s, devices ok %zu/%zu", compared, exts.c_str(), differing,
              first_diff.empty() ? "" : ", first: ", first_diff.c_str(), runs_ok, expected_ok)};
}

// ---------------------------------------------------------------- 10 smoke

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome smoke() {
  DeviceTraceSet set;
  const struct {
    const char* id;
    double power;
    std::size_t len;
    double idle;
  } bursts[] = {{"kettle", 2000, 10, 120}, {"washer", 500, 60, 200}, {"microwave", 1200, 20, 150}, {"toaster", 900, 15, 90}};
  std::uint64_t seed = 1;
  for (const auto& b : bursts) {
    FixtureSpec s;
    s.kind = FixtureKind::IntermittentBursts;
    s.length = 6000;
    s.seed = seed++;
    s.burst_power = b.power;
    s.burst_length = b.len;
    s.mean_idle = b.idle;
    s.device_id = b.id;
    auto t = make_fixture(s);
    t.samples[0] = 2.0;
    set.add(t);
  }
  FixtureSpec fridge;
  fridge.kind = FixtureKind::NoisySine;
  fridge.length = 3000;
  fridge.noise_std = 0.5;
  fridge.device_id = "fridge";
  set.add(make_fixture(fridge));
  FixtureSpec late;
  late.kind = FixtureKind::NoisySine;
  late.length = 3000;
  late.noise_std = 0.0;
  late.device_id = "freezer";
  auto freezer = make_fixture(late);
  std::fill(freezer.samples.begin(), freezer.samples.begin() + 150, 0.0);
  set.add(freezer);
  FixtureSpec sq;
  sq.kind = FixtureKind::SquareWave;
  sq.length = 3000;
  sq.half_period = 40;
  sq.low = 5;
  sq.high = 150;
  sq.device_id = "heat_pump";
  set.add(make_fixture(sq));
  FixtureSpec sp;
  sp.kind = FixtureKind::Spiky;
  sp.length = 3000;
  sp.device_id = "pump";
  set.add(make_fixture(sp));

  const auto out = scratch("smoke");
  RunConfig cfg;
  cfg.out_dir = out;
  cfg.seed = 2026;
  cfg.segment_len = 100;
  cfg.samples_per_cluster = 16;
  cfg.train.epochs = 30;
  cfg.train.latent_dim = 16;
  cfg.conv = desk_arch();
  cfg.hybrid_continuous = true;
  cfg.continuous.max_surrogate_len = 200;
  cfg.continuous.window_len = 200;

  const auto t0 = std::chrono::steady_clock::now();
  const auto m = run_pipeline(cfg, set);
  const double secs = seconds_since(t0);

  std::vector<std::string> problems;
  const auto manifest = nlohmann::json::parse(read(out / "manifest.json"));
  if (manifest.at("schema_version") != kManifestSchemaVersion) problems.push_back("schema_version");
  const auto& devs = manifest.at("devices");
  if (devs.size() != 8) problems.push_back("manifest device count");
  std::set<std::string> strategies;
  for (const auto& d : devs) {
    if (d.at("status") != "ok") problems.push_back(d.at("device").get<std::string>() + " failed");
    strategies.insert(d.at("strategy").get<std::string>());
    for (const auto& f : d.at("files"))
      if (!fs::exists(out / f.get<std::string>())) problems.push_back("missing " + f.get<std::string>());
    for (const auto& f : d.at("checkpoints"))
      if (!fs::exists(out / f.get<std::string>())) problems.push_back("missing " + f.get<std::string>());
  }

  const auto agg = split(read(out / "aggregate_metrics.csv"), '\n');
  std::size_t agg_rows = 0;
  if (agg.empty() || agg[0] != kMetricsCsvHeader) problems.push_back("aggregate header");
  for (std::size_t i = 1; i < agg.size(); ++i) {
    if (agg[i].empty()) continue;
    const auto cells = split(agg[i], ',');
    ++agg_rows;
    if (cells.size() != 9) problems.push_back("aggregate row width");
    for (std::size_t c = 1; c < cells.size(); ++c)
      if (!std::isfinite(std::stod(cells[c]))) problems.push_back("aggregate value");
    if (i == agg.size() - 2 && cells[0] != "average") problems.push_back("average row");
  }
  if (agg_rows != 9) problems.push_back(fmt("aggregate has %zu rows", agg_rows));

  const auto sweep = split(read(out / "sweep.csv"), '\n');
  std::size_t sweep_rows = 0;
  std::set<std::string> classes;
  if (sweep.empty() || sweep[0] != "device,detected_type,K,silhouette,strategy") problems.push_back("sweep header");
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    if (sweep[i].empty()) continue;
    const auto cells = split(sweep[i], ',');
    ++sweep_rows;
    if (cells.size() != 5) problems.push_back("sweep row width");
    if (cells.size() > 1) classes.insert(cells[1]);
  }
  if (sweep_rows != 8) problems.push_back(fmt("sweep has %zu rows", sweep_rows));
  if (classes.size() != 2) problems.push_back("sweep does not mix classes");

  std::string strat;
  for (const auto& s : strategies) strat += (strat.empty() ? "" : "/") + s;
  std::string probs;
  for (const auto& p : problems) probs += "; " + p;
  return {problems.empty() && m.all_ok() && secs < kSmokeSeconds,
          fmt("8 devices, strategies %s, aggregate %zu rows, sweep %zu rows, %.0fs%s", strat.c_str(), agg_rows,
              sweep_rows, secs, probs.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"routing conformance", routing_conformance},
      {"gradient correctness", gradient_correctness},
      {"clustering oracle", clustering_oracle},
      {"resampler exactness", resampler_exactness},
      {"metric identity suite", metric_identity},
      {"desk-scale training sanity", training_sanity},
      {"ablation direction", ablation_direction},
      {"hybrid branch", hybrid_branch},
      {"determinism", determinism},
      {"end-to-end smoke", smoke},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(n)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %2d %-28s %s  %s [%.1fs]\n", n, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
