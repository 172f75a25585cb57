// cag: command line front end for routing, clustering, training, generation,
// evaluation and full pipeline runs.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cag/cluster.hpp"
#include "cag/error.hpp"
#include "cag/features.hpp"
#include "cag/gan.hpp"
#include "cag/metrics.hpp"
#include "cag/pipeline.hpp"
#include "cag/plots.hpp"
#include "cag/resample.hpp"
#include "cag/router.hpp"
#include "cag/run_config.hpp"
#include "cag/trace.hpp"
#include "json.hpp"

namespace {

using ojson = nlohmann::ordered_json;

struct Common {
  std::string config;
  std::vector<std::string> sets;
  bool json = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> segment_len;
  std::optional<std::size_t> epochs;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key=value configuration file");
  cmd->add_option("--set", c.sets, "override one configuration entry, key=value")->take_all();
  cmd->add_flag("--json", c.json, "machine-readable output");
}

cag::RunConfig build_config(const Common& c) {
  cag::RunConfig cfg;
  if (!c.config.empty()) cfg = cag::load_run_config(c.config);
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw cag::Error(cag::ErrorKind::InvalidConfig, "--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) cfg.seed = *c.seed;
  if (c.segment_len) cfg.segment_len = *c.segment_len;
  if (c.epochs) cfg.train.epochs = *c.epochs;
  return cfg;
}

std::vector<cag::DeviceTrace> pick_devices(const cag::DeviceTraceSet& set, const std::string& device) {
  if (device.empty()) return set.traces();
  const auto* t = set.find(device);
  if (!t) throw cag::Error(cag::ErrorKind::NoData, "device '" + device + "' not found in input");
  return {*t};
}

ojson opt(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

void print_json(const ojson& j) { std::cout << j.dump(2) << '\n'; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!(f << text)) throw cag::Error(cag::ErrorKind::Io, "cannot write '" + path.string() + "'");
}

int cmd_route(const Common& c, const std::string& input, const std::string& device) {
  const auto cfg = build_config(c);
  const auto set = cag::load_csv(input);
  ojson rows = ojson::array();
  if (!c.json) std::cout << "device,class,r0,p_nz,var_smoothed_diff\n";
  for (const auto& t : pick_devices(set, device)) {
    const auto s = cag::routing_stats(t.samples, cfg.routing);
    const auto cls = cag::classify(s, cfg.routing);
    if (c.json) {
      rows.push_back({{"device", t.device_id},
                      {"class", std::string(cag::to_string(cls))},
                      {"r0", s.r0},
                      {"p_nz", s.p_nz},
                      {"var_smoothed_diff", s.var_smoothed_diff}});
    } else {
      std::cout << t.device_id << ',' << cag::to_string(cls) << ',' << (s.r0 ? "true" : "false") << ','
                << cag::format_value(s.p_nz) << ',' << cag::format_value(s.var_smoothed_diff) << '\n';
    }
  }
  if (c.json) print_json(rows);
  return 0;
}

int cmd_features(const Common& c, const std::string& input, const std::string& device) {
  const auto cfg = build_config(c);
  const auto set = cag::load_csv(input);
  const auto& names = cag::feature_names();
  ojson rows = ojson::array();
  if (!c.json) {
    std::cout << "device,segment";
    for (const auto& n : names) std::cout << ',' << n;
    std::cout << '\n';
  }
  for (const auto& t : pick_devices(set, device)) {
    for (const auto& seg : cag::segment(t.samples, cfg.segment_len, t.device_id)) {
      const auto f = cag::segment_features(seg.values);
      if (c.json) {
        rows.push_back({{"device", t.device_id}, {"segment", seg.index}, {"features", f}});
      } else {
        std::cout << t.device_id << ',' << seg.index;
        for (double v : f) std::cout << ',' << cag::format_value(v);
        std::cout << '\n';
      }
    }
  }
  if (c.json) print_json(rows);
  return 0;
}

int cmd_cluster(const Common& c, const std::string& input, const std::string& device, const std::string& out) {
  const auto cfg = build_config(c);
  const auto set = cag::load_csv(input);
  ojson rows = ojson::array();
  if (!c.json) std::cout << "device,K,silhouette,sizes\n";
  for (const auto& t : pick_devices(set, device)) {
    auto cc = cfg.cluster;
    cc.seed = cag::stage_seed(cfg.seed, t.device_id, cag::SeedStage::Sweep);
    const auto feats = cag::featurize(t.samples, cfg.segment_len, t.device_id);
    auto sel = cag::select_k(feats.standardized, cc);
    sel.clustering.scaler = feats.scaler;
    sel.clustering.segment_len = cfg.segment_len;
    if (!out.empty()) {
      const auto dir = std::filesystem::path(out) / t.device_id;
      std::filesystem::create_directories(dir);
      write_text(dir / "clustering.json", cag::clustering_to_json(sel.clustering));
      std::string assignments = "segment,cluster\n";
      for (std::size_t i = 0; i < sel.clustering.assignments.size(); ++i)
        assignments += std::to_string(i) + ',' + std::to_string(sel.clustering.assignments[i]) + '\n';
      write_text(dir / "assignments.csv", assignments);
      std::string curve = "K,silhouette\n";
      for (const auto& [k, s] : sel.curve) curve += std::to_string(k) + ',' + (s ? cag::format_value(*s) : "") + '\n';
      write_text(dir / "silhouette_curve.csv", curve);
    }
    if (c.json) {
      ojson curve = ojson::array();
      for (const auto& [k, s] : sel.curve) curve.push_back({{"K", k}, {"silhouette", opt(s)}});
      rows.push_back({{"device", t.device_id},
                      {"K", sel.best_k},
                      {"silhouette", opt(sel.clustering.silhouette)},
                      {"sizes", sel.clustering.sizes()},
                      {"assignments", sel.clustering.assignments},
                      {"curve", curve}});
    } else {
      std::cout << t.device_id << ',' << sel.best_k << ','
                << (sel.clustering.silhouette ? cag::format_value(*sel.clustering.silhouette) : "") << ',';
      const auto sizes = sel.clustering.sizes();
      for (std::size_t i = 0; i < sizes.size(); ++i) std::cout << (i ? " " : "") << sizes[i];
      std::cout << '\n';
    }
  }
  if (c.json) print_json(rows);
  return 0;
}

int cmd_sweep(const Common& c, const std::string& input) {
  const auto cfg = build_config(c);
  const auto set = cag::load_csv(input);
  cag::SweepReport report;
  for (const auto& t : set) {
    auto cc = cfg.cluster;
    cc.seed = cag::stage_seed(cfg.seed, t.device_id, cag::SeedStage::Sweep);
    report.rows.push_back(cag::sweep_device(t, cfg.routing, cc, cfg.segment_len).row);
  }
  if (c.json) {
    ojson rows = ojson::array();
    for (const auto& r : report.rows)
      rows.push_back({{"device", r.device},
                      {"detected_type", std::string(cag::to_string(r.detected))},
                      {"K", r.k},
                      {"silhouette", opt(r.silhouette)},
                      {"strategy", std::string(cag::to_string(r.strategy))},
                      {"split_silhouette", opt(r.split_silhouette)}});
    print_json(rows);
  } else {
    std::cout << report.to_csv();
  }
  return 0;
}

int cmd_train(const Common& c, const std::string& input, const std::string& device, const std::string& kind,
              std::optional<std::size_t> cluster, const std::string& out) {
  const auto cfg = build_config(c);
  const auto set = cag::load_csv(input);
  const auto traces = pick_devices(set, device);
  if (traces.size() != 1) throw cag::Error(cag::ErrorKind::InvalidConfig, "train needs --device when the input has several");
  const auto& t = traces.front();
  auto tc = cfg.train;
  tc.seed = cag::stage_seed(cfg.seed, t.device_id, cag::SeedStage::Train, cluster.value_or(0));

  cag::GanModel model;
  if (kind == "continuous") {
    const auto& cc = cfg.continuous;
    const std::size_t F = cc.factor ? cc.factor : cag::choose_factor(t.length(), cc.max_surrogate_len);
    const auto sur = cag::downsample(t.samples, F);
    const auto windows =
        cag::make_windows(sur.values, cc.max_surrogate_len, cc.window_len, std::max<std::size_t>(1, cc.window_len / 2));
    model = cag::train_continuous_gan(windows, tc, cfg.recurrent);
  } else {
    const auto segs = cag::segment(t.samples, cfg.segment_len, t.device_id);
    cag::SeriesSet data;
    if (cluster) {
      auto cc = cfg.cluster;
      cc.seed = cag::stage_seed(cfg.seed, t.device_id, cag::SeedStage::Sweep);
      const auto feats = cag::featurize(t.samples, cfg.segment_len, t.device_id);
      const auto sel = cag::select_k(feats.standardized, cc);
      if (*cluster >= sel.best_k)
        throw cag::Error(cag::ErrorKind::InvalidConfig, "cluster index " + std::to_string(*cluster) +
                                                            " out of range for K=" + std::to_string(sel.best_k));
      for (std::size_t i = 0; i < segs.size(); ++i)
        if (sel.clustering.assignments[i] == *cluster) data.push_back(segs[i].values);
      if (data.size() == 1) data.push_back(data.front());
    } else {
      for (const auto& s : segs) data.push_back(s.values);
    }
    model = cag::train_cluster_gan(data, tc, cfg.conv);
  }
  cag::save_checkpoint(out, model);
  const auto loss_path = std::filesystem::path(out).replace_extension(".losses.csv");
  write_text(loss_path, cag::loss_history_csv(model.history));
  const auto& last = model.history.back();
  if (c.json) {
    print_json({{"checkpoint", out},
                {"losses", loss_path.string()},
                {"branch", std::string(cag::to_string(model.branch))},
                {"epochs", model.history.size()},
                {"final_discriminator_loss", last.discriminator},
                {"final_generator_loss", last.generator}});
  } else {
    std::cout << "wrote " << out << " (" << model.history.size() << " epochs, final D loss "
              << cag::format_value(last.discriminator) << ", G loss " << cag::format_value(last.generator) << ")\n";
  }
  return 0;
}

int cmd_generate(const Common& c, const std::string& checkpoint, std::size_t n, const std::string& out) {
  const auto model = cag::load_checkpoint(checkpoint);
  const auto samples = cag::sample(model, n, *c.seed);
  if (c.json) {
    print_json({{"samples", samples}});
    return 0;
  }
  cag::DeviceTraceSet set;
  for (std::size_t i = 0; i < samples.size(); ++i) set.add({"sample_" + std::to_string(i), samples[i]});
  if (out.empty()) {
    std::cout << cag::to_csv(set);
  } else {
    cag::write_csv(out, set);
  }
  return 0;
}

const cag::DeviceTrace& pick_one(const cag::DeviceTraceSet& set, const std::string& device, const std::string& what) {
  if (device.empty()) return set.traces().front();
  const auto* t = set.find(device);
  if (!t) throw cag::Error(cag::ErrorKind::NoData, "device '" + device + "' not found in " + what);
  return *t;
}

int cmd_evaluate(const Common& c, const std::string& real, const std::string& gen, const std::string& clusters,
                 const std::string& device) {
  const auto cfg = build_config(c);
  const auto rs = cag::load_csv(real, cag::MissingPolicy::DropTrailing);
  const auto gs = cag::load_csv(gen, cag::MissingPolicy::DropTrailing);
  const auto clustering = cag::load_clustering(clusters);
  const auto& r = pick_one(rs, device, real);
  const auto& g = pick_one(gs, device, gen);
  cag::EvalConfig ec;
  ec.diversity_cap = cfg.diversity_cap;
  ec.seed = cag::stage_seed(cfg.seed, r.device_id, cag::SeedStage::Evaluate);
  std::cout << cag::evaluate_all(r.samples, g.samples, clustering, ec).to_json();
  return 0;
}

int cmd_pipeline(const Common& c, cag::RunConfig cfg) {
  auto manifest = cag::run_pipeline(cfg, [&](std::string_view msg) { std::cerr << msg << '\n'; });
  if (c.json) {
    std::cout << manifest.to_json();
  } else {
    for (const auto& d : manifest.devices) {
      std::cout << d.device << ": " << (d.ok ? "ok" : "FAILED") << ' '
                << (d.device_class ? cag::to_string(*d.device_class) : "-") << ' ' << d.strategy << " K=" << d.k;
      if (!d.ok) std::cout << " (" << d.error << ')';
      std::cout << '\n';
    }
    std::cout << "run directory: " << manifest.run_dir.string() << '\n';
  }
  return manifest.all_ok() ? 0 : 1;
}

int cmd_plots(const Common& c, const std::string& run) {
  const auto outcome = cag::emit_plots(run);
  for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << '\n';
  if (c.json) {
    ojson files = ojson::array();
    for (const auto& p : outcome.written) files.push_back(p.generic_string());
    print_json({{"written", files}, {"warnings", outcome.warnings}});
  } else {
    for (const auto& p : outcome.written) std::cout << p.generic_string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cluster-aggregated GAN toolkit for synthetic appliance load traces"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cag::kToolVersion);

  Common common;
  std::string input, device, out, kind = "cluster", checkpoint, real, gen, clusters, run;
  std::optional<std::size_t> cluster_index;
  std::size_t n = 64;
  std::optional<std::size_t> samples_per_cluster, jobs;
  bool no_clusters = false, shared_disc = false, hybrid = false;

  auto* route = app.add_subcommand("route", "classify devices as continuous or intermittent");
  auto* features = app.add_subcommand("features", "per-segment shape features as CSV");
  auto* cluster = app.add_subcommand("cluster", "k-means with silhouette model selection");
  auto* sweep = app.add_subcommand("sweep", "strategy sweep table (device,detected_type,K,silhouette,strategy)");
  auto* train = app.add_subcommand("train", "train one GAN and write a checkpoint");
  auto* generate = app.add_subcommand("generate", "sample a checkpoint");
  auto* evaluate = app.add_subcommand("evaluate", "metrics report for a real/generated pair");
  auto* pipeline = app.add_subcommand("pipeline", "full route/cluster/train/generate/evaluate run");
  auto* plots = app.add_subcommand("plots", "regenerate SVG plots of a run directory");

  for (auto* cmd : {route, features, cluster, sweep, train, generate, evaluate, pipeline, plots}) add_common(cmd, common);
  for (auto* cmd : {route, features, cluster, sweep, train, pipeline})
    cmd->add_option("--input", input, "CSV with one column per device")->required();
  for (auto* cmd : {route, features, cluster, train, evaluate}) cmd->add_option("--device", device, "device column");
  for (auto* cmd : {features, cluster, sweep, train, pipeline})
    cmd->add_option("--segment-len", common.segment_len, "segment length L");
  for (auto* cmd : {cluster, sweep, evaluate, pipeline}) cmd->add_option("--seed", common.seed, "global seed");
  for (auto* cmd : {train, generate}) cmd->add_option("--seed", common.seed, "global seed")->required();
  for (auto* cmd : {train, pipeline}) cmd->add_option("--epochs", common.epochs, "training epochs");

  cluster->add_option("--out", out, "write clustering.json, assignments.csv and silhouette_curve.csv under <out>/<device>");
  train->add_option("--out", out, "checkpoint path")->required();
  train->add_option("--kind", kind, "cluster or continuous")->check(CLI::IsMember({"cluster", "continuous"}));
  train->add_option("--cluster", cluster_index, "restrict training to one k-means cluster");
  generate->add_option("--checkpoint", checkpoint, "checkpoint JSON")->required();
  generate->add_option("--n", n, "number of samples");
  generate->add_option("--out", out, "CSV path (stdout when omitted)");
  evaluate->add_option("--real", real, "real trace CSV")->required();
  evaluate->add_option("--gen", gen, "generated trace CSV")->required();
  evaluate->add_option("--clusters", clusters, "clustering.json or a device directory containing one")
      ->required()
      ->check(CLI::ExistingPath);
  pipeline->add_option("--out", out, "run directory")->required();
  pipeline->add_option("--samples-per-cluster", samples_per_cluster, "generated segments per cluster");
  pipeline->add_option("--jobs", jobs, "devices processed in parallel");
  pipeline->add_flag("--no-clusters", no_clusters, "pool all segments of a device into one GAN");
  pipeline->add_flag("--shared-discriminator", shared_disc, "joint discriminator phase after per-cluster training");
  pipeline->add_flag("--hybrid-continuous", hybrid, "square-wave / spike handling for continuous devices");
  plots->add_option("--run", run, "run directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*route) return cmd_route(common, input, device);
    if (*features) return cmd_features(common, input, device);
    if (*cluster) return cmd_cluster(common, input, device, out);
    if (*sweep) return cmd_sweep(common, input);
    if (*train) return cmd_train(common, input, device, kind, cluster_index, out);
    if (*generate) return cmd_generate(common, checkpoint, n, out);
    if (*evaluate) return cmd_evaluate(common, real, gen, clusters, device);
    if (*plots) return cmd_plots(common, run);
    if (*pipeline) {
      auto cfg = build_config(common);
      cfg.input = input;
      cfg.out_dir = out;
      if (samples_per_cluster) cfg.samples_per_cluster = *samples_per_cluster;
      if (jobs) cfg.jobs = *jobs;
      if (no_clusters) cfg.no_clusters = true;
      if (shared_disc) cfg.shared_discriminator = true;
      if (hybrid) cfg.hybrid_continuous = true;
      return cmd_pipeline(common, cfg);
    }
  } catch (const std::exception& e) {
    if (common.json) {
      std::cout << ojson{{"error", e.what()}}.dump() << '\n';
    }
    std::cerr << "cag: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
