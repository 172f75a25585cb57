#include "cag/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "cag/error.hpp"
#include "cag/hybrid.hpp"
#include "cag/plots.hpp"
#include "cag/resample.hpp"
#include "cag/seed.hpp"
#include "fs_util.hpp"
#include "json.hpp"

namespace cag {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::uint64_t stage_seed(std::uint64_t global, std::string_view device, SeedStage stage, std::uint64_t index) {
  return derive_seed(global, device, static_cast<std::uint64_t>(stage), index);
}

bool RunManifest::all_ok() const noexcept {
  return std::all_of(devices.begin(), devices.end(), [](const DeviceRecord& d) { return d.ok; });
}

namespace {

ojson optional_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

}  // namespace

std::string RunManifest::to_json() const {
  ojson config = ojson::object();
  std::istringstream lines(config_text);
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) config[line.substr(0, eq)] = line.substr(eq + 1);
  }
  ojson devs = ojson::array();
  for (const auto& d : devices) {
    ojson j{{"device", d.device}, {"directory", d.directory}, {"status", d.ok ? "ok" : "failed"}};
    if (!d.ok) j["error"] = d.error;
    j["class"] = d.device_class ? ojson(std::string(to_string(*d.device_class))) : ojson(nullptr);
    j["strategy"] = d.strategy;
    j["K"] = d.k;
    j["silhouette"] = optional_number(d.silhouette);
    j["checkpoints"] = d.checkpoints;
    j["files"] = d.files;
    if (d.ok) j["metrics"] = d.directory + "/metrics.json";
    devs.push_back(std::move(j));
  }
  ojson j{
      {"schema_version", kManifestSchemaVersion},
      {"tool_version", kToolVersion},
      {"config", std::move(config)},
      {"config_file", "config.txt"},
      {"aggregate_metrics", "aggregate_metrics.csv"},
      {"sweep", "sweep.csv"},
      {"devices", std::move(devs)},
  };
  return j.dump(2) + '\n';
}

fs::path resolve_run_dir(const fs::path& out_dir) {
  if (out_dir.empty()) throw Error(ErrorKind::InvalidConfig, "no output run directory given");
  if (out_dir.is_relative()) {
    if (const char* root = std::getenv(kRunRootEnv); root && *root) return fs::path(root) / out_dir;
  }
  return out_dir;
}

std::string clustering_to_json(const Clustering& c) {
  ojson j{
      {"schema_version", 1},
      {"k", c.k},
      {"segment_len", c.segment_len},
      {"silhouette", optional_number(c.silhouette)},
      {"inertia", c.inertia},
      {"iterations", c.iterations},
      {"inertia_history", c.inertia_history},
      {"centroids", c.centroids},
      {"assignments", c.assignments},
  };
  if (c.scaler) {
    j["scaler"] = {{"mean", c.scaler->mean}, {"std", c.scaler->std}, {"degenerate", c.scaler->degenerate}};
  }
  return j.dump(2) + '\n';
}

Clustering clustering_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Clustering c;
    c.k = j.at("k").get<std::size_t>();
    c.segment_len = j.at("segment_len").get<std::size_t>();
    if (!j.at("silhouette").is_null()) c.silhouette = j.at("silhouette").get<double>();
    c.inertia = j.at("inertia").get<double>();
    c.iterations = j.at("iterations").get<std::size_t>();
    c.inertia_history = j.at("inertia_history").get<std::vector<double>>();
    c.centroids = j.at("centroids").get<PointSet>();
    c.assignments = j.at("assignments").get<std::vector<std::size_t>>();
    if (c.k == 0 || c.centroids.size() != c.k) throw Error(ErrorKind::Format, "clustering has inconsistent k");
    if (j.contains("scaler")) {
      FeatureScaler s;
      s.mean = j.at("scaler").at("mean").get<FeatureVector>();
      s.std = j.at("scaler").at("std").get<FeatureVector>();
      s.degenerate = j.at("scaler").at("degenerate").get<std::array<bool, kFeatureDim>>();
      c.scaler = s;
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, std::string("malformed clustering: ") + e.what());
  }
}

Clustering load_clustering(const fs::path& path) {
  const auto file = fs::is_directory(path) ? path / "clustering.json" : path;
  return clustering_from_json(detail::read_file(file));
}

std::vector<std::size_t> allocate_counts(std::span<const std::size_t> sizes, std::size_t total) {
  std::vector<std::size_t> out(sizes.size(), 0);
  const std::size_t sum = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  if (sum == 0 || total == 0) return out;
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t given = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const double quota = static_cast<double>(total) * static_cast<double>(sizes[k]) / static_cast<double>(sum);
    out[k] = static_cast<std::size_t>(std::floor(quota));
    given += out[k];
    rem.emplace_back(quota - static_cast<double>(out[k]), k);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; given < total; ++i, ++given) ++out[rem[i % rem.size()].second];

  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] == 0 || out[k] > 0) continue;
    std::size_t donor = sizes.size();
    for (std::size_t j = 0; j < sizes.size(); ++j)
      if (out[j] > 1 && (donor == sizes.size() || out[j] > out[donor])) donor = j;
    if (donor == sizes.size()) break;
    --out[donor];
    ++out[k];
  }
  return out;
}

std::vector<std::size_t> interleave_order(std::span<const std::size_t> counts) {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  std::vector<long long> current(counts.size(), 0);
  std::vector<std::size_t> order;
  order.reserve(total);
  for (std::size_t step = 0; step < total; ++step) {
    std::size_t best = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      current[k] += static_cast<long long>(counts[k]);
      if (current[k] > current[best]) best = k;
    }
    current[best] -= static_cast<long long>(total);
    order.push_back(best);
  }
  return order;
}

namespace {

std::string sanitize(std::string_view id) {
  std::string out;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    out += ok ? c : '_';
  }
  if (out.empty() || out == "." || out == "..") out = "device";
  return out;
}

class DeviceRun {
 public:
  DeviceRun(const RunConfig& cfg, const fs::path& run_dir, DeviceRecord& rec)
      : cfg_(cfg), run_dir_(run_dir), rec_(rec) {}

  void write(const std::string& rel, std::string_view content) {
    detail::write_file_atomic(run_dir_ / rec_.directory / rel, content);
    rec_.files.push_back(rec_.directory + "/" + rel);
  }

  void save_model(const std::string& name, const GanModel& model) {
    write("models/" + name + ".json", checkpoint_to_string(model));
    rec_.checkpoints.push_back(rec_.directory + "/models/" + name + ".json");
    write("losses/" + name + ".csv", loss_history_csv(model.history));
  }

  TrainConfig train_config(SeedStage stage, std::uint64_t index) const {
    TrainConfig tc = cfg_.train;
    tc.seed = seed(stage, index);
    return tc;
  }

  std::uint64_t seed(SeedStage stage, std::uint64_t index = 0) const {
    return stage_seed(cfg_.seed, rec_.device, stage, index);
  }

  std::vector<double> intermittent(const DeviceSweep& sweep) {
    const auto& c = sweep.kmeans.clustering;
    const auto& segs = sweep.features.segments;
    const std::size_t budget = cfg_.samples_per_cluster * c.k;
    std::vector<double> out;

    if (cfg_.no_clusters) {
      rec_.strategy = "pooled";
      SeriesSet data;
      for (const auto& s : segs) data.push_back(s.values);
      const auto model = ablation_no_clusters(data, train_config(SeedStage::Train, 0), cfg_.conv);
      save_model("pooled_0", model);
      for (const auto& s : sample(model, budget, seed(SeedStage::Sample, 0))) out.insert(out.end(), s.begin(), s.end());
      return out;
    }

    rec_.strategy = "clustered";
    std::vector<SeriesSet> data(c.k);
    for (std::size_t i = 0; i < segs.size(); ++i) data[c.assignments[i]].push_back(segs[i].values);
    std::vector<GanModel> models;
    for (std::size_t k = 0; k < c.k; ++k) {
      auto train_set = data[k];
      if (train_set.size() == 1) train_set.push_back(train_set.front());
      models.push_back(train_cluster_gan(train_set, train_config(SeedStage::Train, k), cfg_.conv));
    }
    if (cfg_.shared_discriminator && c.k > 1) {
      TrainConfig tc = train_config(SeedStage::Shared, 0);
      tc.epochs = std::max<std::size_t>(1, cfg_.shared_epochs);
      std::vector<GanModel*> ptrs;
      for (auto& m : models) ptrs.push_back(&m);
      finetune_shared_discriminator(ptrs, data, tc, cfg_.conv);
    }
    for (std::size_t k = 0; k < c.k; ++k) save_model("cluster_" + std::to_string(k), models[k]);

    const auto counts = allocate_counts(c.sizes(), budget);
    std::vector<SeriesSet> samples(c.k);
    for (std::size_t k = 0; k < c.k; ++k) samples[k] = sample(models[k], counts[k], seed(SeedStage::Sample, k));
    std::vector<std::size_t> next(c.k, 0);
    for (std::size_t k : interleave_order(counts)) {
      const auto& s = samples[k][next[k]++];
      out.insert(out.end(), s.begin(), s.end());
    }
    return out;
  }

  std::vector<double> continuous(std::span<const double> x) {
    const std::size_t T = x.size();
    if (cfg_.hybrid_continuous) {
      const auto det = detect_square_wave(x, cfg_.hybrid);
      ojson j{{"is_square", det.is_square},
              {"low_center", det.low_center},
              {"high_center", det.high_center},
              {"cycle_length", det.cycle_length}};
      if (det.is_square) {
        rec_.strategy = "square";
        write("hybrid.json", j.dump(2) + '\n');
        const auto m = train_square_model(x, det, cfg_.continuous.max_surrogate_len,
                                          train_config(SeedStage::Train, 0), cfg_.conv);
        save_model("square_0", m.gan);
        return generate_square(m, T, seed(SeedStage::Sample, 0));
      }
      rec_.strategy = "spike";
      const auto m = train_spike_model(x, cfg_.hybrid, train_config(SeedStage::Train, 0), cfg_.conv);
      j["spike_threshold"] = m.threshold;
      j["spike_window"] = m.window;
      j["gap_mean"] = m.gap_mean;
      j["gap_std"] = m.gap_std;
      write("hybrid.json", j.dump(2) + '\n');
      save_model("spike_0", m.gan);
      return interleave_spikes(m, T, seed(SeedStage::Sample, 0));
    }

    rec_.strategy = "continuous";
    const auto& cc = cfg_.continuous;
    const std::size_t F = cc.factor ? cc.factor : choose_factor(T, cc.max_surrogate_len);
    const auto sur = downsample(x, F);
    const std::size_t stride = std::max<std::size_t>(1, cc.window_len / 2);
    const auto starts = window_starts(sur.values.size(), cc.max_surrogate_len, cc.window_len, stride);
    const auto windows = make_windows(sur.values, cc.max_surrogate_len, cc.window_len, stride);
    const auto model = train_continuous_gan(windows, train_config(SeedStage::Train, 0), cfg_.recurrent);
    save_model("continuous_0", model);
    const auto gen = sample(model, windows.size(), seed(SeedStage::Sample, 0));
    const auto y = gen.size() == 1 ? gen.front() : stitch_windows(gen, starts, sur.values.size());
    return reconstruct(y, F, T);
  }

 private:
  const RunConfig& cfg_;
  const fs::path& run_dir_;
  DeviceRecord& rec_;
};

std::string routing_json(const DeviceRecord& r) {
  ojson j{{"device", r.device},
          {"class", std::string(to_string(*r.device_class))},
          {"r0", r.routing.r0},
          {"p_nz", r.routing.p_nz},
          {"var_smoothed_diff", r.routing.var_smoothed_diff}};
  return j.dump(2) + '\n';
}

std::string single_column_csv(const std::string& id, std::vector<double> values) {
  DeviceTraceSet set;
  set.add({id, std::move(values)});
  return to_csv(set);
}

void process_device(const DeviceTrace& trace, const RunConfig& cfg, const fs::path& run_dir, DeviceRecord& rec,
                    std::optional<SweepRow>& sweep_row) {
  DeviceRun run(cfg, run_dir, rec);
  try {
    rec.routing = routing_stats(trace.samples, cfg.routing);
    rec.device_class = classify(rec.routing, cfg.routing);
    run.write("routing.json", routing_json(rec));

    ClusterConfig cc = cfg.cluster;
    cc.seed = run.seed(SeedStage::Sweep);
    const auto sweep = sweep_device(trace, cfg.routing, cc, cfg.segment_len);
    sweep_row = sweep.row;
    const auto& clustering = sweep.kmeans.clustering;
    rec.k = clustering.k;
    rec.silhouette = clustering.silhouette;
    run.write("clustering.json", clustering_to_json(clustering));

    const auto gen = *rec.device_class == DeviceClass::Intermittent ? run.intermittent(sweep)
                                                                     : run.continuous(trace.samples);
    run.write("real.csv", single_column_csv(trace.device_id, trace.samples));
    run.write("generated.csv", single_column_csv(trace.device_id, gen));

    EvalConfig ec;
    ec.diversity_cap = cfg.diversity_cap;
    ec.seed = run.seed(SeedStage::Evaluate);
    rec.metrics = evaluate_all(trace.samples, gen, clustering, ec);
    run.write("metrics.json", rec.metrics->to_json());

    for (const auto& p : emit_device_plots(run_dir / rec.directory).written)
      rec.files.push_back(rec.directory + "/" + p.generic_string());
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
    rec.metrics.reset();
  }
}

}  // namespace

RunManifest run_pipeline(const RunConfig& cfg, const LogFn& log) {
  const auto traces = load_csv(cfg.input);
  return run_pipeline(cfg, traces, log);
}

RunManifest run_pipeline(const RunConfig& cfg, const DeviceTraceSet& traces, const LogFn& log) {
  cfg.validate();
  if (traces.empty()) throw Error(ErrorKind::Format, "input contains no devices");
  RunManifest manifest;
  manifest.run_dir = resolve_run_dir(cfg.out_dir);
  manifest.config_text = cfg.to_text();

  std::error_code ec;
  fs::create_directories(manifest.run_dir / "devices", ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create run directory '" + manifest.run_dir.string() + "': " + ec.message());
  detail::write_file_atomic(manifest.run_dir / "config.txt", manifest.config_text);

  const std::size_t n = traces.size();
  manifest.devices.resize(n);
  std::vector<std::optional<SweepRow>> sweep_rows(n);
  std::set<std::string> used;
  for (std::size_t i = 0; i < n; ++i) {
    auto& rec = manifest.devices[i];
    rec.device = traces.traces()[i].device_id;
    std::string name = sanitize(rec.device);
    for (std::size_t suffix = 1; used.count(name); ++suffix) name = sanitize(rec.device) + "_" + std::to_string(suffix);
    used.insert(name);
    rec.directory = "devices/" + name;
  }

  std::mutex log_mutex;
  auto say = [&](const std::string& msg) {
    if (!log) return;
    std::lock_guard lock(log_mutex);
    log(msg);
  };
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const auto& trace = traces.traces()[i];
      say("device " + trace.device_id + ": started");
      process_device(trace, cfg, manifest.run_dir, manifest.devices[i], sweep_rows[i]);
      const auto& rec = manifest.devices[i];
      say("device " + trace.device_id + (rec.ok ? ": done (" + rec.strategy + ", K=" + std::to_string(rec.k) + ")"
                                                : ": failed: " + rec.error));
    }
  };
  const std::size_t jobs = std::min(cfg.jobs, n);
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::string aggregate = std::string(kMetricsCsvHeader) + '\n';
  std::vector<MetricsReport> reports;
  for (const auto& rec : manifest.devices) {
    if (!rec.metrics) continue;
    aggregate += metrics_csv_row(rec.device, *rec.metrics) + '\n';
    reports.push_back(*rec.metrics);
  }
  if (!reports.empty()) aggregate += metrics_csv_row("average", average_reports(reports)) + '\n';
  detail::write_file_atomic(manifest.run_dir / "aggregate_metrics.csv", aggregate);

  SweepReport sweep;
  for (auto& row : sweep_rows)
    if (row) sweep.rows.push_back(*row);
  detail::write_file_atomic(manifest.run_dir / "sweep.csv", sweep.to_csv());

  detail::write_file_atomic(manifest.run_dir / "manifest.json", manifest.to_json());
  return manifest;
}

}  // namespace cag
