#include "cag/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>

#include "cag/error.hpp"
#include "fs_util.hpp"

namespace cag {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw Error(ErrorKind::InvalidConfig,
              "'" + std::string(value) + "' is not a valid " + std::string(expected) + " for " + std::string(key));
}

template <typename T>
T parse_int(std::string_view key, std::string_view v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || p != end || v.empty()) bad_value(key, v, "non-negative integer");
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || p != end || v.empty()) bad_value(key, v, "number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "boolean");
}

std::vector<std::size_t> parse_list(std::string_view key, std::string_view v) {
  std::vector<std::size_t> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(parse_int<std::size_t>(key, trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

std::string show(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
std::string show(bool v) { return v ? "true" : "false"; }
std::string show(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

struct Entry {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

#define CAG_SIZE(name, field)                                                     \
  Entry {                                                                         \
    name, [](const RunConfig& c) { return std::to_string(c.field); },             \
        [](RunConfig& c, std::string_view v) { c.field = parse_int<std::size_t>(name, v); } \
  }
#define CAG_DOUBLE(name, field)                                                                  \
  Entry {                                                                                        \
    name, [](const RunConfig& c) { return show(c.field); },                                      \
        [](RunConfig& c, std::string_view v) { c.field = parse_double(name, v); }                \
  }
#define CAG_BOOL(name, field)                                                                    \
  Entry {                                                                                        \
    name, [](const RunConfig& c) { return show(c.field); },                                      \
        [](RunConfig& c, std::string_view v) { c.field = parse_bool(name, v); }                  \
  }
#define CAG_LIST(name, field)                                                                    \
  Entry {                                                                                        \
    name, [](const RunConfig& c) { return show(c.field); },                                      \
        [](RunConfig& c, std::string_view v) { c.field = parse_list(name, v); }                  \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table{
      Entry{"input", [](const RunConfig& c) { return c.input.string(); },
            [](RunConfig& c, std::string_view v) { c.input = std::string(v); }},
      Entry{"out", [](const RunConfig& c) { return c.out_dir.string(); },
            [](RunConfig& c, std::string_view v) { c.out_dir = std::string(v); }},
      Entry{"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
            [](RunConfig& c, std::string_view v) { c.seed = parse_int<std::uint64_t>("seed", v); }},
      CAG_SIZE("segment_len", segment_len),
      CAG_SIZE("samples_per_cluster", samples_per_cluster),
      CAG_SIZE("diversity_cap", diversity_cap),
      CAG_SIZE("jobs", jobs),
      CAG_BOOL("no_clusters", no_clusters),
      CAG_BOOL("shared_discriminator", shared_discriminator),
      CAG_SIZE("shared_epochs", shared_epochs),
      CAG_BOOL("hybrid_continuous", hybrid_continuous),
      CAG_SIZE("routing.prefix_len", routing.prefix_len),
      CAG_DOUBLE("routing.occupancy_threshold", routing.occupancy_threshold),
      CAG_DOUBLE("routing.derivative_variance_threshold", routing.derivative_variance_threshold),
      CAG_SIZE("routing.smoothing_window", routing.smoothing_window),
      CAG_BOOL("routing.population_variance", routing.population_variance),
      CAG_LIST("cluster.candidate_ks", cluster.candidate_ks),
      CAG_SIZE("cluster.max_k", cluster.max_k),
      CAG_SIZE("cluster.max_iter", cluster.max_iter),
      CAG_DOUBLE("cluster.tol", cluster.tol),
      CAG_SIZE("cluster.n_init", cluster.n_init),
      CAG_SIZE("train.epochs", train.epochs),
      CAG_SIZE("train.batch_size", train.batch_size),
      CAG_SIZE("train.latent_dim", train.latent_dim),
      CAG_SIZE("train.d_steps_per_g", train.d_steps_per_g),
      CAG_DOUBLE("train.learning_rate", train.optim.learning_rate),
      CAG_DOUBLE("train.beta1", train.optim.beta1),
      CAG_DOUBLE("train.beta2", train.optim.beta2),
      CAG_DOUBLE("train.epsilon", train.optim.epsilon),
      CAG_SIZE("conv.bridge_channels", conv.bridge_channels),
      CAG_LIST("conv.gen_channels", conv.gen_channels),
      CAG_LIST("conv.gen_kernels", conv.gen_kernels),
      CAG_LIST("conv.disc_channels", conv.disc_channels),
      CAG_LIST("conv.disc_kernels", conv.disc_kernels),
      CAG_SIZE("recurrent.hidden", recurrent.hidden),
      CAG_SIZE("recurrent.layers", recurrent.layers),
      CAG_SIZE("continuous.max_surrogate_len", continuous.max_surrogate_len),
      CAG_SIZE("continuous.window_len", continuous.window_len),
      CAG_SIZE("continuous.factor", continuous.factor),
      CAG_DOUBLE("hybrid.gamma", hybrid.gamma),
      CAG_DOUBLE("hybrid.spike_quantile", hybrid.spike_quantile),
      CAG_SIZE("hybrid.spike_window", hybrid.spike_window),
      CAG_SIZE("hybrid.square_downsample", hybrid.square_downsample),
  };
  return table;
}

#undef CAG_SIZE
#undef CAG_DOUBLE
#undef CAG_BOOL
#undef CAG_LIST

}  // namespace

void RunConfig::validate() const {
  routing.validate();
  cluster.validate();
  train.validate();
  conv.validate();
  continuous.validate();
  hybrid.validate();
  if (recurrent.hidden < 1 || recurrent.layers < 1)
    throw Error(ErrorKind::InvalidConfig, "recurrent hidden size and layer count must be >= 1");
  if (segment_len < 4) throw Error(ErrorKind::InvalidConfig, "segment length must be >= 4");
  if (samples_per_cluster < 1) throw Error(ErrorKind::InvalidConfig, "samples per cluster must be >= 1");
  if (diversity_cap < 2) throw Error(ErrorKind::InvalidConfig, "diversity cap must be >= 2");
  if (jobs < 1) throw Error(ErrorKind::InvalidConfig, "jobs must be >= 1");
}

void RunConfig::set(std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  for (const auto& e : entries()) {
    if (e.key == key) {
      e.set(*this, value);
      return;
    }
  }
  throw Error(ErrorKind::InvalidConfig, "unknown configuration key '" + std::string(key) + "'");
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& e : entries()) out += e.key + '=' + e.get(*this) + '\n';
  return out;
}

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

void apply_config_text(RunConfig& cfg, std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::InvalidConfig, "config line " + std::to_string(line_no) + " has no '='");
    cfg.set(line.substr(0, eq), line.substr(eq + 1));
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig cfg;
  apply_config_text(cfg, detail::read_file(path));
  return cfg;
}

}  // namespace cag
