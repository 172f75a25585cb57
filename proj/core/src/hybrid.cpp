#include "cag/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cag/error.hpp"
#include "cag/features.hpp"
#include "cag/seed.hpp"

namespace cag {

void HybridConfig::validate() const {
  if (!(gamma > 0.0)) throw Error(ErrorKind::InvalidConfig, "gamma must be positive");
  if (!(spike_quantile > 0.0 && spike_quantile < 1.0))
    throw Error(ErrorKind::InvalidConfig, "spike quantile must lie in (0, 1)");
  if (spike_window < 1) throw Error(ErrorKind::InvalidConfig, "spike window must be >= 1");
  if (square_downsample < 1) throw Error(ErrorKind::InvalidConfig, "square-wave downsample factor must be >= 1");
}

SquareWaveResult detect_square_wave(std::span<const double> x, const HybridConfig& cfg) {
  cfg.validate();
  const std::size_t n = x.size();
  if (n < 4) throw Error(ErrorKind::InsufficientData, "square-wave test needs at least 4 samples");

  const std::size_t f = std::max<std::size_t>(1, std::min(cfg.square_downsample, n / 2));
  std::vector<double> blocks(n / f);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < f; ++j) s += x[i * f + j];
    blocks[i] = s / static_cast<double>(f);
  }

  auto [lo_it, hi_it] = std::minmax_element(blocks.begin(), blocks.end());
  double lo = *lo_it, hi = *hi_it;
  for (int iter = 0; iter < 100 && hi > lo; ++iter) {
    const double mid = 0.5 * (lo + hi);
    double s_lo = 0.0, s_hi = 0.0;
    std::size_t n_lo = 0, n_hi = 0;
    for (double b : blocks) {
      if (b <= mid) {
        s_lo += b;
        ++n_lo;
      } else {
        s_hi += b;
        ++n_hi;
      }
    }
    const double new_lo = n_lo ? s_lo / static_cast<double>(n_lo) : lo;
    const double new_hi = n_hi ? s_hi / static_cast<double>(n_hi) : hi;
    if (new_lo == lo && new_hi == hi) break;
    lo = new_lo;
    hi = new_hi;
  }

  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));

  SquareWaveResult r;
  r.low_center = lo;
  r.high_center = hi;
  r.is_square = sd > 0.0 && (hi - lo) > cfg.gamma * sd;

  const double mid = 0.5 * (lo + hi);
  std::vector<std::size_t> runs;
  std::size_t run = 1;
  for (std::size_t t = 1; t < n; ++t) {
    if ((x[t] > mid) == (x[t - 1] > mid)) {
      ++run;
    } else {
      runs.push_back(run);
      run = 1;
    }
  }
  runs.push_back(run);
  if (runs.size() <= 1) {
    r.cycle_length = static_cast<double>(n);
  } else {
    // The first and last runs are clipped by the series boundaries.
    const bool interior = runs.size() > 2;
    const auto first = runs.begin() + (interior ? 1 : 0);
    const auto last = runs.end() - (interior ? 1 : 0);
    const double total = static_cast<double>(std::accumulate(first, last, std::size_t{0}));
    r.cycle_length = 2.0 * total / static_cast<double>(last - first);
  }
  return r;
}

double spike_threshold(std::span<const double> x, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorKind::InvalidConfig, "quantile must lie in [0, 1]");
  std::vector<double> pos;
  for (double v : x)
    if (v > 0.0) pos.push_back(v);
  if (pos.empty()) throw Error(ErrorKind::NoSpikes, "series has no positive samples");
  std::sort(pos.begin(), pos.end());
  const double h = q * static_cast<double>(pos.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(h));
  if (i + 1 >= pos.size()) return pos.back();
  return pos[i] + (h - static_cast<double>(i)) * (pos[i + 1] - pos[i]);
}

SpikeExtraction extract_spikes(std::span<const double> x, double threshold, std::size_t window) {
  if (window < 1) throw Error(ErrorKind::InvalidConfig, "spike window must be >= 1");
  const std::size_t n = x.size();
  std::vector<std::size_t> candidates;
  for (std::size_t t = 0; t < n; ++t) {
    if (x[t] < threshold) continue;
    // Boundary samples must strictly exceed their only neighbour.
    bool peak = false;
    if (n == 1) {
      peak = true;
    } else if (t == 0) {
      peak = x[0] > x[1];
    } else if (t + 1 == n) {
      peak = x[t] > x[t - 1];
    } else {
      peak = x[t] > x[t - 1] && x[t] >= x[t + 1];
    }
    if (peak) candidates.push_back(t);
  }
  if (candidates.empty()) throw Error(ErrorKind::NoSpikes, "no local maxima at or above the spike threshold");
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] > x[b]; });

  SpikeExtraction out;
  std::vector<std::size_t> accepted;
  for (std::size_t c : candidates) {
    // accepted is kept sorted so only the neighbours need checking
    auto it = std::lower_bound(accepted.begin(), accepted.end(), c);
    const bool clear_right = it == accepted.end() || *it - c >= window;
    const bool clear_left = it == accepted.begin() || c - *(it - 1) >= window;
    if (clear_left && clear_right) accepted.insert(it, c);
  }
  out.peaks = accepted;

  const std::size_t half = window / 2;
  for (std::size_t p : accepted) {
    Series w(window, 0.0);
    for (std::size_t i = 0; i < window; ++i) {
      const auto t = static_cast<std::ptrdiff_t>(p) - static_cast<std::ptrdiff_t>(half) + static_cast<std::ptrdiff_t>(i);
      if (t >= 0 && t < static_cast<std::ptrdiff_t>(n)) w[i] = x[static_cast<std::size_t>(t)];
    }
    out.windows.push_back(std::move(w));
  }

  if (accepted.size() < 2) {
    out.gap_mean = static_cast<double>(n);
    out.gap_std = 0.0;
  } else {
    std::vector<double> gaps;
    for (std::size_t i = 1; i < accepted.size(); ++i) gaps.push_back(static_cast<double>(accepted[i] - accepted[i - 1]));
    const double m = std::accumulate(gaps.begin(), gaps.end(), 0.0) / static_cast<double>(gaps.size());
    double v = 0.0;
    for (double g : gaps) v += (g - m) * (g - m);
    out.gap_mean = m;
    out.gap_std = std::sqrt(v / static_cast<double>(gaps.size()));
  }
  return out;
}

SpikeModel train_spike_model(std::span<const double> x, const HybridConfig& hcfg, const TrainConfig& cfg,
                             const ConvArch& arch) {
  hcfg.validate();
  SpikeModel m;
  m.threshold = spike_threshold(x, hcfg.spike_quantile);
  m.window = hcfg.spike_window;
  auto ex = extract_spikes(x, m.threshold, m.window);
  m.gap_mean = ex.gap_mean;
  m.gap_std = ex.gap_std;
  if (ex.windows.size() == 1) ex.windows.push_back(ex.windows.front());
  m.gan = train_cluster_gan(ex.windows, cfg, arch, Branch::Spike);
  return m;
}

std::vector<std::size_t> spike_positions(double gap_mean, double gap_std, std::size_t length, std::uint64_t seed) {
  std::vector<std::size_t> out;
  if (length == 0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gap(gap_mean, std::max(gap_std, 0.0));
  auto draw = [&] {
    const double g = gap_std > 0.0 ? gap(rng) : gap_mean;
    return static_cast<std::size_t>(std::max(1.0, std::round(g)));
  };
  auto p = static_cast<std::size_t>(std::round(0.5 * static_cast<double>(draw())));
  while (p < length) {
    out.push_back(p);
    p += draw();
  }
  return out;
}

std::vector<double> place_spikes(const SeriesSet& windows, std::span<const std::size_t> positions,
                                 std::size_t length) {
  if (windows.size() < positions.size())
    throw Error(ErrorKind::Shape, "fewer spike windows than placement positions");
  std::vector<double> out(length, 0.0);
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const auto& w = windows[k];
    const auto start = static_cast<std::ptrdiff_t>(positions[k]) - static_cast<std::ptrdiff_t>(w.size() / 2);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const auto t = start + static_cast<std::ptrdiff_t>(i);
      if (t >= 0 && t < static_cast<std::ptrdiff_t>(length)) {
        auto& o = out[static_cast<std::size_t>(t)];
        o = std::max(o, w[i]);
      }
    }
  }
  return out;
}

std::vector<double> interleave_spikes(const SpikeModel& model, std::size_t length, std::uint64_t seed) {
  const auto positions = spike_positions(model.gap_mean, model.gap_std, length, seed);
  const auto windows = sample(model.gan, positions.size(), derive_seed(seed, 1));
  return place_spikes(windows, positions, length);
}

SquareModel train_square_model(std::span<const double> x, const SquareWaveResult& detection, std::size_t max_len,
                               const TrainConfig& cfg, const ConvArch& arch) {
  if (max_len < 4) throw Error(ErrorKind::InvalidConfig, "square segment limit must be >= 4");
  SquareModel m;
  const double cycle = std::round(detection.cycle_length);
  m.segment_len = static_cast<std::size_t>(std::clamp(cycle, 4.0, static_cast<double>(max_len)));
  auto segs = segment(x, m.segment_len);
  if (segs.empty()) throw Error(ErrorKind::InsufficientData, "series shorter than one square-wave cycle");
  SeriesSet data;
  for (auto& s : segs) data.push_back(std::move(s.values));
  if (data.size() == 1) data.push_back(data.front());
  m.gan = train_cluster_gan(data, cfg, arch, Branch::Square);
  return m;
}

std::vector<double> generate_square(const SquareModel& model, std::size_t length, std::uint64_t seed) {
  const std::size_t count = (length + model.segment_len - 1) / model.segment_len;
  std::vector<double> out;
  out.reserve(count * model.segment_len);
  for (const auto& s : sample(model.gan, count, seed)) out.insert(out.end(), s.begin(), s.end());
  out.resize(length);
  return out;
}

}  // namespace cag
