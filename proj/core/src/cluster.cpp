#include "cag/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "cag/error.hpp"
#include "cag/seed.hpp"
#include "cag/trace.hpp"

namespace cag {

void ClusterConfig::validate() const {
  if (max_iter < 1) throw Error(ErrorKind::InvalidConfig, "max_iter must be >= 1");
  if (tol < 0) throw Error(ErrorKind::InvalidConfig, "tol must be >= 0");
  if (n_init < 1) throw Error(ErrorKind::InvalidConfig, "n_init must be >= 1");
  for (auto k : candidate_ks) {
    if (k < 1) throw Error(ErrorKind::InvalidConfig, "candidate K must be >= 1");
  }
}

std::vector<std::size_t> Clustering::sizes() const {
  std::vector<std::size_t> s(k, 0);
  for (auto a : assignments) ++s[a];
  return s;
}

std::size_t Clustering::nearest(std::span<const double> point) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(point, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double kmeans_objective(const PointSet& points, const PointSet& centroids,
                        std::span<const std::size_t> assignments) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) total += squared_distance(points[i], centroids[assignments[i]]);
  return total;
}

namespace {

void check_points(const PointSet& points) {
  if (points.empty()) throw Error(ErrorKind::NoData, "no points to cluster");
  const auto dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw Error(ErrorKind::Dimension, "points have inconsistent dimension");
  }
}

PointSet plus_plus_init(const PointSet& points, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = points.size();
  PointSet centroids;
  std::vector<bool> chosen(n, false);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t idx = first(rng);
  centroids.push_back(points[idx]);
  chosen[idx] = true;

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points[i], centroids[0]);

  while (centroids.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    if (total <= 0.0) {
      // Every remaining point coincides with a centroid.
      idx = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
    } else {
      std::uniform_real_distribution<double> pick(0.0, total);
      const double r = pick(rng);
      double acc = 0.0;
      idx = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        if (acc > r) {
          idx = i;
          break;
        }
      }
      if (idx == n) {
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            idx = i;
            break;
          }
        }
      }
    }
    chosen[idx] = true;
    centroids.push_back(points[idx]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
  }
  return centroids;
}

std::vector<std::size_t> assign(const PointSet& points, const PointSet& centroids) {
  std::vector<std::size_t> labels(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = squared_distance(points[i], centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    labels[i] = best;
  }
  return labels;
}

// Moves the farthest point of a multi-member cluster into each empty cluster.
void fill_empty(const PointSet& points, const PointSet& centroids, std::vector<std::size_t>& labels,
                std::size_t k) {
  std::vector<std::size_t> counts(k, 0);
  for (auto l : labels) ++counts[l];
  for (std::size_t e = 0; e < k; ++e) {
    if (counts[e] > 0) continue;
    std::size_t far = points.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (counts[labels[i]] < 2) continue;
      const double d = squared_distance(points[i], centroids[labels[i]]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far == points.size()) break;
    --counts[labels[far]];
    labels[far] = e;
    counts[e] = 1;
  }
}

PointSet means(const PointSet& points, const std::vector<std::size_t>& labels, const PointSet& previous) {
  const std::size_t k = previous.size();
  const std::size_t dim = points.front().size();
  PointSet sums(k, Point(dim, 0.0));
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    ++counts[labels[i]];
    for (std::size_t j = 0; j < dim; ++j) sums[labels[i]][j] += points[i][j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) {
      sums[c] = previous[c];
      continue;
    }
    for (auto& v : sums[c]) v /= static_cast<double>(counts[c]);
  }
  return sums;
}

Clustering lloyd(const PointSet& points, std::size_t k, const ClusterConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Clustering result;
  result.k = k;
  result.centroids = plus_plus_init(points, k, rng);

  for (std::size_t it = 0; it < cfg.max_iter; ++it) {
    auto labels = assign(points, result.centroids);
    result.inertia_history.push_back(kmeans_objective(points, result.centroids, labels));
    fill_empty(points, result.centroids, labels, k);
    auto next = means(points, labels, result.centroids);
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c)
      shift = std::max(shift, std::sqrt(squared_distance(next[c], result.centroids[c])));
    result.centroids = std::move(next);
    result.iterations = it + 1;
    if (shift < cfg.tol) break;
  }

  result.assignments = assign(points, result.centroids);
  result.inertia = kmeans_objective(points, result.centroids, result.assignments);
  result.inertia_history.push_back(result.inertia);
  return result;
}

}  // namespace

Clustering kmeans(const PointSet& points, std::size_t k, const ClusterConfig& cfg) {
  cfg.validate();
  check_points(points);
  if (k < 1) throw Error(ErrorKind::InfeasibleK, "K must be >= 1");
  if (points.size() < k)
    throw Error(ErrorKind::InfeasibleK, "K=" + std::to_string(k) + " exceeds the " +
                                            std::to_string(points.size()) + " available points");
  Clustering best = lloyd(points, k, cfg, cfg.seed);
  for (std::size_t r = 1; r < cfg.n_init; ++r) {
    auto c = lloyd(points, k, cfg, derive_seed(cfg.seed, r));
    if (c.inertia < best.inertia) best = std::move(c);
  }
  return best;
}

SilhouetteResult silhouette(const PointSet& points, std::span<const std::size_t> assignments) {
  check_points(points);
  if (assignments.size() != points.size())
    throw Error(ErrorKind::Dimension, "one label per point required");
  std::size_t k = 0;
  for (auto a : assignments) k = std::max(k, a + 1);
  std::vector<std::size_t> counts(k, 0);
  for (auto a : assignments) ++counts[a];
  const auto occupied = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
  if (occupied < 2) throw Error(ErrorKind::UndefinedSilhouette, "silhouette needs at least two clusters");

  const std::size_t n = points.size();
  SilhouetteResult out;
  out.per_point.assign(n, 0.0);
  std::vector<double> dist_sum(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = assignments[i];
    if (counts[own] < 2) continue;  // singleton
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist_sum[assignments[j]] += std::sqrt(squared_distance(points[i], points[j]));
    }
    const double a = dist_sum[own] / static_cast<double>(counts[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c == own || counts[c] == 0) continue;
      b = std::min(b, dist_sum[c] / static_cast<double>(counts[c]));
    }
    const double denom = std::max(a, b);
    out.per_point[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  double total = 0.0;
  for (double s : out.per_point) total += s;
  out.mean = total / static_cast<double>(n);
  return out;
}

KSelection select_k(const PointSet& points, const ClusterConfig& cfg) {
  cfg.validate();
  if (points.empty()) throw Error(ErrorKind::NoData, "no points for K selection");

  std::set<std::size_t> candidates;
  for (auto k : cfg.candidate_ks) {
    if (k >= 2 && k <= cfg.max_k && points.size() >= 2 * k) candidates.insert(k);
  }

  KSelection sel;
  std::optional<double> best_score;
  for (auto k : candidates) {
    ClusterConfig run = cfg;
    run.seed = derive_seed(cfg.seed, k);
    auto c = kmeans(points, k, run);
    std::optional<double> score;
    try {
      score = silhouette(points, c.assignments).mean;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::UndefinedSilhouette) throw;
    }
    sel.curve.emplace_back(k, score);
    if (score && (!best_score || *score > *best_score)) {
      best_score = score;
      c.silhouette = score;
      sel.best_k = k;
      sel.clustering = std::move(c);
    }
  }

  if (!best_score) {
    ClusterConfig run = cfg;
    run.seed = derive_seed(cfg.seed, 1);
    sel.best_k = 1;
    sel.clustering = kmeans(points, 1, run);
  }
  return sel;
}

std::vector<std::size_t> continuous_split(std::span<const Segment> segments) {
  std::vector<std::size_t> labels;
  labels.reserve(segments.size());
  for (const auto& s : segments) {
    const bool silent = std::all_of(s.values.begin(), s.values.end(), [](double v) { return v == 0.0; });
    labels.push_back(silent ? 0 : 1);
  }
  return labels;
}

SegmentFeatures featurize(std::span<const double> trace, std::size_t segment_len, std::string_view device) {
  SegmentFeatures out;
  out.segments = segment(trace, segment_len, device);
  if (out.segments.size() < 2) {
    throw Error(ErrorKind::InsufficientData,
                "device '" + std::string(device) + "' yields " + std::to_string(out.segments.size()) +
                    " segment(s) of length " + std::to_string(segment_len) + "; need at least 2");
  }
  out.raw.reserve(out.segments.size());
  for (const auto& s : out.segments) out.raw.push_back(segment_features(s.values));
  out.scaler = fit_scaler(out.raw);
  out.standardized.reserve(out.raw.size());
  for (const auto& f : out.raw) {
    const auto z = out.scaler.apply(f);
    out.standardized.emplace_back(z.begin(), z.end());
  }
  return out;
}

std::string_view to_string(Strategy s) noexcept {
  return s == Strategy::KMeans ? "kmeans" : "continuous_split";
}

std::string SweepReport::to_csv() const {
  std::string out = "device,detected_type,K,silhouette,strategy\n";
  for (const auto& r : rows) {
    out += r.device;
    out += ',';
    out += to_string(r.detected);
    out += ',';
    out += std::to_string(r.k);
    out += ',';
    if (r.silhouette) out += format_value(*r.silhouette);
    out += ',';
    out += to_string(r.strategy);
    out += '\n';
  }
  return out;
}

DeviceSweep sweep_device(const DeviceTrace& trace, const RoutingConfig& routing, const ClusterConfig& cfg,
                         std::size_t segment_len) {
  DeviceSweep out;
  out.row.device = trace.device_id;
  out.row.detected = classify(routing_stats(trace.samples, routing), routing);
  out.features = featurize(trace.samples, segment_len, trace.device_id);
  out.kmeans = select_k(out.features.standardized, cfg);
  out.kmeans.clustering.scaler = out.features.scaler;
  out.kmeans.clustering.segment_len = segment_len;

  const auto split = continuous_split(out.features.segments);
  try {
    out.row.split_silhouette = silhouette(out.features.standardized, split).mean;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::UndefinedSilhouette) throw;
  }

  out.row.strategy = Strategy::KMeans;
  out.row.k = out.kmeans.best_k;
  out.row.silhouette = out.kmeans.clustering.silhouette;
  // The split wins only with a defined score strictly above every k-means run.
  if (out.row.split_silhouette && (!out.row.silhouette || *out.row.split_silhouette > *out.row.silhouette)) {
    out.row.strategy = Strategy::ContinuousSplit;
    out.row.k = 2;
    out.row.silhouette = out.row.split_silhouette;
  }
  return out;
}

SweepReport strategy_sweep(const DeviceTraceSet& traces, const RoutingConfig& routing, const ClusterConfig& cfg,
                           std::size_t segment_len) {
  if (traces.empty()) throw Error(ErrorKind::NoData, "strategy sweep needs at least one device");
  SweepReport report;
  for (const auto& t : traces) report.rows.push_back(sweep_device(t, routing, cfg, segment_len).row);
  return report;
}

}  // namespace cag
