#include "cag/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "cag/error.hpp"
#include "cag/features.hpp"
#include "cag/trace.hpp"
#include "json.hpp"

namespace cag {

namespace {

void require_nonempty(const SeriesSet& s, const char* what) {
  std::size_t n = 0;
  for (const auto& x : s) n += x.size();
  if (n == 0) throw Error(ErrorKind::NoData, std::string(what) + " set is empty");
}

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

Moments pooled(const SeriesSet& s) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& x : s) {
    for (double v : x) sum += v;
    n += x.size();
  }
  const double m = sum / static_cast<double>(n);
  double var = 0.0;
  for (const auto& x : s)
    for (double v : x) var += (v - m) * (v - m);
  return {m, std::sqrt(var / static_cast<double>(n))};
}

double rmse(const Series& a, const Series& b) {
  if (a.size() != b.size())
    throw Error(ErrorKind::Shape, "sequence lengths differ (" + std::to_string(a.size()) + " vs " +
                                      std::to_string(b.size()) + ")");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& m) {
  const auto d = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd out(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) out(i, j) = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return out;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

PointSet embed(const SeriesSet& s) {
  PointSet out;
  out.reserve(s.size());
  for (const auto& x : s) {
    const auto f = segment_features(x);
    out.emplace_back(f.begin(), f.end());
  }
  return out;
}

SeriesSet segment_values(std::span<const double> x, std::size_t len) {
  SeriesSet out;
  for (auto& s : segment(x, len)) out.push_back(std::move(s.values));
  return out;
}

}  // namespace

double mean_error(const SeriesSet& real, const SeriesSet& gen) {
  require_nonempty(real, "real");
  require_nonempty(gen, "generated");
  return std::abs(pooled(gen).mean - pooled(real).mean);
}

double std_error(const SeriesSet& real, const SeriesSet& gen) {
  require_nonempty(real, "real");
  require_nonempty(gen, "generated");
  return std::abs(pooled(gen).std - pooled(real).std);
}

double fidelity_rmse(const SeriesSet& real, const SeriesSet& gen) {
  if (real.empty() || gen.empty()) throw Error(ErrorKind::NoData, "fidelity needs real and generated sequences");
  double total = 0.0;
  for (const auto& g : gen) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : real) best = std::min(best, rmse(r, g));
    total += best;
  }
  return total / static_cast<double>(gen.size());
}

double dominant_period(std::span<const double> x) {
  if (x.size() < 4) throw Error(ErrorKind::InsufficientData, "dominant period needs at least 4 samples");
  const auto bin = dominant_frequency_bin(x);
  const auto n = static_cast<double>(x.size());
  return bin == 0 ? n : n / static_cast<double>(bin);
}

double period_mae(const SeriesSet& real, const SeriesSet& gen) {
  if (real.empty() || gen.empty()) throw Error(ErrorKind::NoData, "period MAE needs real and generated sequences");
  std::vector<double> rp;
  rp.reserve(real.size());
  for (const auto& r : real) rp.push_back(dominant_period(r));
  double total = 0.0;
  for (const auto& g : gen) {
    const double pg = dominant_period(g);
    std::size_t best = 0;
    for (std::size_t i = 1; i < rp.size(); ++i)
      if (std::abs(rp[i] - pg) < std::abs(rp[best] - pg)) best = i;
    total += std::abs(pg - rp[best]);
  }
  return total / static_cast<double>(gen.size());
}

FidStats fid_stats(const PointSet& embeddings) {
  if (embeddings.size() < 2)
    throw Error(ErrorKind::CovarianceUndefined,
                "covariance needs at least 2 sequences, got " + std::to_string(embeddings.size()));
  const std::size_t d = embeddings.front().size();
  for (const auto& e : embeddings)
    if (e.size() != d) throw Error(ErrorKind::Dimension, "embeddings have mixed dimensions");
  FidStats s;
  s.mean.assign(d, 0.0);
  for (const auto& e : embeddings)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += e[j];
  for (auto& m : s.mean) m /= static_cast<double>(embeddings.size());
  s.cov.assign(d, std::vector<double>(d, 0.0));
  for (const auto& e : embeddings)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) s.cov[i][j] += (e[i] - s.mean[i]) * (e[j] - s.mean[j]);
  const auto denom = static_cast<double>(embeddings.size() - 1);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) s.cov[j][i] = s.cov[i][j] /= denom;
  return s;
}

double frechet_distance(const FidStats& a, const FidStats& b) {
  if (a.mean.size() != b.mean.size()) throw Error(ErrorKind::Dimension, "embedding dimensions differ");
  double mean_term = 0.0;
  for (std::size_t i = 0; i < a.mean.size(); ++i) mean_term += (a.mean[i] - b.mean[i]) * (a.mean[i] - b.mean[i]);
  const Eigen::MatrixXd ca = to_matrix(a.cov);
  const Eigen::MatrixXd cb = to_matrix(b.cov);
  const Eigen::MatrixXd ra = psd_sqrt(ca);
  const Eigen::MatrixXd inner = ra * cb * ra;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  const double cross = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::max(0.0, mean_term + ca.trace() + cb.trace() - 2.0 * cross);
}

double feature_fid(const SeriesSet& real, const SeriesSet& gen) {
  if (real.size() < 2 || gen.size() < 2)
    throw Error(ErrorKind::CovarianceUndefined, "feature FID needs at least 2 sequences per set");
  return frechet_distance(fid_stats(embed(real)), fid_stats(embed(gen)));
}

DiversityResult diversity_rmse(const SeriesSet& gen, std::size_t cap, std::uint64_t seed) {
  if (gen.size() < 2) throw Error(ErrorKind::NoPairs, "diversity needs at least 2 sequences");
  if (cap < 2) throw Error(ErrorKind::InvalidConfig, "diversity cap must be >= 2");
  std::vector<std::size_t> idx(gen.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  DiversityResult r;
  if (gen.size() > cap) {
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    r.subsampled = true;
  }
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = i + 1; j < idx.size(); ++j, ++pairs) total += rmse(gen[idx[i]], gen[idx[j]]);
  r.value = total / static_cast<double>(pairs);
  return r;
}

std::vector<std::size_t> assign_to_clusters(const SeriesSet& sequences, const Clustering& clustering) {
  if (!clustering.scaler || clustering.segment_len == 0)
    throw Error(ErrorKind::State, "clustering carries no feature scaler");
  std::vector<std::size_t> hist(clustering.k, 0);
  for (const auto& seq : sequences) {
    for (const auto& seg : segment(seq, clustering.segment_len)) {
      const auto z = clustering.scaler->apply(segment_features(seg.values));
      ++hist[clustering.nearest(z)];
    }
  }
  return hist;
}

double cluster_coverage(std::span<const std::size_t> gen_hist) {
  if (gen_hist.empty()) throw Error(ErrorKind::NoData, "empty cluster histogram");
  const auto hit = std::count_if(gen_hist.begin(), gen_hist.end(), [](std::size_t n) { return n > 0; });
  return static_cast<double>(hit) / static_cast<double>(gen_hist.size());
}

double cluster_coverage(std::span<const std::size_t> gen_hist, std::span<const std::size_t> real_hist) {
  if (gen_hist.size() != real_hist.size()) throw Error(ErrorKind::Dimension, "histogram sizes differ");
  std::size_t occupied = 0, hit = 0;
  for (std::size_t k = 0; k < real_hist.size(); ++k) {
    if (real_hist[k] == 0) continue;
    ++occupied;
    if (gen_hist[k] > 0) ++hit;
  }
  if (occupied == 0) throw Error(ErrorKind::NoData, "real histogram is empty");
  return static_cast<double>(hit) / static_cast<double>(occupied);
}

double cluster_js(std::span<const std::size_t> real_hist, std::span<const std::size_t> gen_hist) {
  if (real_hist.size() != gen_hist.size()) throw Error(ErrorKind::Dimension, "histogram sizes differ");
  const double sr = static_cast<double>(std::accumulate(real_hist.begin(), real_hist.end(), std::size_t{0}));
  const double sg = static_cast<double>(std::accumulate(gen_hist.begin(), gen_hist.end(), std::size_t{0}));
  if (sr == 0.0 || sg == 0.0) throw Error(ErrorKind::NoData, "histogram has zero total");
  double js = 0.0;
  for (std::size_t k = 0; k < real_hist.size(); ++k) {
    const double p = static_cast<double>(real_hist[k]) / sr;
    const double q = static_cast<double>(gen_hist[k]) / sg;
    const double m = 0.5 * (p + q);
    if (p > 0.0) js += 0.5 * p * std::log2(p / m);
    if (q > 0.0) js += 0.5 * q * std::log2(q / m);
  }
  return std::clamp(js, 0.0, 1.0);
}

MetricsReport evaluate_all(std::span<const double> real, std::span<const double> gen, const Clustering& clustering,
                           const EvalConfig& cfg) {
  if (clustering.segment_len == 0) throw Error(ErrorKind::State, "clustering has no segment length");
  const auto rs = segment_values(real, clustering.segment_len);
  const auto gs = segment_values(gen, clustering.segment_len);
  if (rs.empty() || gs.empty())
    throw Error(ErrorKind::NoData, "traces are shorter than one segment of length " +
                                       std::to_string(clustering.segment_len));
  MetricsReport r;
  r.real_segments = rs.size();
  r.gen_segments = gs.size();
  r.me = mean_error(rs, gs);
  r.std_err = std_error(rs, gs);
  r.fid_rmse = fidelity_rmse(rs, gs);
  r.period_mae = period_mae(rs, gs);
  r.feature_fid = feature_fid(rs, gs);
  const auto div = diversity_rmse(gs, cfg.diversity_cap, cfg.seed);
  r.div_rmse = div.value;
  r.div_subsampled = div.subsampled;
  r.real_histogram = assign_to_clusters(rs, clustering);
  r.gen_histogram = assign_to_clusters(gs, clustering);
  r.cluster_coverage = cluster_coverage(r.gen_histogram, r.real_histogram);
  r.cluster_js = cluster_js(r.real_histogram, r.gen_histogram);
  return r;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j{
      {"schema_version", 1},
      {"ME", me},
      {"Std", std_err},
      {"Fid", fid_rmse},
      {"Per", period_mae},
      {"FeatureFID", feature_fid},
      {"Div", div_rmse},
      {"CC", cluster_coverage},
      {"CJ", cluster_js},
      {"div_subsampled", div_subsampled},
      {"real_segments", real_segments},
      {"gen_segments", gen_segments},
      {"real_histogram", real_histogram},
      {"gen_histogram", gen_histogram},
      {"notes", "CJ is the raw Jensen-Shannon divergence in bits; lower means closer cluster occupancy"},
  };
  return j.dump(2) + '\n';
}

MetricsReport metrics_report_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MetricsReport r;
    r.me = j.at("ME").get<double>();
    r.std_err = j.at("Std").get<double>();
    r.fid_rmse = j.at("Fid").get<double>();
    r.period_mae = j.at("Per").get<double>();
    r.feature_fid = j.at("FeatureFID").get<double>();
    r.div_rmse = j.at("Div").get<double>();
    r.cluster_coverage = j.at("CC").get<double>();
    r.cluster_js = j.at("CJ").get<double>();
    r.div_subsampled = j.value("div_subsampled", false);
    r.real_segments = j.value("real_segments", std::size_t{0});
    r.gen_segments = j.value("gen_segments", std::size_t{0});
    r.real_histogram = j.value("real_histogram", std::vector<std::size_t>{});
    r.gen_histogram = j.value("gen_histogram", std::vector<std::size_t>{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, std::string("malformed metrics report: ") + e.what());
  }
}

std::string metrics_csv_row(const std::string& label, const MetricsReport& r) {
  std::string out = label;
  for (double v : {r.me, r.std_err, r.fid_rmse, r.period_mae, r.feature_fid, r.div_rmse, r.cluster_coverage,
                   r.cluster_js})
    out += ',' + format_value(v);
  return out;
}

MetricsReport average_reports(std::span<const MetricsReport> reports) {
  MetricsReport avg;
  if (reports.empty()) return avg;
  for (const auto& r : reports) {
    avg.me += r.me;
    avg.std_err += r.std_err;
    avg.fid_rmse += r.fid_rmse;
    avg.period_mae += r.period_mae;
    avg.feature_fid += r.feature_fid;
    avg.div_rmse += r.div_rmse;
    avg.cluster_coverage += r.cluster_coverage;
    avg.cluster_js += r.cluster_js;
  }
  const auto n = static_cast<double>(reports.size());
  for (double* v : {&avg.me, &avg.std_err, &avg.fid_rmse, &avg.period_mae, &avg.feature_fid, &avg.div_rmse,
                    &avg.cluster_coverage, &avg.cluster_js})
    *v /= n;
  return avg;
}

}  // namespace cag
