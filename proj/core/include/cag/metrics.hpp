#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cag/cluster.hpp"
#include "cag/gan.hpp"

namespace cag {

/// Column order follows the aggregate CSV: ME, Std, Fid, Per, Feature FID,
/// Div, CC, CJ.
struct MetricsReport {
  double me = 0.0;
  double std_err = 0.0;
  double fid_rmse = 0.0;
  double period_mae = 0.0;
  double feature_fid = 0.0;
  double div_rmse = 0.0;
  double cluster_coverage = 0.0;
  double cluster_js = 0.0;

  bool div_subsampled = false;
  std::size_t real_segments = 0;
  std::size_t gen_segments = 0;
  std::vector<std::size_t> real_histogram;
  std::vector<std::size_t> gen_histogram;

  std::string to_json() const;
};

MetricsReport metrics_report_from_json(const std::string& text);

inline constexpr const char* kMetricsCsvHeader = "device,ME,Std,Fid,Per,FeatureFID,Div,CC,CJ";
std::string metrics_csv_row(const std::string& label, const MetricsReport& r);
/// Column-wise mean of the eight metric values.
MetricsReport average_reports(std::span<const MetricsReport> reports);

double mean_error(const SeriesSet& real, const SeriesSet& gen);
double std_error(const SeriesSet& real, const SeriesSet& gen);

/// Mean over generated sequences of the RMSE to the nearest real sequence.
double fidelity_rmse(const SeriesSet& real, const SeriesSet& gen);

/// len / dominant DFT bin, or len when the series has no oscillation.
double dominant_period(std::span<const double> x);
/// Each generated sequence is matched to the real sequence with the nearest
/// dominant period (earliest on ties).
double period_mae(const SeriesSet& real, const SeriesSet& gen);

/// Gaussian fit of a set of embeddings: mean and unbiased covariance.
struct FidStats {
  std::vector<double> mean;
  std::vector<std::vector<double>> cov;
};

FidStats fid_stats(const PointSet& embeddings);
/// ||m_a - m_b||^2 + Tr(C_a + C_b - 2 (C_a^1/2 C_b C_a^1/2)^1/2), with
/// negative eigenvalues clamped to 0 in both square roots.
double frechet_distance(const FidStats& a, const FidStats& b);
/// Frechet distance between the segment-feature embeddings of two sets.
double feature_fid(const SeriesSet& real, const SeriesSet& gen);

struct DiversityResult {
  double value = 0.0;
  bool subsampled = false;
};

/// Mean pairwise RMSE. Sets larger than `cap` are reduced to a seeded
/// uniform subsample of `cap` sequences.
DiversityResult diversity_rmse(const SeriesSet& gen, std::size_t cap = 200, std::uint64_t seed = 0);

/// Splits every sequence into segments of the clustering's length, embeds them
/// with its scaler and counts the nearest centroid of each.
std::vector<std::size_t> assign_to_clusters(const SeriesSet& sequences, const Clustering& clustering);

/// Fraction of clusters that received at least one sample.
double cluster_coverage(std::span<const std::size_t> gen_hist);
/// Same, counted only over clusters that the real data occupies.
double cluster_coverage(std::span<const std::size_t> gen_hist, std::span<const std::size_t> real_hist);
/// Jensen-Shannon divergence in bits between the normalized histograms.
double cluster_js(std::span<const std::size_t> real_hist, std::span<const std::size_t> gen_hist);

struct EvalConfig {
  std::size_t diversity_cap = 200;
  std::uint64_t seed = 0;
};

/// Segments both traces with the clustering's segment length and computes
/// every metric on the resulting segment sets.
MetricsReport evaluate_all(std::span<const double> real, std::span<const double> gen, const Clustering& clustering,
                           const EvalConfig& cfg = {});

}  // namespace cag
