#pragma once

// Independent, deliberately naive reference implementations used to check
// the library. Nothing here calls into cag beyond plain data types.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

inline double mean(const Vec& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double pop_std(const Vec& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size()));
}

/// Centered moving average with a symmetrically shrinking window, then
/// first differences.
inline Vec smoothed_diff(const Vec& x, std::size_t window) {
  const std::size_t n = x.size();
  const std::size_t half = window / 2;
  Vec sm(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t h = std::min({half, t, n - 1 - t});
    double s = 0.0;
    for (std::size_t j = t - h; j <= t + h; ++j) s += x[j];
    sm[t] = s / static_cast<double>(2 * h + 1);
  }
  Vec d(n - 1);
  for (std::size_t t = 1; t < n; ++t) d[t - 1] = sm[t] - sm[t - 1];
  return d;
}

inline double var_with_divisor(const Vec& d, double divisor) {
  const double m = mean(d);
  double s = 0.0;
  for (double v : d) s += (v - m) * (v - m);
  return s / divisor;
}

/// Continuous iff the leading prefix is all zero, or occupancy above rho
/// with smoothed-derivative variance below tau.
inline bool routing_truth(bool r0, double p_nz, double var, double rho, double tau) {
  return r0 || (p_nz > rho && var < tau);
}

inline double sqdist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

/// Mean silhouette from the full pairwise distance matrix.
inline double silhouette(const std::vector<Vec>& pts, const std::vector<std::size_t>& labels, std::size_t k) {
  const std::size_t n = pts.size();
  std::vector<Vec> dist(n, Vec(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) dist[i][j] = std::sqrt(sqdist(pts[i], pts[j]));
  std::vector<std::size_t> size(k, 0);
  for (auto l : labels) ++size[l];
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (size[labels[i]] == 1) continue;
    Vec sum(k, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sum[labels[j]] += dist[i][j];
    const double a = sum[labels[i]] / static_cast<double>(size[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c)
      if (c != labels[i] && size[c] > 0) b = std::min(b, sum[c] / static_cast<double>(size[c]));
    const double m = std::max(a, b);
    total += m > 0.0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(n);
}

inline double rmse(const Vec& a, const Vec& b) { return std::sqrt(sqdist(a, b) / static_cast<double>(a.size())); }

inline double fidelity(const std::vector<Vec>& real, const std::vector<Vec>& gen) {
  double total = 0.0;
  for (const auto& g : gen) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : real) best = std::min(best, rmse(r, g));
    total += best;
  }
  return total / static_cast<double>(gen.size());
}

inline double diversity(const std::vector<Vec>& gen) {
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < gen.size(); ++i)
    for (std::size_t j = 0; j < gen.size(); ++j)
      if (i < j) {
        total += rmse(gen[i], gen[j]);
        ++pairs;
      }
  return total / static_cast<double>(pairs);
}

/// Magnitude spectrum by the textbook O(n^2) DFT with std::complex.
inline Vec dft_magnitudes(const Vec& x) {
  const std::size_t n = x.size();
  Vec mag(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(n));
    mag[k] = std::abs(acc);
  }
  return mag;
}

inline double period(const Vec& x) {
  const auto mag = dft_magnitudes(x);
  std::size_t best = 0;
  double best_mag = 1e-9;
  for (std::size_t k = 1; k < mag.size(); ++k)
    if (mag[k] > best_mag + 1e-9 * mag[k]) {
      best = k;
      best_mag = mag[k];
    }
  return best == 0 ? static_cast<double>(x.size()) : static_cast<double>(x.size()) / static_cast<double>(best);
}

inline double period_mae(const std::vector<Vec>& real, const std::vector<Vec>& gen) {
  double total = 0.0;
  for (const auto& g : gen) {
    const double pg = period(g);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : real) best = std::min(best, std::abs(period(r) - pg));
    total += best;
  }
  return total / static_cast<double>(gen.size());
}

inline double jsd_bits(const Vec& p, const Vec& q) {
  double sp = 0.0, sq = 0.0;
  for (double v : p) sp += v;
  for (double v : q) sq += v;
  double out = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = p[i] / sp, b = q[i] / sq, m = (a + b) / 2.0;
    if (a > 0) out += 0.5 * a * std::log(a / m) / std::log(2.0);
    if (b > 0) out += 0.5 * b * std::log(b / m) / std::log(2.0);
  }
  return out;
}

/// Smallest F with floor(T/F) <= U by linear scan.
inline std::size_t choose_factor_scan(std::size_t T, std::size_t U) {
  for (std::size_t F = 1;; ++F)
    if (T / F <= U) return F;
}

/// Linear-interpolation quantile of the positive samples (sorted copy).
inline double positive_quantile(const Vec& x, double q) {
  Vec p;
  for (double v : x)
    if (v > 0) p.push_back(v);
  std::sort(p.begin(), p.end());
  const double h = q * static_cast<double>(p.size() - 1);
  const double lo = std::floor(h);
  const auto i = static_cast<std::size_t>(lo);
  if (i + 1 >= p.size()) return p.back();
  return p[i] * (1.0 - (h - lo)) + p[i + 1] * (h - lo);
}

}  // namespace oracle
