#include "cag/resample.hpp"

#include <algorithm>

#include "cag/error.hpp"

namespace cag {

void ContinuousConfig::validate() const {
  if (max_surrogate_len < 1) throw Error(ErrorKind::InvalidConfig, "max surrogate length must be >= 1");
  if (window_len < max_surrogate_len)
    throw Error(ErrorKind::InvalidConfig, "window length must be >= max surrogate length");
}

Surrogate downsample(std::span<const double> x, std::size_t factor) {
  if (factor < 1) throw Error(ErrorKind::InvalidConfig, "downsample factor must be >= 1");
  if (x.size() < factor)
    throw Error(ErrorKind::InsufficientData, "series of length " + std::to_string(x.size()) +
                                                 " is shorter than factor " + std::to_string(factor));
  Surrogate s;
  s.factor = factor;
  s.original_len = x.size();
  if (factor == 1) {
    s.values.assign(x.begin(), x.end());
    return s;
  }
  s.values.resize(x.size() / factor);
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    // shifted mean: a constant block comes back exactly
    const double first = x[i * factor];
    double sum = 0.0;
    for (std::size_t j = 1; j < factor; ++j) sum += x[i * factor + j] - first;
    s.values[i] = first + sum / static_cast<double>(factor);
  }
  return s;
}

std::size_t choose_factor(std::size_t length, std::size_t max_len) {
  if (max_len < 1) throw Error(ErrorKind::InvalidConfig, "max surrogate length must be >= 1");
  if (length <= max_len) return 1;
  // floor(T/F) <= U  <=>  T < (U+1)F  <=>  F > T/(U+1)
  return length / (max_len + 1) + 1;
}

std::vector<std::size_t> window_starts(std::size_t len, std::size_t max_len, std::size_t window,
                                       std::size_t stride) {
  if (stride < 1) throw Error(ErrorKind::InvalidConfig, "window stride must be >= 1");
  if (len <= max_len || len <= window) return {0};
  std::vector<std::size_t> starts;
  std::size_t s = 0;
  for (; s + window < len; s += stride) starts.push_back(s);
  const std::size_t last = len - window;
  if (starts.empty() || starts.back() != last) starts.push_back(last);
  return starts;
}

std::vector<std::vector<double>> make_windows(std::span<const double> x, std::size_t max_len, std::size_t window,
                                              std::size_t stride) {
  std::vector<std::vector<double>> out;
  const auto starts = window_starts(x.size(), max_len, window, stride);
  const std::size_t w = std::min(window, x.size());
  for (std::size_t s : starts) {
    if (starts.size() == 1) {
      out.emplace_back(x.begin(), x.end());
    } else {
      out.emplace_back(x.begin() + static_cast<std::ptrdiff_t>(s), x.begin() + static_cast<std::ptrdiff_t>(s + w));
    }
  }
  return out;
}

std::vector<double> stitch_windows(const std::vector<std::vector<double>>& windows,
                                   std::span<const std::size_t> starts, std::size_t len) {
  if (windows.size() != starts.size()) throw Error(ErrorKind::Shape, "window and start counts differ");
  std::vector<double> sum(len, 0.0);
  std::vector<std::size_t> count(len, 0);
  for (std::size_t k = 0; k < windows.size(); ++k) {
    for (std::size_t i = 0; i < windows[k].size() && starts[k] + i < len; ++i) {
      sum[starts[k] + i] += windows[k][i];
      ++count[starts[k] + i];
    }
  }
  for (std::size_t i = 0; i < len; ++i) {
    if (count[i] == 0) throw Error(ErrorKind::Shape, "windows leave sample " + std::to_string(i) + " uncovered");
    sum[i] /= static_cast<double>(count[i]);
  }
  return sum;
}

std::vector<double> reconstruct(std::span<const double> y, std::size_t factor, std::size_t length) {
  if (y.empty()) throw Error(ErrorKind::InsufficientData, "nothing to reconstruct");
  if (factor < 1) throw Error(ErrorKind::InvalidConfig, "reconstruction factor must be >= 1");
  std::vector<double> out;
  out.reserve(length);
  for (std::size_t i = 0; i < y.size() && out.size() < length; ++i)
    for (std::size_t j = 0; j < factor && out.size() < length; ++j) out.push_back(y[i]);
  out.resize(length, y.back());
  return out;
}

}  // namespace cag
