#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cag {

/// One appliance's power series in watts, uniformly sampled.
struct DeviceTrace {
  std::string device_id;
  std::vector<double> samples;

  std::size_t length() const noexcept { return samples.size(); }
};

/// Ordered collection of traces keyed by unique device id. Order follows the
/// source column order.
class DeviceTraceSet {
 public:
  DeviceTraceSet() = default;

  /// Throws ErrorKind::Format on a duplicate id, an empty trace or a
  /// non-finite sample.
  void add(DeviceTrace trace);

  const DeviceTrace* find(std::string_view device_id) const noexcept;
  const std::vector<DeviceTrace>& traces() const noexcept { return traces_; }
  std::size_t size() const noexcept { return traces_.size(); }
  bool empty() const noexcept { return traces_.empty(); }

  auto begin() const noexcept { return traces_.begin(); }
  auto end() const noexcept { return traces_.end(); }

 private:
  std::vector<DeviceTrace> traces_;
};

enum class MissingPolicy {
  Zero,          // every blank cell becomes 0.0
  DropTrailing,  // trailing blanks are removed, interior blanks become 0.0
};

DeviceTraceSet parse_csv(std::string_view text, MissingPolicy policy = MissingPolicy::Zero);
DeviceTraceSet load_csv(const std::filesystem::path& path,
                        MissingPolicy policy = MissingPolicy::Zero);

/// Cells are written as plain decimals with up to 9 significant digits.
/// Shorter traces leave trailing cells blank.
std::string to_csv(const DeviceTraceSet& set);
void write_csv(const std::filesystem::path& path, const DeviceTraceSet& set);

/// Formats one value the way the CSV writer does.
std::string format_value(double value);

enum class FixtureKind { Constant, SquareWave, Spiky, NoisySine, IntermittentBursts };

std::string_view to_string(FixtureKind kind) noexcept;
FixtureKind fixture_kind_from_string(std::string_view name);

/// Deterministic synthetic trace description. Only the parameters relevant to
/// `kind` are read.
struct FixtureSpec {
  FixtureKind kind = FixtureKind::Constant;
  std::size_t length = 1000;
  std::uint64_t seed = 1;
  std::string device_id = "fixture";

  double level = 50.0;  // constant level; spiky baseline; sine offset

  double low = 0.0;  // square wave levels
  double high = 100.0;
  std::size_t half_period = 25;

  double spike_height = 800.0;  // spiky: peak heights drawn in [h, 1.5h]
  std::size_t min_gap = 64;     // spiky: minimum spacing between planted peaks
  double mean_extra_gap = 100;  // spiky: exponential extra spacing

  double amplitude = 40.0;  // noisy sine
  double period = 200.0;
  double noise_std = 2.0;

  double burst_power = 1200.0;  // intermittent bursts
  std::size_t burst_length = 20;
  double mean_idle = 150.0;  // idle samples between bursts, always >= 3 * burst_length
};

struct Fixture {
  DeviceTrace trace;
  /// Planted event positions: spike peaks for Spiky, burst starts for
  /// IntermittentBursts, empty otherwise.
  std::vector<std::size_t> events;
};

Fixture make_fixture_with_truth(const FixtureSpec& spec);
DeviceTrace make_fixture(const FixtureSpec& spec);

}  // namespace cag
