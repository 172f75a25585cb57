#include "cag/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <unordered_set>

#include "cag/error.hpp"
#include "fs_util.hpp"

namespace cag {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  // The terminator after the final row does not start a new row.
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

struct Cell {
  bool blank = true;
  double value = 0.0;
};

Cell parse_cell(std::string_view raw, std::size_t line_no, std::size_t column) {
  const auto cell = trim(raw);
  if (cell.empty()) return {};
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw Error(ErrorKind::Parse, "malformed numeric cell '" + std::string(cell) + "' at row " +
                                      std::to_string(line_no) + ", column " +
                                      std::to_string(column));
  }
  return {false, value};
}

}  // namespace

void DeviceTraceSet::add(DeviceTrace trace) {
  if (trace.device_id.empty()) throw Error(ErrorKind::Format, "empty device id");
  if (trace.samples.empty())
    throw Error(ErrorKind::Format, "device '" + trace.device_id + "' has no samples");
  if (find(trace.device_id) != nullptr)
    throw Error(ErrorKind::Format, "duplicate device name '" + trace.device_id + "'");
  for (double v : trace.samples) {
    if (!std::isfinite(v))
      throw Error(ErrorKind::Format, "non-finite sample in device '" + trace.device_id + "'");
  }
  traces_.push_back(std::move(trace));
}

const DeviceTrace* DeviceTraceSet::find(std::string_view device_id) const noexcept {
  for (const auto& t : traces_) {
    if (t.device_id == device_id) return &t;
  }
  return nullptr;
}

DeviceTraceSet parse_csv(std::string_view text, MissingPolicy policy) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  const auto lines = split_lines(text);
  if (lines.empty() || trim(lines.front()).empty())
    throw Error(ErrorKind::Format, "empty header row");

  std::vector<std::string> names;
  std::unordered_set<std::string> seen;
  for (auto raw : split_cells(lines.front())) {
    std::string name(trim(raw));
    if (name.empty()) throw Error(ErrorKind::Format, "empty device name in header");
    if (!seen.insert(name).second)
      throw Error(ErrorKind::Format, "duplicate device name '" + name + "'");
    names.push_back(std::move(name));
  }
  if (lines.size() < 2) throw Error(ErrorKind::Format, "no data rows after header");

  std::vector<std::vector<Cell>> columns(names.size());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_cells(lines[i]);
    if (cells.size() > names.size()) {
      throw Error(ErrorKind::Format, "row " + std::to_string(i + 1) + " has " +
                                         std::to_string(cells.size()) + " cells, header has " +
                                         std::to_string(names.size()));
    }
    for (std::size_t c = 0; c < names.size(); ++c) {
      columns[c].push_back(c < cells.size() ? parse_cell(cells[c], i + 1, c + 1) : Cell{});
    }
  }

  DeviceTraceSet set;
  for (std::size_t c = 0; c < names.size(); ++c) {
    auto& col = columns[c];
    std::size_t keep = col.size();
    if (policy == MissingPolicy::DropTrailing) {
      while (keep > 0 && col[keep - 1].blank) --keep;
    }
    DeviceTrace trace{names[c], {}};
    trace.samples.reserve(keep);
    for (std::size_t r = 0; r < keep; ++r) trace.samples.push_back(col[r].blank ? 0.0 : col[r].value);
    set.add(std::move(trace));
  }
  return set;
}

DeviceTraceSet load_csv(const std::filesystem::path& path, MissingPolicy policy) {
  return parse_csv(detail::read_file(path), policy);
}

std::string format_value(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

std::string to_csv(const DeviceTraceSet& set) {
  std::string out;
  std::size_t rows = 0;
  for (std::size_t c = 0; c < set.size(); ++c) {
    if (c) out += ',';
    out += set.traces()[c].device_id;
    rows = std::max(rows, set.traces()[c].length());
  }
  out += '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < set.size(); ++c) {
      if (c) out += ',';
      const auto& s = set.traces()[c].samples;
      if (r < s.size()) out += format_value(s[r]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const DeviceTraceSet& set) {
  detail::write_file_atomic(path, to_csv(set));
}

std::string_view to_string(FixtureKind kind) noexcept {
  switch (kind) {
    case FixtureKind::Constant: return "constant";
    case FixtureKind::SquareWave: return "square_wave";
    case FixtureKind::Spiky: return "spiky";
    case FixtureKind::NoisySine: return "noisy_sine";
    case FixtureKind::IntermittentBursts: return "intermittent_bursts";
  }
  return "constant";
}

FixtureKind fixture_kind_from_string(std::string_view name) {
  for (auto k : {FixtureKind::Constant, FixtureKind::SquareWave, FixtureKind::Spiky,
                 FixtureKind::NoisySine, FixtureKind::IntermittentBursts}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorKind::InvalidConfig, "unknown fixture kind '" + std::string(name) + "'");
}

Fixture make_fixture_with_truth(const FixtureSpec& spec) {
  if (spec.length < 1) throw Error(ErrorKind::InvalidConfig, "fixture length must be >= 1");
  const std::size_t n = spec.length;
  std::mt19937_64 rng(spec.seed);
  Fixture fx;
  fx.trace.device_id = spec.device_id;
  auto& x = fx.trace.samples;
  x.assign(n, 0.0);

  switch (spec.kind) {
    case FixtureKind::Constant:
      std::fill(x.begin(), x.end(), spec.level);
      break;

    case FixtureKind::SquareWave: {
      if (spec.half_period < 1) throw Error(ErrorKind::InvalidConfig, "half_period must be >= 1");
      for (std::size_t t = 0; t < n; ++t) x[t] = ((t / spec.half_period) % 2 == 0) ? spec.low : spec.high;
      break;
    }

    case FixtureKind::Spiky: {
      // Constant baseline with triangular spikes; inter-peak spacing is
      // min_gap plus an exponential draw, so planted peaks never merge.
      std::fill(x.begin(), x.end(), spec.level);
      std::exponential_distribution<double> extra(1.0 / std::max(spec.mean_extra_gap, 1e-9));
      std::uniform_real_distribution<double> height(spec.spike_height, 1.5 * spec.spike_height);
      std::size_t pos = spec.min_gap / 2 + static_cast<std::size_t>(std::llround(extra(rng)));
      while (pos >= 3 && pos + 3 < n) {
        const double h = height(rng);
        x[pos] = spec.level + h;
        x[pos - 1] = x[pos + 1] = spec.level + 0.5 * h;
        x[pos - 2] = x[pos + 2] = spec.level + 0.2 * h;
        fx.events.push_back(pos);
        pos += std::max<std::size_t>(spec.min_gap, 5) + static_cast<std::size_t>(std::llround(extra(rng)));
      }
      break;
    }

    case FixtureKind::NoisySine: {
      std::normal_distribution<double> noise(0.0, spec.noise_std);
      for (std::size_t t = 0; t < n; ++t) {
        x[t] = spec.level +
               spec.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / spec.period) +
               (spec.noise_std > 0 ? noise(rng) : 0.0);
      }
      break;
    }

    case FixtureKind::IntermittentBursts: {
      const std::size_t burst = std::max<std::size_t>(spec.burst_length, 1);
      const double min_idle = 3.0 * static_cast<double>(burst);
      std::exponential_distribution<double> idle(1.0 / std::max(spec.mean_idle, 1.0));
      std::uniform_real_distribution<double> jitter(0.9, 1.1);
      std::size_t pos = static_cast<std::size_t>(std::llround(std::max(min_idle, idle(rng))));
      while (pos < n) {
        fx.events.push_back(pos);
        const double power = spec.burst_power * jitter(rng);
        for (std::size_t t = pos; t < std::min(n, pos + burst); ++t) x[t] = power * jitter(rng);
        pos += burst + static_cast<std::size_t>(std::llround(std::max(min_idle, idle(rng))));
      }
      break;
    }
  }
  return fx;
}

DeviceTrace make_fixture(const FixtureSpec& spec) { return make_fixture_with_truth(spec).trace; }

}  // namespace cag
