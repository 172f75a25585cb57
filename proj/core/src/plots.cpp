#include "cag/plots.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

#include "cag/error.hpp"
#include "cag/trace.hpp"
#include "fs_util.hpp"

namespace cag {

namespace fs = std::filesystem;

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 360.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 40.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string line_chart_svg(std::string_view title, std::span<const SvgSeries> series, std::size_t max_points) {
  max_points = std::max<std::size_t>(max_points, 2);
  std::size_t n_max = 0;
  double lo = std::numeric_limits<double>::infinity(), hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : series) {
    n_max = std::max(n_max, s.values.size());
    for (double v : s.values) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  const double x_span = n_max > 1 ? static_cast<double>(n_max - 1) : 1.0;
  auto px = [&](double i) { return kLeft + pw * i / x_span; };
  auto py = [&](double v) { return kTop + ph * (hi - v) / (hi - lo); };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" viewBox=\"0 0 " + num(kWidth) + ' ' + num(kHeight) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">" + escape(title) + "</text>\n";
  out += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
         "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    out += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(v) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + tick(v) + "</text>\n";
    const double i = x_span * t / 4.0;
    out += "<text x=\"" + num(px(i)) + "\" y=\"" + num(kHeight - kBottom + 14) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + tick(std::round(i)) +
           "</text>\n";
  }

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const std::size_t n = s.values.size();
    const std::size_t stride = n > max_points ? (n + max_points - 1) / max_points : 1;
    out += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.2\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < n; i += stride) {
      if (!std::isfinite(s.values[i])) continue;
      if (!first) out += ' ';
      out += num(px(static_cast<double>(i))) + ',' + num(py(s.values[i]));
      first = false;
    }
    out += "\"/>\n";
    const double ly = kTop + 14.0 + 14.0 * static_cast<double>(k);
    out += "<line x1=\"" + num(kWidth - kRight - 120) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" +
           num(kWidth - kRight - 100) + "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + s.color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + num(kWidth - kRight - 94) + "\" y=\"" + num(ly) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(s.label) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string loss_curve_svg(std::string_view title, const std::vector<EpochLoss>& history) {
  std::vector<SvgSeries> s(2);
  s[0] = {"discriminator", {}, "#1f77b4"};
  s[1] = {"generator", {}, "#ff7f0e"};
  for (const auto& e : history) {
    s[0].values.push_back(e.discriminator);
    s[1].values.push_back(e.generator);
  }
  return line_chart_svg(title, s);
}

std::string comparison_svg(std::string_view title, std::span<const double> real, std::span<const double> gen) {
  const std::vector<SvgSeries> s{
      {"real", {real.begin(), real.end()}, "#2ca02c"},
      {"generated", {gen.begin(), gen.end()}, "#d62728"},
  };
  return line_chart_svg(title, s);
}

std::vector<EpochLoss> parse_loss_csv(std::string_view text) {
  std::vector<EpochLoss> out;
  bool header = true;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    double vals[3];
    for (double& v : vals) {
      const auto comma = line.find(',');
      const auto cell = line.substr(0, comma);
      const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || p != cell.data() + cell.size())
        throw Error(ErrorKind::Parse, "loss CSV line " + std::to_string(line_no) + ": bad value '" +
                                          std::string(cell) + "'");
      line.remove_prefix(comma == std::string_view::npos ? line.size() : comma + 1);
    }
    out.push_back({vals[1], vals[2]});
  }
  return out;
}

PlotOutcome emit_device_plots(const fs::path& device_dir) {
  PlotOutcome out;
  const auto losses = device_dir / "losses";
  std::vector<fs::path> csvs;
  if (fs::is_directory(losses)) {
    for (const auto& e : fs::directory_iterator(losses))
      if (e.path().extension() == ".csv") csvs.push_back(e.path());
  }
  std::sort(csvs.begin(), csvs.end());
  for (const auto& csv : csvs) {
    const auto history = parse_loss_csv(detail::read_file(csv));
    if (history.empty()) {
      out.warnings.push_back("skipping empty loss CSV " + csv.string());
      continue;
    }
    const auto rel = fs::path("plots") / ("loss_" + csv.stem().string() + ".svg");
    detail::write_file_atomic(device_dir / rel, loss_curve_svg("losses: " + csv.stem().string(), history));
    out.written.push_back(rel);
  }

  const auto real_csv = device_dir / "real.csv";
  const auto gen_csv = device_dir / "generated.csv";
  if (fs::exists(real_csv) && fs::exists(gen_csv)) {
    const auto real = load_csv(real_csv, MissingPolicy::DropTrailing);
    const auto gen = load_csv(gen_csv, MissingPolicy::DropTrailing);
    if (!real.empty() && !gen.empty()) {
      const auto& r = real.traces().front();
      const auto rel = fs::path("plots") / "comparison.svg";
      detail::write_file_atomic(device_dir / rel,
                                comparison_svg(r.device_id + ": real vs generated", r.samples,
                                               gen.traces().front().samples));
      out.written.push_back(rel);
    }
  } else {
    out.warnings.push_back("no real/generated pair in " + device_dir.string());
  }
  return out;
}

PlotOutcome emit_plots(const fs::path& run_dir) {
  PlotOutcome out;
  const auto devices = run_dir / "devices";
  if (!fs::is_directory(devices)) throw Error(ErrorKind::Io, "'" + run_dir.string() + "' has no devices directory");
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(devices))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    auto r = emit_device_plots(d);
    for (auto& p : r.written) out.written.push_back(fs::path("devices") / d.filename() / p);
    for (auto& w : r.warnings) out.warnings.push_back(std::move(w));
  }
  return out;
}

}  // namespace cag
