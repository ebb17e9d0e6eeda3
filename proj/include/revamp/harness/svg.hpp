#ifndef REVAMP_HARNESS_SVG_HPP
#define REVAMP_HARNESS_SVG_HPP

// Minimal line chart of NMSE (dB) against SNR (dB), one polyline per series.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace revamp::harness {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points; ///< (snr_db, nmse_db); non-finite y values are skipped
};

inline void write_nmse_svg(const std::vector<Series> &series, std::ostream &os) {
  constexpr double width = 720, height = 480;
  constexpr double left = 70, right = 190, top = 30, bottom = 55;
  constexpr std::array<const char *, 10> palette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const Series &s : series) {
    for (const auto &[x, y] : s.points) {
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      if (std::isfinite(y)) {
        y_lo = std::min(y_lo, y);
        y_hi = std::max(y_hi, y);
      }
    }
  }
  if (!std::isfinite(x_lo)) {
    x_lo = 0;
    x_hi = 1;
  }
  if (!std::isfinite(y_lo)) {
    y_lo = -1;
    y_hi = 0;
  }
  if (x_hi == x_lo) {
    x_hi = x_lo + 1;
  }
  y_lo = 10.0 * std::floor(y_lo / 10.0);
  y_hi = 10.0 * std::ceil(y_hi / 10.0);
  if (y_hi == y_lo) {
    y_hi = y_lo + 10;
  }

  const double pw = width - left - right;
  const double ph = height - top - bottom;
  auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return top + (y_hi - y) / (y_hi - y_lo) * ph; };

  std::ostringstream o;
  o << std::fixed << std::setprecision(2);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  const double y_step = (y_hi - y_lo) > 100 ? 20.0 : 10.0;
  for (double y = y_lo; y <= y_hi + 1e-9; y += y_step) {
    o << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << py(y) << "\" y2=\"" << py(y)
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << std::setprecision(0)
      << y << std::setprecision(2) << "</text>\n";
  }
  std::vector<double> xs;
  for (const Series &s : series) {
    for (const auto &p : s.points) {
      xs.push_back(p.first);
    }
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  for (double x : xs) {
    o << "<text x=\"" << px(x) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
      << std::setprecision(0) << x << std::setprecision(2) << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">SNR (dB)</text>\n";
  o << "<text transform=\"translate(18," << top + ph / 2
    << ") rotate(-90)\" text-anchor=\"middle\">NMSE (dB)</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char *colour = palette[i % palette.size()];
    o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.8\" points=\"";
    bool first = true;
    for (const auto &[x, y] : series[i].points) {
      if (!std::isfinite(y)) {
        continue;
      }
      o << (first ? "" : " ") << px(x) << ',' << py(y);
      first = false;
    }
    o << "\"/>\n";
    const double ly = top + 14 + 18 * static_cast<double>(i);
    o << "<line x1=\"" << left + pw + 12 << "\" x2=\"" << left + pw + 36 << "\" y1=\"" << ly << "\" y2=\"" << ly
      << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4 << "\">" << series[i].name << "</text>\n";
  }
  o << "</svg>\n";
  os << o.str();
}

} // namespace revamp::harness

#endif // REVAMP_HARNESS_SVG_HPP
