#ifndef PENALTYFLOW_SVG_HPP
#define PENALTYFLOW_SVG_HPP

// Static line charts: one or more stacked panels, each a set of series
// sharing the t axis.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace penaltyflow::svg {

struct Series {
  std::string label;
  std::vector<double> y;
};

struct Panel {
  std::string title;
  std::vector<Series> series;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace detail

/// At most max_points vertices per polyline; non-finite values are skipped.
inline void write_chart(std::ostream& os, const std::vector<double>& t, const std::vector<Panel>& panels,
                        int max_points = 1500) {
  const double width = 800.0, panel_h = 260.0, left = 70.0, right = 20.0, top = 30.0, bottom = 30.0;
  const double height = panels.size() * panel_h;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (t.empty()) {
    os << "</svg>\n";
    return;
  }
  const double t0 = t.front(), t1 = std::max(t.back(), t.front() + 1e-300);
  const std::size_t stride = std::max<std::size_t>(1, t.size() / static_cast<std::size_t>(max_points));

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const Panel& panel = panels[p];
    const double y_off = p * panel_h;
    const double plot_w = width - left - right, plot_h = panel_h - top - bottom;
    double lo = INFINITY, hi = -INFINITY;
    for (const Series& s : panel.series) {
      for (double v : s.y) {
        if (!std::isfinite(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-300) lo -= 0.5, hi += 0.5;
    auto X = [&](double tv) { return left + plot_w * (tv - t0) / (t1 - t0); };
    auto Y = [&](double v) { return y_off + top + plot_h * (1.0 - (v - lo) / (hi - lo)); };

    os << "<text x=\"" << left << "\" y=\"" << detail::num(y_off + 18) << "\" font-size=\"13\">"
       << detail::escape(panel.title) << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << detail::num(y_off + top) << "\" width=\"" << plot_w << "\" height=\""
       << plot_h << "\" fill=\"none\" stroke=\"#999\"/>\n";
    for (double v : {lo, hi}) {
      os << "<text x=\"" << left - 4 << "\" y=\"" << detail::num(Y(v) + 4) << "\" text-anchor=\"end\">"
         << detail::tick(v) << "</text>\n";
    }
    for (double tv : {t0, t1}) {
      os << "<text x=\"" << detail::num(X(tv)) << "\" y=\"" << detail::num(y_off + top + plot_h + 14)
         << "\" text-anchor=\"middle\">" << detail::tick(tv) << "</text>\n";
    }
    for (std::size_t k = 0; k < panel.series.size(); ++k) {
      const Series& s = panel.series[k];
      const char* color = detail::kColors[k % std::size(detail::kColors)];
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
      for (std::size_t i = 0; i < s.y.size() && i < t.size(); i += stride) {
        if (!std::isfinite(s.y[i])) continue;
        os << detail::num(X(t[i])) << ',' << detail::num(Y(s.y[i])) << ' ';
      }
      os << "\"/>\n";
      os << "<text x=\"" << detail::num(left + plot_w - 4) << "\" y=\"" << detail::num(y_off + top + 14 + 13 * k)
         << "\" text-anchor=\"end\" fill=\"" << color << "\">" << detail::escape(s.label) << "</text>\n";
    }
  }
  os << "</svg>\n";
}

}  // namespace penaltyflow::svg

#endif  // PENALTYFLOW_SVG_HPP
