#include "folomin/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace folomin::svg {

namespace {

constexpr const char* kPalette[] = {"#1b6ca8", "#d1495b", "#2e933c", "#edae49",
                                    "#6a4c93", "#00798c", "#8d6a9f", "#555555"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string fmt(double x, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

std::string px(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

void open(std::ostringstream& os, double w, double h, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(w) << "\" height=\"" << px(h)
     << "\" viewBox=\"0 0 " << px(w) << ' ' << px(h) << "\" font-family=\"sans-serif\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << px(w / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(title) << "</text>\n";
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double x) {
    if (!std::isfinite(x)) return;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) {
      const double pad = std::max(std::abs(lo) * 0.05, 0.5);
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

std::string histograms(const std::string& title, const std::vector<Series>& series, int bins,
                       std::optional<double> reference) {
  bins = std::max(bins, 1);
  const double w = 520, panel_h = 90, top = 36, left = 130, right = 20;
  const double h = top + panel_h * std::max<std::size_t>(series.size(), 1) + 30;
  Range range;
  for (const Series& s : series) {
    for (double v : s.values) range.add(v);
  }
  if (reference) range.add(*reference);
  range.finish();
  const double plot_w = w - left - right;
  auto xpos = [&](double x) { return left + (x - range.lo) / (range.hi - range.lo) * plot_w; };

  std::ostringstream os;
  open(os, w, h, title);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double y0 = top + panel_h * k, base = y0 + panel_h - 12;
    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    for (double v : series[k].values) {
      if (!std::isfinite(v)) continue;
      int b = static_cast<int>((v - range.lo) / (range.hi - range.lo) * bins);
      b = std::clamp(b, 0, bins - 1);
      ++counts[static_cast<std::size_t>(b)];
    }
    const int peak = std::max(1, *std::max_element(counts.begin(), counts.end()));
    const double bw = plot_w / bins;
    for (int b = 0; b < bins; ++b) {
      const double bh = (panel_h - 20) * counts[static_cast<std::size_t>(b)] / peak;
      os << "<rect x=\"" << px(left + b * bw) << "\" y=\"" << px(base - bh) << "\" width=\""
         << px(bw - 1) << "\" height=\"" << px(bh) << "\" fill=\"" << kPalette[k % 8] << "\"/>\n";
    }
    os << "<line x1=\"" << px(left) << "\" y1=\"" << px(base) << "\" x2=\"" << px(w - right)
       << "\" y2=\"" << px(base) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << px(left - 8) << "\" y=\"" << px(base - 30)
       << "\" text-anchor=\"end\" font-size=\"12\">" << escape(series[k].label) << "</text>\n";
    if (reference) {
      os << "<line x1=\"" << px(xpos(*reference)) << "\" y1=\"" << px(y0 + 6) << "\" x2=\""
         << px(xpos(*reference)) << "\" y2=\"" << px(base) << "\" stroke=\"black\" stroke-dasharray=\"4 3\"/>\n";
    }
  }
  const double axis_y = h - 12;
  os << "<text x=\"" << px(left) << "\" y=\"" << px(axis_y) << "\" font-size=\"11\">" << fmt(range.lo)
     << "</text>\n";
  os << "<text x=\"" << px(w - right) << "\" y=\"" << px(axis_y)
     << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(range.hi) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::string strips(const std::string& title, const std::string& y_label,
                   const std::vector<Series>& series, std::optional<double> reference) {
  const double col_w = 90, left = 70, top = 36, plot_h = 260, bottom = 60;
  const double w = left + col_w * std::max<std::size_t>(series.size(), 1) + 20;
  const double h = top + plot_h + bottom;
  Range range;
  for (const Series& s : series) {
    for (double v : s.values) range.add(v);
  }
  if (reference) range.add(*reference);
  range.finish();
  auto ypos = [&](double y) { return top + plot_h - (y - range.lo) / (range.hi - range.lo) * plot_h; };

  std::ostringstream os;
  open(os, w, h, title);
  os << "<line x1=\"" << px(left) << "\" y1=\"" << px(top) << "\" x2=\"" << px(left) << "\" y2=\""
     << px(top + plot_h) << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = range.lo + (range.hi - range.lo) * t / 4.0;
    os << "<text x=\"" << px(left - 6) << "\" y=\"" << px(ypos(v) + 4)
       << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(v) << "</text>\n";
  }
  os << "<text x=\"14\" y=\"" << px(top + plot_h / 2) << "\" font-size=\"11\" transform=\"rotate(-90 14 "
     << px(top + plot_h / 2) << ")\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";
  if (reference) {
    os << "<line x1=\"" << px(left) << "\" y1=\"" << px(ypos(*reference)) << "\" x2=\"" << px(w - 20)
       << "\" y2=\"" << px(ypos(*reference)) << "\" stroke=\"black\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double cx = left + col_w * (k + 0.5);
    double sum = 0.0;
    std::size_t m = 0;
    const auto& v = series[k].values;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i])) continue;
      // Deterministic horizontal jitter.
      const double jitter = (static_cast<double>((i * 2654435761u) % 1000) / 1000.0 - 0.5) * col_w * 0.5;
      os << "<circle cx=\"" << px(cx + jitter) << "\" cy=\"" << px(ypos(v[i])) << "\" r=\"1.6\" fill=\""
         << kPalette[k % 8] << "\" fill-opacity=\"0.5\"/>\n";
      sum += v[i];
      ++m;
    }
    if (m > 0) {
      const double mean = sum / static_cast<double>(m);
      os << "<line x1=\"" << px(cx - col_w * 0.35) << "\" y1=\"" << px(ypos(mean)) << "\" x2=\""
         << px(cx + col_w * 0.35) << "\" y2=\"" << px(ypos(mean)) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    }
    os << "<text x=\"" << px(cx) << "\" y=\"" << px(top + plot_h + 18)
       << "\" text-anchor=\"middle\" font-size=\"10\">" << escape(series[k].label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string heatmap(const std::string& title, const Matrix& values, double lo, double hi,
                    const std::vector<std::string>& column_labels) {
  const double cell_w = 36, left = 50, top = 50;
  const double cell_h = std::clamp(600.0 / std::max<Index>(values.rows(), 1), 2.0, 14.0);
  const double w = left + cell_w * values.cols() + 20;
  const double h = top + cell_h * values.rows() + 20;
  const double span = hi > lo ? hi - lo : 1.0;

  std::ostringstream os;
  open(os, w, h, title);
  for (Index l = 0; l < values.cols(); ++l) {
    const std::string label =
        static_cast<std::size_t>(l) < column_labels.size() ? column_labels[static_cast<std::size_t>(l)]
                                                           : std::to_string(l + 1);
    os << "<text x=\"" << px(left + cell_w * (l + 0.5)) << "\" y=\"" << px(top - 6)
       << "\" text-anchor=\"middle\" font-size=\"11\">" << escape(label) << "</text>\n";
  }
  for (Index j = 0; j < values.rows(); ++j) {
    for (Index l = 0; l < values.cols(); ++l) {
      const double v = values(j, l);
      std::string fill = "#bbbbbb";
      if (std::isfinite(v)) {
        const double t = std::clamp((v - lo) / span, 0.0, 1.0);
        const int c = static_cast<int>(std::lround(255 * (1.0 - t)));
        char buf[16];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c, c, std::min(255, c + 40));
        fill = buf;
      }
      os << "<rect x=\"" << px(left + cell_w * l) << "\" y=\"" << px(top + cell_h * j) << "\" width=\""
         << px(cell_w) << "\" height=\"" << px(cell_h) << "\" fill=\"" << fill << "\"/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace folomin::svg
