#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "subkalman/cli.hpp"

namespace subkalman::cli {
namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 20.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 80.0;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
  double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

Range padded(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) return {};
  if (hi - lo < 1e-12) {
    const double pad = std::max(1.0, std::abs(hi) * 0.1);
    return {lo - pad, hi + pad};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

void header(std::ostringstream& o, const std::string& title) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
    << "\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text class=\"title\" x=\"" << kWidth / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">"
    << escape(title) << "</text>\n";
}

void y_axis(std::ostringstream& o, const Range& y, const std::string& label) {
  const double x0 = kLeft, y0 = kHeight - kBottom, y1 = kTop;
  o << "<line class=\"axis\" x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
    << "\" stroke=\"black\"/>\n";
  o << "<line class=\"axis\" x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << y0
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = y.lo + (y.hi - y.lo) * i / 4.0;
    const double py = y.map(v, y0, y1);
    o << "<text x=\"" << x0 - 6 << "\" y=\"" << num(py + 4) << "\" text-anchor=\"end\">" << tick_label(v)
      << "</text>\n";
  }
  o << "<text x=\"20\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
    << (y0 + y1) / 2 << ")\">" << escape(label) << "</text>\n";
}

}  // namespace

std::string svg_bar_chart(const std::string& title, const std::string& y_label, const std::vector<BarSeries>& series) {
  double lo = 0.0, hi = 0.0;
  for (const auto& s : series) {
    lo = std::min(lo, s.mean - s.stdev);
    hi = std::max(hi, s.mean + s.stdev);
  }
  const Range y = padded(lo, hi);
  std::ostringstream o;
  header(o, title);
  y_axis(o, y, y_label);
  const double plot_w = kWidth - kLeft - kRight;
  const double slot = series.empty() ? plot_w : plot_w / static_cast<double>(series.size());
  const double y0 = kHeight - kBottom;
  const double base = y.map(0.0, y0, kTop);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    const double w = slot * 0.6;
    const double top = y.map(s.mean, y0, kTop);
    const double lo_px = y.map(s.mean - s.stdev, y0, kTop);
    const double hi_px = y.map(s.mean + s.stdev, y0, kTop);
    o << "<g class=\"bar-group\" data-label=\"" << escape(s.label) << "\">\n";
    o << "  <rect class=\"bar\" x=\"" << num(cx - w / 2) << "\" y=\"" << num(std::min(top, base)) << "\" width=\""
      << num(w) << "\" height=\"" << num(std::abs(base - top)) << "\" fill=\""
      << kPalette[i % std::size(kPalette)] << "\"/>\n";
    o << "  <line class=\"whisker\" x1=\"" << num(cx) << "\" y1=\"" << num(lo_px) << "\" x2=\"" << num(cx)
      << "\" y2=\"" << num(hi_px) << "\" stroke=\"black\"/>\n";
    o << "  <text x=\"" << num(cx) << "\" y=\"" << y0 + 18 << "\" text-anchor=\"middle\">" << escape(s.label)
      << "</text>\n";
    o << "</g>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<LineSeries>& series) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  const Range x = padded(xlo, xhi);
  const Range y = padded(ylo, yhi);
  std::ostringstream o;
  header(o, title);
  y_axis(o, y, y_label);
  const double y0 = kHeight - kBottom;
  for (int i = 0; i <= 4; ++i) {
    const double v = x.lo + (x.hi - x.lo) * i / 4.0;
    o << "<text x=\"" << num(x.map(v, kLeft, kWidth - kRight)) << "\" y=\"" << y0 + 18
      << "\" text-anchor=\"middle\">" << tick_label(v) << "</text>\n";
  }
  o << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 40 << "\" text-anchor=\"middle\">"
    << escape(x_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    o << "<polyline class=\"series\" data-label=\"" << escape(s.label) << "\" fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (i) o << ' ';
      o << num(x.map(s.x[i], kLeft, kWidth - kRight)) << ',' << num(y.map(s.y[i], y0, kTop));
    }
    o << "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(k);
    o << "<text class=\"legend\" x=\"" << kWidth - kRight - 10 << "\" y=\"" << num(ly + 4)
      << "\" text-anchor=\"end\" fill=\"" << color << "\">" << escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace subkalman::cli
