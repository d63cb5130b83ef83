#include "idstyle/plotting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace idstyle {

namespace {

constexpr double kPanelWidth = 420;
constexpr double kPanelHeight = 320;
constexpr double kMarginLeft = 60;
constexpr double kMarginRight = 20;
constexpr double kMarginTop = 40;
constexpr double kMarginBottom = 50;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void include(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!(lo <= hi)) {
      lo = 0;
      hi = 1;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

void draw_panel(std::ostringstream& os, const Chart& chart, double x0) {
  Range rx, ry;
  for (const auto& s : chart.series) {
    for (double v : s.x) rx.include(v);
    for (double v : s.y) ry.include(v);
  }
  rx.pad();
  ry.pad();
  const double pw = kPanelWidth - kMarginLeft - kMarginRight;
  const double ph = kPanelHeight - kMarginTop - kMarginBottom;
  auto px = [&](double v) { return x0 + kMarginLeft + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
  auto py = [&](double v) { return kMarginTop + ph - (v - ry.lo) / (ry.hi - ry.lo) * ph; };

  os << "<text x=\"" << format_number(x0 + kPanelWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(chart.title) << "</text>\n";
  os << "<rect x=\"" << format_number(x0 + kMarginLeft) << "\" y=\"" << format_number(kMarginTop) << "\" width=\""
     << format_number(pw) << "\" height=\"" << format_number(ph) << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double vx = rx.lo + (rx.hi - rx.lo) * t / 4;
    const double vy = ry.lo + (ry.hi - ry.lo) * t / 4;
    os << "<text x=\"" << format_number(px(vx)) << "\" y=\"" << format_number(kMarginTop + ph + 16)
       << "\" text-anchor=\"middle\" font-size=\"10\">" << format_number(std::round(vx * 1000) / 1000) << "</text>\n";
    os << "<text x=\"" << format_number(x0 + kMarginLeft - 6) << "\" y=\"" << format_number(py(vy) + 3)
       << "\" text-anchor=\"end\" font-size=\"10\">" << format_number(std::round(vy * 1000) / 1000) << "</text>\n";
  }
  os << "<text x=\"" << format_number(x0 + kMarginLeft + pw / 2) << "\" y=\"" << format_number(kPanelHeight - 12)
     << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(chart.x_label) << "</text>\n";
  os << "<text x=\"" << format_number(x0 + 16) << "\" y=\"" << format_number(kMarginTop + ph / 2)
     << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 " << format_number(x0 + 16) << ' '
     << format_number(kMarginTop + ph / 2) << ")\">" << escape(chart.y_label) << "</text>\n";

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const Series& s = chart.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      os << (i ? " " : "") << format_number(px(s.x[i])) << ',' << format_number(py(s.y[i]));
    }
    os << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      os << "<circle cx=\"" << format_number(px(s.x[i])) << "\" cy=\"" << format_number(py(s.y[i]))
         << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kMarginTop + 14 + 14 * static_cast<double>(k);
    os << "<text x=\"" << format_number(x0 + kMarginLeft + pw - 6) << "\" y=\"" << format_number(ly)
       << "\" text-anchor=\"end\" font-size=\"10\" fill=\"" << color << "\">" << escape(s.name) << "</text>\n";
  }
}

}  // namespace

std::string render_svg(std::span<const Chart> charts) {
  const double width = kPanelWidth * static_cast<double>(std::max<std::size_t>(charts.size(), 1));
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_number(width) << "\" height=\""
     << format_number(kPanelHeight) << "\" viewBox=\"0 0 " << format_number(width) << ' '
     << format_number(kPanelHeight) << "\" font-family=\"sans-serif\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < charts.size(); ++i) draw_panel(os, charts[i], kPanelWidth * static_cast<double>(i));
  os << "</svg>\n";
  return os.str();
}

std::vector<Chart> sweep_charts(const SweepResult& result) {
  std::map<int, int> ks;
  for (const auto& row : result.rows) ++ks[row.k];
  // A single k means an intensity sweep: plot against intensity instead.
  const bool by_intensity = ks.size() == 1 && result.rows.size() > 1;

  std::map<double, Series> accuracy;
  std::map<double, Series> identity;
  for (const auto& row : result.rows) {
    const double key = by_intensity ? row.k : row.intensity;
    const double x = by_intensity ? row.intensity : row.k;
    auto& a = accuracy[key];
    auto& i = identity[key];
    a.name = i.name = by_intensity ? "k = " + std::to_string(row.k) : "intensity " + format_number(row.intensity);
    a.x.push_back(x);
    a.y.push_back(row.accuracy);
    i.x.push_back(x);
    i.y.push_back(row.identity_similarity);
  }
  const std::string x_name = by_intensity ? "intensity" : "k";
  const std::string x_label = by_intensity ? "intensity" : "k (entries kept per row)";
  Chart acc{"Manipulation accuracy vs " + x_name, x_label, "accuracy", {}};
  Chart id{"Identity similarity vs " + x_name, x_label, "identity similarity", {}};
  for (auto& [_, s] : accuracy) acc.series.push_back(std::move(s));
  for (auto& [_, s] : identity) id.series.push_back(std::move(s));
  return {acc, id};
}

}  // namespace idstyle
