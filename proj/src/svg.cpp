#include "cocoa/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "cocoa/text.hpp"

namespace cocoa {

namespace {

constexpr std::array<const char*, 8> kPalette = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                                                 "#66a61e", "#e6ab02", "#a6761d", "#666666"};

std::string f(double v) { return text::format_fixed(v, 2); }

std::string escape(const std::string& s) {
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

std::string svg_scatter(const std::vector<ScatterSeries>& series, const std::string& title,
                        const std::string& x_label, const std::string& y_label) {
  constexpr double w = 640, h = 480, left = 60, right = 160, top = 40, bottom = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!(x0 < x1)) x0 -= 1, x1 += 1;
  if (!(y0 < y1)) y0 -= 1, y1 += 1;
  const double pw = w - left - right;
  const double ph = h - top - bottom;
  auto px = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return top + ph - (v - y0) / (y1 - y0) * ph; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(title) << "</text>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">"
      << escape(x_label) << "</text>\n";
  out << "<text transform=\"translate(16," << top + ph / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % kPalette.size()];
    const auto& s = series[i];
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      out << "<circle cx=\"" << f(px(s.x[k])) << "\" cy=\"" << f(py(s.y[k]))
          << "\" r=\"2.5\" fill=\"" << color << "\" fill-opacity=\"0.7\"/>\n";
    }
    const double ly = top + 14 + 16 * static_cast<double>(i);
    out << "<circle cx=\"" << w - right + 14 << "\" cy=\"" << ly - 4 << "\" r=\"4\" fill=\""
        << color << "\"/>\n";
    out << "<text x=\"" << w - right + 24 << "\" y=\"" << ly << "\">" << escape(s.label)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string svg_region_bars(const RegionReport& report, const std::string& batch_id) {
  std::vector<const RegionCell*> cells;
  for (const auto& c : report.cells) {
    if (c.batch_id == batch_id) cells.push_back(&c);
  }
  constexpr double panel_w = 300, panel_h = 220, margin = 40;
  const double w = margin + panel_w * 2 + margin;
  const double h = 40 + panel_h * 2 + margin;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const std::string region = cells.empty() ? batch_id : cells.front()->region;
  out << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(region) << " (" << escape(batch_id) << ")</text>\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const RegionCell& c = *cells[i];
    const double ox = margin + panel_w * static_cast<double>(i % 2);
    const double oy = 40 + panel_h * static_cast<double>(i / 2);
    const double inner_h = panel_h - 70;
    double vmax = c.lab;
    for (const auto& p : c.predictions) vmax = std::max(vmax, p.value);
    if (!(vmax > 0)) vmax = 1;
    const std::size_t bars = c.predictions.size() + 1;
    const double bw = (panel_w - 40) / static_cast<double>(bars);
    auto bar = [&](std::size_t k, double v, const char* color, const std::string& label) {
      const double bh = std::max(0.0, v) / vmax * inner_h;
      const double x = ox + 10 + bw * static_cast<double>(k);
      out << "<rect x=\"" << f(x) << "\" y=\"" << f(oy + 20 + inner_h - bh) << "\" width=\""
          << f(bw * 0.8) << "\" height=\"" << f(bh) << "\" fill=\"" << color << "\"/>\n";
      out << "<text transform=\"translate(" << f(x + bw * 0.4) << "," << f(oy + 24 + inner_h)
          << ") rotate(45)\" font-size=\"9\">" << escape(label) << "</text>\n";
    };
    out << "<text x=\"" << ox + 10 << "\" y=\"" << oy + 12 << "\">"
        << escape(std::string(to_string(c.property))) << " [" << escape(std::string(unit_of(c.property)))
        << "]</text>\n";
    bar(0, c.lab, "#333333", "lab");
    for (std::size_t k = 0; k < c.predictions.size(); ++k) {
      const auto& p = c.predictions[k];
      bar(k + 1, p.value, p.rank == 1 ? "#1b9e77" : kPalette[1 + k % 6],
          p.model + "/" + std::string(to_string(p.range)));
    }
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace cocoa
