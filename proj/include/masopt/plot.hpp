// Static SVG line plots of traces: loss against step for every trace, plus a
// (p0, p1) trajectory panel when all traces are two-parameter runs.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "masopt/harness.hpp"
#include "masopt/trace_io.hpp"

namespace masopt {

/// Traces handed to the plotter do not share a column layout.
class PlotSchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlotOptions {
  bool log_loss = false;
  std::string title;
};

struct LabeledTrace {
  std::string label;
  std::vector<std::string> columns;
  Trace trace;
};

namespace detail {

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                           "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

inline std::string xml_escape(const std::string& s) {
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

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool valid() const { return lo <= hi; }
  void pad() {
    if (!valid()) {
      lo = 0.0;
      hi = 1.0;
    } else if (hi - lo < 1e-300) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

struct Panel {
  double x, y, w, h;
};

inline std::string fmt(double v) {
  std::ostringstream o;
  o.precision(4);
  o << v;
  return o.str();
}

inline void axes(std::ostringstream& svg, const Panel& p, const Range& xr, const Range& yr,
                 const std::string& xlabel, const std::string& ylabel, bool ylog) {
  svg << "<rect x=\"" << p.x << "\" y=\"" << p.y << "\" width=\"" << p.w << "\" height=\""
      << p.h << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    const double px = p.x + p.w * i / 4.0;
    const double py = p.y + p.h - p.h * i / 4.0;
    svg << "<text x=\"" << px << "\" y=\"" << p.y + p.h + 14
        << "\" font-size=\"10\" text-anchor=\"middle\">" << fmt(fx) << "</text>\n";
    svg << "<text x=\"" << p.x - 4 << "\" y=\"" << py + 3
        << "\" font-size=\"10\" text-anchor=\"end\">" << (ylog ? "1e" + fmt(fy) : fmt(fy))
        << "</text>\n";
  }
  svg << "<text x=\"" << p.x + p.w / 2 << "\" y=\"" << p.y + p.h + 30
      << "\" font-size=\"12\" text-anchor=\"middle\">" << xml_escape(xlabel) << "</text>\n";
  svg << "<text x=\"" << p.x - 52 << "\" y=\"" << p.y + p.h / 2
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 " << p.x - 52 << ' '
      << p.y + p.h / 2 << ")\">" << xml_escape(ylabel) << "</text>\n";
}

/// Polyline split at non-finite points.
inline void series(std::ostringstream& svg, const Panel& p, const Range& xr, const Range& yr,
                   const std::vector<std::pair<double, double>>& pts, const char* color,
                   const std::string& label) {
  svg << "<g class=\"series\" data-label=\"" << xml_escape(label) << "\">\n";
  std::string path;
  bool open = false;
  for (auto [x, y] : pts) {
    if (!std::isfinite(x) || !std::isfinite(y)) {
      open = false;
      continue;
    }
    const double px = p.x + (x - xr.lo) / (xr.hi - xr.lo) * p.w;
    const double py = p.y + p.h - (y - yr.lo) / (yr.hi - yr.lo) * p.h;
    path += (open ? " L" : " M") + fmt(px) + " " + fmt(py);
    open = true;
  }
  svg << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.5\"/>\n</g>\n";
}

}  // namespace detail

inline std::string render_svg(const std::vector<LabeledTrace>& traces, const PlotOptions& opt) {
  using detail::Panel;
  using detail::Range;
  if (traces.empty()) throw std::invalid_argument("render_svg: no traces");
  for (const auto& t : traces) {
    if (t.columns != traces.front().columns) {
      throw PlotSchemaError("trace '" + t.label + "' has a different column layout");
    }
  }
  const bool trajectory = traces.front().trace.param_columns == 2;

  // loss panel data; log scale uses log10 and drops non-positive values
  auto y_of = [&](double loss) {
    if (!opt.log_loss) return loss;
    return loss > 0.0 ? std::log10(loss) : std::numeric_limits<double>::quiet_NaN();
  };
  Range sx, sy, px, py;
  std::vector<std::vector<std::pair<double, double>>> loss_pts, traj_pts;
  for (const auto& t : traces) {
    auto& lp = loss_pts.emplace_back();
    auto& tp = traj_pts.emplace_back();
    for (const auto& r : t.trace.records) {
      const double x = static_cast<double>(r.step);
      const double y = y_of(r.loss);
      sx.add(x);
      sy.add(y);
      lp.emplace_back(x, y);
      if (trajectory && r.params.size() == 2) {
        px.add(r.params[0]);
        py.add(r.params[1]);
        tp.emplace_back(r.params[0], r.params[1]);
      }
    }
  }
  sx.pad();
  sy.pad();
  px.pad();
  py.pad();

  const double width = trajectory ? 1000 : 560;
  const double height = 420 + 18.0 * static_cast<double>(traces.size());
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty()) {
    svg << "<text x=\"" << width / 2 << "\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">"
        << detail::xml_escape(opt.title) << "</text>\n";
  }

  const Panel loss_panel{80, 40, 440, 300};
  detail::axes(svg, loss_panel, sx, sy, "step", opt.log_loss ? "loss (log10)" : "loss",
               opt.log_loss);
  for (std::size_t i = 0; i < traces.size(); ++i) {
    detail::series(svg, loss_panel, sx, sy, loss_pts[i], detail::kPalette[i % 8],
                   traces[i].label);
  }
  if (trajectory) {
    const Panel traj_panel{540 + 80, 40, 340, 300};
    detail::axes(svg, traj_panel, px, py, "p0", "p1", false);
    for (std::size_t i = 0; i < traces.size(); ++i) {
      detail::series(svg, traj_panel, px, py, traj_pts[i], detail::kPalette[i % 8],
                     traces[i].label);
    }
  }

  // legend
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const double y = 390 + 18.0 * static_cast<double>(i);
    svg << "<line x1=\"80\" y1=\"" << y << "\" x2=\"110\" y2=\"" << y << "\" stroke=\""
        << detail::kPalette[i % 8] << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"116\" y=\"" << y + 4 << "\" font-size=\"12\">"
        << detail::xml_escape(traces[i].label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace masopt
