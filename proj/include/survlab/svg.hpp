#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "survlab/numeric.hpp"
#include "survlab/sweep.hpp"

namespace survlab {

// Hand-rolled static SVG so chart bytes are a pure function of the data:
// same curve in, same file out, golden-testable.

namespace detail {
inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}
}  // namespace detail

struct RenderOptions {
  int width_px = 800;
  int height_px = 500;
  std::string title = "capacity sweep";
  bool show_znorm = true;
};

inline std::string render_curves_svg(const std::vector<CurvePoint>& curve,
                                     std::optional<int> threshold,
                                     const RenderOptions& opt = {}) {
  std::vector<CurvePoint> pts;
  for (const CurvePoint& pt : curve)
    if (pt.cells > 0 && pt.width > 0) pts.push_back(pt);
  if (pts.size() < 2) throw data_error("render_curves_svg: need at least two plottable points");

  const double ml = 70, mr = 30, mt = 50, mb = 60;
  const double pw = opt.width_px - ml - mr;
  const double ph = opt.height_px - mt - mb;

  double x_lo = std::log2(static_cast<double>(pts.front().width));
  double x_hi = x_lo;
  double y_lo = std::numeric_limits<double>::infinity();
  double y_hi = -y_lo;
  const bool znorm = opt.show_znorm && std::any_of(pts.begin(), pts.end(), [](const CurvePoint& p) {
                       return std::isfinite(p.znorm_dev);
                     });
  for (const CurvePoint& pt : pts) {
    const double lx = std::log2(static_cast<double>(pt.width));
    x_lo = std::min(x_lo, lx);
    x_hi = std::max(x_hi, lx);
    for (double v : {pt.train_loss, pt.test_loss, znorm ? pt.znorm_dev
                                                        : std::numeric_limits<double>::quiet_NaN()})
      if (std::isfinite(v)) {
        y_lo = std::min(y_lo, v);
        y_hi = std::max(y_hi, v);
      }
  }
  if (!(y_lo < y_hi)) {  // flat or empty value range
    if (!std::isfinite(y_lo)) throw data_error("render_curves_svg: no finite values to plot");
    y_lo -= 1.0;
    y_hi += 1.0;
  }
  if (!(x_lo < x_hi)) throw data_error("render_curves_svg: all points share one width");

  auto sx = [&](int width) { return ml + (std::log2(static_cast<double>(width)) - x_lo) / (x_hi - x_lo) * pw; };
  auto sy = [&](double v) { return mt + (y_hi - v) / (y_hi - y_lo) * ph; };

  auto polyline = [&](const char* color, const char* dash, auto value) {
    std::ostringstream seg;
    std::ostringstream all;
    int run = 0;
    auto flush = [&]() {
      if (run >= 2)
        all << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"" << dash
            << " points=\"" << seg.str() << "\"/>\n";
      seg.str("");
      run = 0;
    };
    for (const CurvePoint& pt : pts) {
      const double v = value(pt);
      if (!std::isfinite(v)) {
        flush();
        continue;
      }
      if (run > 0) seg << ' ';
      seg << detail::svg_num(sx(pt.width)) << ',' << detail::svg_num(sy(v));
      ++run;
    }
    flush();
    return all.str();
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width_px << "\" height=\""
      << opt.height_px << "\" viewBox=\"0 0 " << opt.width_px << ' ' << opt.height_px << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << detail::svg_num(ml) << "\" y=\"28\" font-family=\"sans-serif\" "
         "font-size=\"16\">"
      << opt.title << "</text>\n";

  // frame
  svg << "<rect x=\"" << detail::svg_num(ml) << "\" y=\"" << detail::svg_num(mt) << "\" width=\""
      << detail::svg_num(pw) << "\" height=\"" << detail::svg_num(ph)
      << "\" fill=\"none\" stroke=\"#444\"/>\n";

  // x ticks at every width present
  for (const CurvePoint& pt : pts) {
    const double x = sx(pt.width);
    svg << "<line x1=\"" << detail::svg_num(x) << "\" y1=\"" << detail::svg_num(mt + ph)
        << "\" x2=\"" << detail::svg_num(x) << "\" y2=\"" << detail::svg_num(mt + ph + 5)
        << "\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << detail::svg_num(x) << "\" y=\"" << detail::svg_num(mt + ph + 20)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << pt.width
        << "</text>\n";
  }
  svg << "<text x=\"" << detail::svg_num(ml + pw / 2) << "\" y=\""
      << detail::svg_num(mt + ph + 40)
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">hidden width "
         "(log scale)</text>\n";

  // y ticks, 5 of them
  for (int k = 0; k <= 4; ++k) {
    const double v = y_lo + (y_hi - y_lo) * k / 4.0;
    const double y = sy(v);
    svg << "<line x1=\"" << detail::svg_num(ml - 5) << "\" y1=\"" << detail::svg_num(y)
        << "\" x2=\"" << detail::svg_num(ml) << "\" y2=\"" << detail::svg_num(y)
        << "\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << detail::svg_num(ml - 9) << "\" y=\"" << detail::svg_num(y + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
        << detail::svg_num(v) << "</text>\n";
  }

  if (threshold) {
    const double x = sx(*threshold);
    svg << "<line class=\"threshold\" x1=\"" << detail::svg_num(x) << "\" y1=\""
        << detail::svg_num(mt) << "\" x2=\"" << detail::svg_num(x) << "\" y2=\""
        << detail::svg_num(mt + ph)
        << "\" stroke=\"#777\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"/>\n";
    svg << "<text x=\"" << detail::svg_num(x + 4) << "\" y=\"" << detail::svg_num(mt + 14)
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#555\">threshold "
        << *threshold << "</text>\n";
  }

  svg << polyline("#1f77b4", "", [](const CurvePoint& p) { return p.train_loss; });
  svg << polyline("#ff7f0e", "", [](const CurvePoint& p) { return p.test_loss; });
  if (znorm)
    svg << polyline("#d62728", " stroke-dasharray=\"5,3\"",
                    [](const CurvePoint& p) { return p.znorm_dev; });

  double ly = mt + 12;
  auto legend = [&](const char* color, const char* label) {
    svg << "<line x1=\"" << detail::svg_num(ml + pw - 150) << "\" y1=\"" << detail::svg_num(ly)
        << "\" x2=\"" << detail::svg_num(ml + pw - 125) << "\" y2=\"" << detail::svg_num(ly)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << detail::svg_num(ml + pw - 120) << "\" y=\"" << detail::svg_num(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << label << "</text>\n";
    ly += 18;
  };
  legend("#1f77b4", "train loss");
  legend("#ff7f0e", "test loss");
  if (znorm) legend("#d62728", "z-norm deviation");

  svg << "</svg>\n";
  return svg.str();
}

}  // namespace survlab
