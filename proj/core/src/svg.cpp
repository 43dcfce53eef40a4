#include "torusot/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace torusot {

namespace {

constexpr double kW = 640.0, kH = 480.0;
constexpr double kLeft = 70.0, kRight = 620.0, kTop = 40.0, kBottom = 420.0;

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c, d);
  return buf;
}

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

}  // namespace

std::string render_plot(const RateReport& report, double reference_slope) {
  if (report.points.size() < 2) throw std::invalid_argument("render_plot: need at least 2 points");
  const double ln10 = std::log(10.0);

  std::vector<double> xs, ys, lo, hi;
  for (const RatePoint& pt : report.points) {
    if (!(pt.n > 0) || !(pt.mean > 0.0)) {
      throw std::invalid_argument("render_plot: points need positive n and mean");
    }
    double low = pt.mean - pt.std_error;
    if (!(low > 0.0)) low = pt.mean / 2.0;
    xs.push_back(std::log10(static_cast<double>(pt.n)));
    ys.push_back(std::log10(pt.mean));
    lo.push_back(std::log10(low));
    hi.push_back(std::log10(pt.mean + pt.std_error));
  }

  double xmin = *std::min_element(xs.begin(), xs.end());
  double xmax = *std::max_element(xs.begin(), xs.end());
  if (xmax - xmin < 1e-12) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  // fitted line in log10 coordinates and the anchored reference line
  double fit_b = report.fit.intercept / ln10;
  auto fit_at = [&](double x) { return report.fit.slope * x + fit_b; };
  double anchor_x = xs.front();
  double anchor_y = fit_at(anchor_x);
  auto ref_at = [&](double x) { return anchor_y + reference_slope * (x - anchor_x); };

  double ymin = lo.front(), ymax = hi.front();
  for (std::size_t i = 0; i < ys.size(); ++i) {
    ymin = std::min({ymin, lo[i]});
    ymax = std::max({ymax, hi[i]});
  }
  for (double x : {xmin, xmax}) {
    ymin = std::min({ymin, fit_at(x), ref_at(x)});
    ymax = std::max({ymax, fit_at(x), ref_at(x)});
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  double xpad = 0.05 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
  xmin -= xpad;
  xmax += xpad;
  ymin -= ypad;
  ymax += ypad;

  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * (kRight - kLeft); };
  auto py = [&](double y) { return kBottom - (y - ymin) / (ymax - ymin) * (kBottom - kTop); };

  std::string svg;
  svg += fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
             "viewBox=\"0 0 %.0f %.0f\">\n",
             kW, kH, kW, kH);
  svg += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n";
  svg += fmt("<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"none\" "
             "stroke=\"black\"/>\n",
             kLeft, kTop, kRight - kLeft, kBottom - kTop);

  std::string title = report.experiment + " (d=" + std::to_string(report.d) + ")";
  svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">" +
         escape(title) + "</text>\n";

  // x ticks at the data points, y ticks on a uniform grid
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double x = px(xs[i]);
    svg += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n", x,
               kBottom, x, kBottom + 5.0);
    svg += fmt("<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"11\">",
               x, kBottom + 18.0) +
           std::to_string(report.points[i].n) + "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    double y = ymin + (ymax - ymin) * k / 4.0;
    double yp = py(y);
    svg += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n",
               kLeft - 5.0, yp, kLeft, yp);
    char lab[48];
    std::snprintf(lab, sizeof(lab), "%.3g", std::pow(10.0, y));
    svg += fmt("<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\" font-family=\"sans-serif\" "
               "font-size=\"11\">",
               kLeft - 8.0, yp + 4.0) +
           lab + "</text>\n";
  }
  svg += "<text x=\"345\" y=\"460\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">sample size n</text>\n";
  svg += "<text x=\"18\" y=\"230\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\" transform=\"rotate(-90 18 230)\">mean distance</text>\n";

  // fitted line (solid) and the reference line (dashed)
  svg += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#1f77b4\" "
             "stroke-width=\"1.5\"/>\n",
             px(xmin), py(fit_at(xmin)), px(xmax), py(fit_at(xmax)));
  svg += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#d62728\" "
             "stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n",
             px(xmin), py(ref_at(xmin)), px(xmax), py(ref_at(xmax)));

  // error bars, then markers on top
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double x = px(xs[i]);
    double y0 = py(lo[i]), y1 = py(hi[i]);
    svg += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n", x, y0,
               x, y1);
    svg += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n",
               x - 4.0, y0, x + 4.0, y0);
    svg += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n",
               x - 4.0, y1, x + 4.0, y1);
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    svg += fmt("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"#1f77b4\"/>\n", px(xs[i]),
               py(ys[i]));
  }

  char legend[160];
  std::snprintf(legend, sizeof(legend), "fit slope %.4f, reference slope %.4f", report.fit.slope,
                reference_slope);
  svg += "<text x=\"80\" y=\"58\" font-family=\"sans-serif\" font-size=\"12\">" +
         escape(legend) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace torusot
