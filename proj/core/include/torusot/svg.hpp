#pragma once

#include <string>

#include "torusot/experiments.hpp"

namespace torusot {

// Deterministic 640x480 SVG of a rate report: log10 axes, data points with
// +-1 SE error bars, the fitted line, and a dashed reference line of the
// given slope anchored at the fitted value over the first point. Reports
// with fewer than two points throw std::invalid_argument.
std::string render_plot(const RateReport& report, double reference_slope);

}  // namespace torusot
