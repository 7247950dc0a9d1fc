#pragma once

#include <optional>
#include <span>
#include <string>

#include "cfgreject/geometry.hpp"

namespace cfgreject {

/// Scatter plot with each point colored by `values` (viridis-like ramp over
/// log(value); non-positive values use the low end). Higher values are drawn
/// last so they stay visible.
std::string scatter_svg(std::span<const Vec2> points, std::span<const double> values,
                        const std::string& title);

struct FitLine {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Markers at (xs[i], ys[i]) plus an optional fitted line.
std::string curve_svg(std::span<const double> xs, std::span<const double> ys,
                      std::optional<FitLine> fit, const std::string& title,
                      const std::string& x_label, const std::string& y_label);

}  // namespace cfgreject
