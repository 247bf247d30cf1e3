#pragma once

#include <span>

namespace fiolab {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Root-mean-square residual.
  double residual = 0.0;
  int points = 0;
};

/// Ordinary least squares y = slope * x + intercept; needs >= 2 distinct x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace fiolab
