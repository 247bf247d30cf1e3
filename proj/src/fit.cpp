#include "fiolab/fit.hpp"

#include <cmath>

#include "fiolab/error.hpp"
#include "fiolab/numgrid.hpp"

namespace fiolab {

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("fit needs equally many x and y values");
  if (x.size() < 2) throw NumericError("fit", "need at least two points");
  const double n = static_cast<double>(x.size());
  NeumaierSum sx;
  NeumaierSum sy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx.add(x[i]);
    sy.add(y[i]);
  }
  const double mx = sx.result() / n;
  const double my = sy.result() / n;
  NeumaierSum sxx;
  NeumaierSum sxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx.add((x[i] - mx) * (x[i] - mx));
    sxy.add((x[i] - mx) * (y[i] - my));
  }
  if (sxx.result() == 0.0) throw NumericError("fit", "all x values coincide");
  LineFit fit;
  fit.slope = sxy.result() / sxx.result();
  fit.intercept = my - fit.slope * mx;
  NeumaierSum ss;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    ss.add(r * r);
  }
  fit.residual = std::sqrt(ss.result() / n);
  fit.points = static_cast<int>(x.size());
  return fit;
}

}  // namespace fiolab
