#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "fiolab/jet.hpp"

namespace fiolab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

/// Periodic box [-X, X)^n sampled with N points per dimension, and its dual
/// frequency box [-Xi, Xi)^n with Xi = pi N / (2X).
class UniformGrid {
 public:
  UniformGrid() = default;

  int dim() const noexcept { return dim_; }
  int points_per_dim() const noexcept { return points_; }
  double space_halfwidth() const noexcept { return halfwidth_; }
  double spacing() const noexcept { return 2.0 * halfwidth_ / points_; }
  double freq_spacing() const noexcept { return kPi / halfwidth_; }
  double freq_halfwidth() const noexcept { return kPi * points_ / (2.0 * halfwidth_); }
  std::size_t size() const noexcept;
  /// Cell volume h^n.
  double cell_volume() const noexcept;
  /// Dual cell volume (delta xi)^n.
  double freq_cell_volume() const noexcept;

  /// Coordinate of grid index i along one axis.
  double coordinate(int i) const noexcept { return -halfwidth_ + i * spacing(); }
  double frequency(int k) const noexcept { return (k - points_ / 2) * freq_spacing(); }

  /// Row-major flat index -> per-axis indices (second entry unused in 1D).
  std::array<int, 2> unflatten(std::size_t flat) const noexcept;
  std::array<double, 2> point(std::size_t flat) const noexcept;
  std::array<double, 2> freq_point(std::size_t flat) const noexcept;

  bool operator==(const UniformGrid& other) const noexcept;

  friend UniformGrid make_grid(int dim, int points_per_dim, double space_halfwidth);

 private:
  int dim_ = 1;
  int points_ = 8;
  double halfwidth_ = 1.0;
};

/// Validates and builds a grid; rejects dim outside {1,2} and non-power-of-two sizes.
UniformGrid make_grid(int dim, int points_per_dim, double space_halfwidth);

enum class Domain { space, frequency };

/// Complex samples on a grid, row-major.
struct SampledField {
  UniformGrid grid;
  std::vector<cplx> values;
  Domain domain = Domain::space;

  SampledField() = default;
  SampledField(UniformGrid g, Domain d = Domain::space);
  SampledField(UniformGrid g, std::vector<cplx> v, Domain d = Domain::space);

  std::size_t size() const noexcept { return values.size(); }
};

/// Samples fn(x) on the spatial grid.
template <class Fn>
SampledField sample_space(const UniformGrid& grid, Fn&& fn) {
  SampledField f(grid, Domain::space);
  for (std::size_t i = 0; i < grid.size(); ++i) f.values[i] = fn(grid.point(i));
  return f;
}

/// (sum |f|^p h^n)^{1/p}, or max |f| for p = inf. p <= 0 is rejected.
double lp_norm(const SampledField& field, double p);

/// Lorentz quasi-norm L^{r,q} from the decreasing rearrangement of |f|, each
/// sample occupying one cell of measure h^n. For q = r it equals lp_norm.
double lorentz_norm(const SampledField& field, double r, double q);

enum class Direction { forward, inverse };

/// forward: fhat(xi) = int f(x) e^{-i<x,xi>} dx; inverse: (2pi)^{-n} int fhat e^{+i<x,xi>} dxi.
SampledField fourier_transform(const SampledField& field, Direction direction);

/// Adjoint (conjugate transpose) of the discrete forward transform matrix,
/// mapping frequency samples to space samples.
SampledField forward_transform_adjoint(const SampledField& spectrum);

/// Frequency-tail size for an amplitude of order m truncated at Xi: Xi^{m+n}
/// when m < -n, +inf otherwise (not integrable).
double truncation_tail_estimate(double order_m, int dim, double freq_halfwidth);

/// Relative L2 distance ||a - b|| / ||b||.
double relative_l2_error(const SampledField& a, const SampledField& b);

// CSV: header row, then "i[,j],re,im" per sample in row-major order.
void write_csv(std::ostream& out, const SampledField& field);
SampledField read_csv(std::istream& in, const UniformGrid& grid);
// Binary: int64 dim, int64 N, float64 X (little endian), then interleaved re/im float64.
void write_binary(std::ostream& out, const SampledField& field);
SampledField read_binary(std::istream& in);

/// Deterministic compensated sum.
class NeumaierSum {
 public:
  void add(double v) noexcept {
    double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double result() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace fiolab
