#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fiolab/expr.hpp"
#include "fiolab/jet.hpp"
#include "fiolab/numgrid.hpp"

namespace fiolab {

/// Point in R^n, n <= 2; the unused second entry is zero in 1D.
using Vec = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

/// Claimed class membership of an amplitude.
struct ClassTag {
  enum class Kind { hormander, rough, product_rough, joint_rough };

  Kind kind = Kind::hormander;
  double m = 0.0;
  double rho = 1.0;
  double delta = 0.0;
  double p = kInf;
  std::vector<double> ms;
  std::vector<double> rhos;

  static ClassTag hormander(double m, double rho, double delta);
  static ClassTag rough(double p, double m, double rho);
  static ClassTag product_rough(double p, std::vector<double> ms, std::vector<double> rhos);
  static ClassTag joint_rough(double p, double m, double rho);

  /// Spatial integrability exponent (inf for Hormander classes).
  double space_exponent() const { return kind == Kind::hormander ? kInf : p; }
  /// Total order; the sum of the per-operand orders for product classes.
  double total_order() const;
  std::string kind_name() const;
};

/// One term b(x) sigma(xi_1..xi_N) of a separable amplitude.
struct SeparableTerm {
  std::function<cplx(const Vec&)> space;
  std::function<cplx(std::span<const Vec>)> freq;
};

/// a(x, xi_1, ..., xi_N) with its claimed class.
struct AmplitudeDescriptor {
  using Fn = std::function<cplx(const Vec& x, std::span<const Vec> xi)>;
  /// x has `dim` jets, xi has arity*dim jets (operand-major).
  using JetFn = std::function<Jet(std::span<const Jet> x, std::span<const Jet> xi)>;

  int arity = 1;
  int dim = 1;
  Fn evaluator;
  JetFn jet_evaluator;
  ClassTag claimed;
  std::optional<double> freq_support_radius;
  /// Non-empty when a = sum of space(x) freq(xi) terms.
  std::vector<SeparableTerm> separable;
  bool x_independent = false;
  /// The constant 1, which belongs to every class of order 0.
  bool unit = false;
  std::string name;

  cplx operator()(const Vec& x, std::span<const Vec> xi) const { return evaluator(x, xi); }
  cplx operator()(const Vec& x, const Vec& xi) const { return evaluator(x, std::span<const Vec>(&xi, 1)); }

  bool has_analytic_derivatives() const { return static_cast<bool>(jet_evaluator); }
  /// d_xi^alpha a at (x, xi); alpha has arity*dim entries. Uses jets when
  /// available, finite differences otherwise.
  cplx derivative(std::span<const int> alpha, const Vec& x, std::span<const Vec> xi) const;
  /// All derivatives up to total order `order` at once, keyed by the jet
  /// layout of (arity*dim) variables.
  Jet derivatives(int order, const Vec& x, std::span<const Vec> xi) const;
};

/// phi(x, xi), real valued.
struct PhaseDescriptor {
  using Fn = std::function<double(const Vec& x, const Vec& xi)>;
  using JetFn = std::function<Jet(std::span<const Jet> x, std::span<const Jet> xi)>;

  int dim = 1;
  Fn evaluator;
  JetFn jet_evaluator;
  bool homogeneous_degree_1 = false;
  int claimed_phi_k = 2;
  std::optional<double> snd_constant;
  /// Set when phi(x, xi) = <x, xi> + h(xi); h is stored here (empty h means 0).
  bool translation_form = false;
  std::function<double(const Vec&)> multiplier_part;
  std::string name;

  double operator()(const Vec& x, const Vec& xi) const { return evaluator(x, xi); }
  bool is_linear() const { return translation_form && !multiplier_part; }
  /// d_x^beta d_xi^alpha phi.
  double derivative(std::span<const int> beta_x, std::span<const int> alpha_xi, const Vec& x, const Vec& xi) const;
  /// Jet in the 2*dim variables (x, xi) of total degree `order`.
  Jet derivatives(int order, const Vec& x, const Vec& xi) const;
  Vec grad_xi(const Vec& x, const Vec& xi) const;
  /// H[j][k] = d^2 phi / dx_j dxi_k.
  Mat2 mixed_hessian(const Vec& x, const Vec& xi) const;
};

/// Central differences with one Richardson level, step 1e-3*max(1,|p|).
/// fn takes the flattened point; alpha has the same length.
cplx finite_difference(const std::function<cplx(std::span<const double>)>& fn, std::span<const double> point,
                       std::span<const int> alpha);

// Built-ins. The spec string for jb_power is "jb_power(m)".
AmplitudeDescriptor builtin_amplitude(const std::string& spec, int dim);
PhaseDescriptor builtin_phase(const std::string& name, int dim);
AmplitudeDescriptor amplitude_from_expression(const std::string& source, int arity, int dim, ClassTag claimed,
                                              std::optional<double> freq_support_radius = std::nullopt);
PhaseDescriptor phase_from_expression(const std::string& source, int dim, bool homogeneous, int claimed_phi_k);
/// x-only amplitude b(x) (class Rough(p, 0, 1) as claimed by the caller).
AmplitudeDescriptor space_amplitude(std::function<cplx(const Vec&)> b, std::function<Jet(std::span<const Jet>)> b_jet,
                                    int dim, double p, std::string name);
/// Standard bump e^{1-1/(1-|x|^2)} on the unit ball.
double standard_bump(const Vec& x, int dim);

/// Pointwise product; claimed class follows 1/r = 1/p + 1/q with orders added.
AmplitudeDescriptor product_amplitude(const AmplitudeDescriptor& a, const AmplitudeDescriptor& b);
/// a(x, xi) eta(eps xi) with eta the radial plateau (1 on |xi|<=1, 0 beyond 2).
AmplitudeDescriptor frequency_cutoff(const AmplitudeDescriptor& a, double eps);
/// c * a.
AmplitudeDescriptor scale_amplitude(const AmplitudeDescriptor& a, cplx c);

using MultiIndex = std::vector<int>;

/// Multi-indices of length `vars` with total degree in [lo, hi], graded order.
std::vector<MultiIndex> multi_indices(int vars, int lo, int hi);

struct XiSampling {
  int j_max = 6;
  /// 0 selects the default: {+e1, -e1} in 1D, 16 angles in 2D.
  int directions = 0;
};

struct SeminormEstimate {
  int s = 0;
  double p = kInf;
  std::vector<std::pair<MultiIndex, double>> per_alpha;
  double total = 0.0;
  bool class_violation = false;
  MultiIndex violating_alpha;
  /// profile[alpha][r]: max over directions at radius 2^r.
  std::vector<std::vector<double>> profile;
  std::vector<double> radii;
  int directions = 0;
};

/// Sampled sup over xi of <xi>^{rho|alpha|-m} ||d_xi^alpha a(., xi)||_{L^p}.
SeminormEstimate estimate_seminorm(const AmplitudeDescriptor& a, int s, const UniformGrid& grid,
                                   const XiSampling& sampling = {});

struct PhaseBox {
  double x_halfwidth = 1.0;
  int x_samples = 5;
  double xi_min = 0.5;
  double xi_max = 8.0;
  int radial_samples = 5;
  int angular_samples = 16;
};

struct PhaseReport {
  int k = 2;
  std::vector<std::pair<std::pair<MultiIndex, MultiIndex>, double>> phi_k_constants;
  double snd_constant = 0.0;
  double homogeneity_error = 0.0;
  bool finite = true;
  bool pass = false;
};

/// Sampled sup of |xi|^{-1+|alpha|} |d_xi^alpha d_x^beta phi| for
/// k <= |alpha|+|beta| <= k+3 and min |det d_x d_xi phi| over the box.
PhaseReport verify_phase(const PhaseDescriptor& phi, int k, const PhaseBox& box = {});

/// Points of the xi sample set used by verify_phase (|xi| >= xi_min).
std::vector<Vec> phase_xi_samples(int dim, const PhaseBox& box);

}  // namespace fiolab
