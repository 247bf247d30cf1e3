#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fiolab/bump.hpp"
#include "fiolab/symbols.hpp"

namespace fiolab {

/// Radial Littlewood-Paley partition: Psi_0(xi) = p(|xi|^2) and
/// Psi(xi) = p(|xi|^2) - p(4|xi|^2) with p the plateau (1 on |xi|<=1, 0 on |xi|>=2).
/// The partial sums telescope: Psi_0 + sum_{j<=J} Psi_j = p(4^{-J}|xi|^2).
class LPPartition {
 public:
  explicit LPPartition(int j_max, int dim = 2);

  int j_max() const noexcept { return j_max_; }
  int dim() const noexcept { return dim_; }

  double psi0(const Vec& xi) const;
  /// Psi_j(xi) = Psi(2^{-j} xi) for j >= 1, Psi_0 for j = 0.
  double psi(int j, const Vec& xi) const;
  /// Psi_0 + sum_{1<=j<=j_max} Psi_j, summed term by term.
  double partial_sum(const Vec& xi) const;

  /// Same functions on a squared radius; T may be double or Jet.
  template <class T>
  static T psi0_sq(const T& r2) {
    return smooth::plateau_sq(r2);
  }
  template <class T>
  static T psi_sq(int j, const T& r2) {
    if (j == 0) return psi0_sq(r2);
    const double s = std::ldexp(1.0, -2 * j);
    return smooth::plateau_sq(r2 * s) - smooth::plateau_sq(r2 * (4.0 * s));
  }

 private:
  int j_max_;
  int dim_;
};

/// Angular net at level j with quotient cutoffs chi_nu = b_nu / sum_mu b_mu,
/// b_nu an angular bump of chordal width 2 * 2^{-j/2} around center nu.
class ConeNet {
 public:
  static constexpr std::size_t kMaxCenters = 1u << 16;

  ConeNet(int j, int dim = 2);

  int level() const noexcept { return j_; }
  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return centers_.size(); }
  const std::vector<Vec>& centers() const noexcept { return centers_; }
  const Vec& center(std::size_t nu) const { return centers_.at(nu); }
  /// 2^{-j/2}.
  double separation_scale() const noexcept { return delta_; }

  /// chi_nu(xi); exactly homogeneous of degree 0 (evaluated on xi / max|xi_k|).
  double chi(std::size_t nu, const Vec& xi) const;
  /// All cutoffs at xi.
  std::vector<double> chi_all(const Vec& xi) const;
  /// chi_nu for jet arguments (derivative checks).
  Jet chi_jet(std::size_t nu, std::span<const Jet> xi) const;
  /// |xi/|xi| - center_nu| <= 2 * 2^{-j/2}.
  bool in_cone(std::size_t nu, const Vec& xi) const;

  double min_separation() const;
  /// Exact worst distance from a unit vector to the nearest center,
  /// checked against `random_samples` seeded unit vectors as well.
  double covering_radius(int random_samples = 1000, unsigned long seed = 1) const;

 private:
  double bump_value(std::size_t nu, const Vec& unit) const;
  /// Index of the center nearest in angle to a nonzero point.
  std::size_t nearest(const Vec& u) const;

  int j_;
  int dim_;
  double delta_;
  double width_;
  /// Bumps of centers farther than `window_` steps from the nearest one vanish.
  int window_ = 0;
  std::vector<Vec> centers_;
};

struct ChiEstimates {
  /// Max over sampled xi in cone nu's support of |d^alpha chi| |xi|^{|alpha|} 2^{-|alpha| j/2}, |alpha| <= 2.
  std::vector<std::pair<MultiIndex, double>> isotropic;
  /// Max of |(c . grad)^N chi| |xi|^N for N = 1..3 (directional bound along the center).
  std::vector<double> radial;
};

/// Samples points of cone nu on the dyadic shell of level j.
std::vector<Vec> cone_samples(const ConeNet& net, std::size_t nu, int radial, int angular);
ChiEstimates measure_chi_estimates(const ConeNet& net, int radial = 5, int angular = 9);

/// Phi(x, xi) = phi(x, xi) - <grad_xi phi(x, center), xi>.
struct ReducedPhase {
  PhaseDescriptor base;
  Vec center{1.0, 0.0};

  Vec linear_part(const Vec& x) const { return base.grad_xi(x, center); }
  double value(const Vec& x, const Vec& xi) const;
  /// Jet in the xi variables (x fixed) up to `order`.
  Jet xi_jet(int order, const Vec& x, const Vec& xi) const;
  /// (v . grad_xi)^N Phi at (x, xi).
  double directional(int order, const Vec& direction, const Vec& x, const Vec& xi) const;
};

struct PhaseEstimate {
  int order = 0;
  /// max |d_c^N Phi| 2^{Nj}
  double parallel = 0.0;
  /// max |d_{c_perp}^N Phi| 2^{Nj/2} (0 in 1D)
  double perpendicular = 0.0;
  Vec worst_x{0, 0};
  Vec worst_xi{0, 0};
};

struct ReducedPhaseReport {
  int j = 0;
  std::size_t nu = 0;
  ReducedPhase phase;
  std::vector<PhaseEstimate> estimates;
  /// max |Phi(x, t center)| / t over sampled t > 0; zero up to rounding for homogeneous phi.
  double euler_error = 0.0;
  bool pass = true;
};

/// High-frequency reduction at cone nu of level j, with the N = 2, 3 estimates
/// measured on cone samples and x in [-x_halfwidth, x_halfwidth]^n.
ReducedPhaseReport reduce_phase(const PhaseDescriptor& phi, const ConeNet& net, std::size_t nu,
                                double x_halfwidth = 1.0);

struct CapReport {
  ReducedPhase phase;
  double cap_radius = 0.0;
  /// Sampled sup of |grad_xi psi| on the cap.
  double gradient_sup = 0.0;
};

/// Low-frequency reduction: one reduced phase per spherical cap of angular
/// radius pi/8 (8 caps in 2D, the two half-lines in 1D).
std::vector<CapReport> reduce_phase_low_frequency(const PhaseDescriptor& phi, double x_halfwidth = 1.0);

struct PieceAmplitude {
  int j = 0;
  std::size_t nu = 0;
  ReducedPhase phase;
  std::function<cplx(const Vec& x, const Vec& xi)> evaluator;
  /// chi_nu Psi_j alone.
  std::function<double(const Vec& xi)> cutoff;
  double support_measure = 0.0;

  cplx operator()(const Vec& x, const Vec& xi) const { return evaluator(x, xi); }
};

/// A_j^nu = e^{i Phi} a chi_nu Psi_j. The support measure counts cells of a
/// square xi grid (cells_per_dim^n over |xi_k| <= 2^{j+1}) where |chi Psi| > 1e-14.
PieceAmplitude make_piece_amplitude(const AmplitudeDescriptor& a, const PhaseDescriptor& phi, const LPPartition& lp,
                                    const ConeNet& net, int j, std::size_t nu, int cells_per_dim = 512);

/// Support measure of chi_nu Psi_j for every nu (cells where |chi Psi| > 1e-14).
std::vector<double> support_measures(const ConeNet& net, int cells_per_dim = 512);

struct LevelReport {
  int j = 0;
  std::size_t centers = 0;
  double min_separation = 0.0;
  double covering_radius = 0.0;
  ChiEstimates chi;
  std::vector<double> support_measures;
};

/// Geometry and cutoff measurements for levels j_min..j_max (2D nets).
std::vector<LevelReport> decomposition_report(int j_min, int j_max, bool with_support = true);

struct PartitionCheck {
  std::size_t samples = 0;
  /// max |Psi_0 + sum_j Psi_j - 1|
  double lp_error = 0.0;
  /// max |Psi_0 + sum_j sum_nu chi_nu Psi_j - 1|
  double cone_error = 0.0;
};
/// Both partition identities on seeded uniform samples of |xi| <= 2^{j_max} (n = 2).
PartitionCheck check_partition(int j_max, std::size_t samples, std::uint64_t seed);

}  // namespace fiolab
