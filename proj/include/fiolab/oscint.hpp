#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fiolab/dyadic.hpp"
#include "fiolab/fit.hpp"
#include "fiolab/numgrid.hpp"
#include "fiolab/symbols.hpp"

namespace fiolab {

enum class QuadratureMode { automatic, direct, fast_linear_phase };

std::string mode_name(QuadratureMode mode);
QuadratureMode parse_mode(const std::string& name);

struct OperatorSpec {
  AmplitudeDescriptor amplitude;
  PhaseDescriptor phase;
  UniformGrid grid;
  QuadratureMode mode = QuadratureMode::automatic;
  /// Required for amplitudes that neither decay nor have compact xi-support.
  bool acknowledge_tail = false;
};

/// T f(x) = (2pi)^{-n} int e^{i phi(x,xi)} a(x,xi) fhat(xi) dxi on a grid.
///
/// Direct mode is the trapezoidal xi-sum at every grid x. The fast mode covers
/// phases <x,xi> + h(xi) with x-independent or separable amplitudes, applied
/// as multipliers between a forward and an inverse transform.
class FioOperator {
 public:
  /// Matrices with at most this many entries are built once and reused.
  static constexpr std::size_t kCacheEntries = std::size_t{1} << 22;

  explicit FioOperator(OperatorSpec spec, std::size_t cache_entries = kCacheEntries);

  const OperatorSpec& spec() const noexcept { return spec_; }
  QuadratureMode mode() const noexcept { return mode_; }
  /// Size of the neglected frequency tail: 0 when the xi-support fits in the grid.
  double tail_estimate() const noexcept { return tail_; }
  bool cached() const noexcept { return !matrix_.empty(); }

  SampledField apply(const SampledField& f) const;
  /// Same operator on already transformed input fhat.
  SampledField apply_spectrum(const SampledField& fhat) const;
  /// Exact conjugate transpose of the discrete operator.
  SampledField apply_adjoint(const SampledField& g) const;

 private:
  void check_field(const SampledField& f, Domain domain) const;
  void check_resolution() const;
  void row(std::size_t i, std::vector<cplx>& out) const;
  SampledField direct_spectrum(const SampledField& fhat) const;
  SampledField fast_spectrum(const SampledField& fhat) const;

  OperatorSpec spec_;
  QuadratureMode mode_ = QuadratureMode::direct;
  double tail_ = 0.0;
  /// Frequency indices where the amplitude may be nonzero.
  std::vector<std::size_t> active_;
  /// (2pi)^{-n} (delta xi)^n.
  double weight_ = 0.0;
  std::vector<cplx> matrix_;
  /// Fast mode: per-term multipliers e^{ih} sigma_r and space factors b_r.
  std::vector<std::vector<cplx>> multipliers_;
  std::vector<std::vector<cplx>> space_factors_;
};

SampledField apply_fio(const OperatorSpec& spec, const SampledField& f);

/// Kaiser-type compact window I0(beta sqrt(1-t^2)) / I0(beta), tapered
/// smoothly to zero on 0.9 < |t| < 1. C-infinity, supported in |t| < 1, with
/// Fourier coefficients that drop fast enough for short periodizations.
double kaiser_window(double t, double beta = 25.0);

/// psi(x) * window(|xi| / radius), claimed Hormander(0, 1, 0) with compact xi-support.
AmplitudeDescriptor windowed_amplitude(std::function<cplx(const Vec&)> psi, int dim, double radius,
                                       double beta = 25.0, std::string name = "windowed");

// Low-frequency kernel K(z) = int eta(xi) e^{i(psi(xi) + <z,xi>)} dxi.

struct KernelOptions {
  double r_min = 4.0;
  double r_max = 64.0;
  int radii = 17;
  /// Directions per radius (2D); 1D uses +-R.
  int angles = 64;
  /// Quadrature points per dimension across [-eta_radius, eta_radius].
  int points = 400;
  double alpha = 0.9;
};

struct KernelSample {
  double radius = 0.0;
  double max_abs = 0.0;
};

struct KernelReport {
  std::vector<KernelSample> samples;
  LineFit fit;
  double fitted_slope = 0.0;
  /// max |K| (1 + R)^{n + alpha} over the samples.
  double constant = 0.0;
  double alpha = 0.9;
  /// Samples below 1e-12 * max excluded from the fit.
  int excluded = 0;
};

struct KernelProblem {
  int dim = 2;
  std::function<double(const Vec& xi)> psi;
  std::function<double(const Vec& xi)> eta;
  /// supp eta lies in |xi| <= eta_radius.
  double eta_radius = 2.0;
};

KernelReport low_frequency_kernel(const KernelProblem& problem, const KernelOptions& options = {});
/// psi = reduced phase at x.
KernelReport low_frequency_kernel(const ReducedPhase& psi, const Vec& x, std::function<double(const Vec&)> eta,
                                  double eta_radius, const KernelOptions& options = {});
/// K on a z grid of the given shape (CSV export).
SampledField low_frequency_kernel_field(const KernelProblem& problem, const UniformGrid& z_grid, int points = 400);

// Periodization of compact-frequency-support amplitudes.

struct PeriodizeOptions {
  int modes = 8;
  /// 0 selects [max(n, n/p)] + 1 with p the claimed spatial exponent.
  int decay_order = 0;
  /// Cube side; 0 selects 2 (radius + 1).
  double cube_side = 0.0;
  /// Trapezoid points per dimension on the cube; 0 selects 256 (1D) or 96 (2D).
  int quadrature_points = 0;
  /// Multiply the reconstruction by eta (1 on |xi| <= R, 0 beyond R + 1).
  bool use_eta = true;
};

struct PeriodMode {
  std::array<int, 2> k{0, 0};
  SampledField coefficient;
  double norm = 0.0;
};

struct PeriodizationResult {
  double cube_side = 0.0;
  double support_radius = 0.0;
  int modes = 0;
  int decay_order = 0;
  double norm_exponent = kInf;
  bool use_eta = true;
  std::vector<PeriodMode> coefficients;
  /// max ||a_k|| over the shell |k|_inf = s, s = 0..K.
  std::vector<double> shell_norms;
  std::optional<LineFit> decay_fit;
  /// max_s shell_norm(s) (1 + s)^N.
  double decay_constant = 0.0;
  /// Relative sup error of the truncated series on grid samples.
  double reconstruction_error = 0.0;

  double eta(const Vec& xi) const;
  const PeriodMode* find(std::array<int, 2> k) const;
};

PeriodizationResult periodize_amplitude(const AmplitudeDescriptor& a, const UniformGrid& grid,
                                        const PeriodizeOptions& options = {});

/// sum_k a_k T_eta(f_k) with fhat_k = e^{i(2pi/L)<k,xi>} fhat, i.e. f_k(x) = f(x + 2pi k/L).
SampledField apply_periodized(const PeriodizationResult& result, const PhaseDescriptor& phase,
                              const SampledField& f);

// Non-stationary phase estimate.

struct NonstationaryProblem {
  int dim = 1;
  std::function<double(const Vec&)> amplitude;
  std::function<Jet(std::span<const Jet>)> amplitude_jet;
  std::function<double(const Vec&)> phase;
  std::function<Jet(std::span<const Jet>)> phase_jet;
  /// supp F lies in the cube [-support_radius, support_radius]^n.
  double support_radius = 1.0;
};

struct NonstationaryReport {
  int k = 0;
  std::vector<double> lambdas;
  std::vector<double> lhs;
  double rhs = 0.0;
  std::vector<double> ratios;
  double min_gradient = 0.0;
  double spread = 0.0;
  bool finite = true;
  bool stable = false;
};

/// lambda^k |int F e^{i lambda phi}| against sum_{|alpha|<=k} int |d^alpha F| |grad phi|^{-k}.
/// Stable when max ratio <= 4 min ratio. Empty lambdas selects 2^2..2^10.
NonstationaryReport verify_nonstationary_decay(const NonstationaryProblem& problem, int k,
                                               std::vector<double> lambdas = {}, int rhs_points = 256);

/// Named problems in n = 2: "bump_linear" (bump F, phi = xi_1), "annulus_quadratic"
/// (F on 1/2 < |xi| < 3/2, phi = |xi|^2/2) and "origin_quadratic" (bump F, phi = |xi|^2/2,
/// stationary at the origin).
NonstationaryProblem nonstationary_example(const std::string& name);
/// Order k used with each named example (2, 1, 1).
int nonstationary_example_order(const std::string& name);

// TT* kernel decay.

struct TTStarOptions {
  Vec x0{0.0, 0.0};
  int pairs = 16;
  /// Range of 2^j |x - y| along the diagonal slice.
  double scaled_min = 2.0;
  double scaled_max = 256.0;
  /// Sub-samples per log bin; the fit uses the bin maximum (upper envelope of
  /// the oscillating kernel).
  int envelope = 8;
  /// Quadrature points per dimension on [-2^{j+1}, 2^{j+1}].
  int points = 0;
  double tolerance = 0.2;
};

struct TTStarReport {
  int j = 0;
  double m = 0.0;
  std::vector<double> distances;
  std::vector<double> magnitudes;
  LineFit fit;
  double fitted_decay = 0.0;
  double predicted = 0.0;
  double kernel_hermitian_error = 0.0;
  int excluded = 0;
  bool pass = false;
};

/// K_j(x,y) = (2pi)^{-n} int e^{i(phi(x,xi)-phi(y,xi))} a_j(x,xi) conj(a_j(y,xi)) dxi, a_j = a Psi_j.
TTStarReport ttstar_decay_check(const AmplitudeDescriptor& a, const PhaseDescriptor& phi, int j, double m,
                                const TTStarOptions& options = {});

}  // namespace fiolab
