#include "fiolab/oscint.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "fiolab/bump.hpp"
#include "fiolab/error.hpp"
#include "fiolab/parallel.hpp"

namespace fiolab {

namespace {

double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1]; }
double norm(const Vec& v) { return std::hypot(v[0], v[1]); }

long next_pow2(double v) {
  long p = 1;
  while (static_cast<double>(p) < v) p *= 2;
  return p;
}

bool all_finite(const std::vector<cplx>& v) {
  return std::all_of(v.begin(), v.end(), [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

/// Largest |g(k) - g(k')| over axis neighbours k, k' that are both flagged.
double max_increment(const std::vector<double>& g, const std::vector<char>& mask, int dim, int n) {
  double worst = 0.0;
  const std::size_t size = g.size();
  for (std::size_t k = 0; k < size; ++k) {
    if (!mask[k]) continue;
    const int last = static_cast<int>(k % static_cast<std::size_t>(n));
    if (last + 1 < n && mask[k + 1]) worst = std::max(worst, std::abs(g[k + 1] - g[k]));
    if (dim == 2 && k + static_cast<std::size_t>(n) < size && mask[k + n]) {
      worst = std::max(worst, std::abs(g[k + n] - g[k]));
    }
  }
  return worst;
}

}  // namespace

std::string mode_name(QuadratureMode mode) {
  switch (mode) {
    case QuadratureMode::automatic: return "auto";
    case QuadratureMode::direct: return "direct";
    case QuadratureMode::fast_linear_phase: return "fast_linear_phase";
  }
  return "direct";
}

QuadratureMode parse_mode(const std::string& name) {
  if (name == "auto") return QuadratureMode::automatic;
  if (name == "direct") return QuadratureMode::direct;
  if (name == "fast" || name == "fast_linear_phase") return QuadratureMode::fast_linear_phase;
  throw ValidationError("unknown quadrature mode '" + name + "'");
}

FioOperator::FioOperator(OperatorSpec spec, std::size_t cache_entries) : spec_(std::move(spec)) {
  const AmplitudeDescriptor& a = spec_.amplitude;
  const UniformGrid& g = spec_.grid;
  if (a.arity != 1) throw ValidationError("linear operators need an amplitude of arity 1");
  if (a.dim != g.dim() || spec_.phase.dim != g.dim()) throw ValidationError("amplitude, phase and grid dimensions differ");
  if (!a.evaluator || !spec_.phase.evaluator) throw ValidationError("amplitude and phase need evaluators");

  const double xi_max = g.freq_halfwidth();
  if (a.freq_support_radius) {
    tail_ = *a.freq_support_radius <= xi_max ? 0.0 : truncation_tail_estimate(a.claimed.total_order(), g.dim(), xi_max);
  } else {
    tail_ = truncation_tail_estimate(a.claimed.total_order(), g.dim(), xi_max);
    if (!(a.claimed.total_order() < 0.0) && !spec_.acknowledge_tail) {
      throw ValidationError("amplitude '" + a.name +
                            "' neither decays in xi nor has compact xi-support; the truncation tail is not "
                            "integrable, acknowledge it to proceed");
    }
  }

  const bool fast_ok = spec_.phase.translation_form && (a.x_independent || !a.separable.empty());
  switch (spec_.mode) {
    case QuadratureMode::automatic:
      mode_ = fast_ok ? QuadratureMode::fast_linear_phase : QuadratureMode::direct;
      break;
    case QuadratureMode::fast_linear_phase:
      if (!fast_ok) {
        throw ValidationError("fast mode needs a phase <x,xi> + h(xi) and an x-independent or separable amplitude");
      }
      mode_ = QuadratureMode::fast_linear_phase;
      break;
    case QuadratureMode::direct:
      mode_ = QuadratureMode::direct;
      break;
  }

  weight_ = std::pow(g.freq_spacing() / (2.0 * kPi), g.dim());
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!a.freq_support_radius || norm(g.freq_point(k)) <= *a.freq_support_radius) active_.push_back(k);
  }
  check_resolution();

  if (mode_ == QuadratureMode::fast_linear_phase) {
    const auto& h = spec_.phase.multiplier_part;
    auto add_term = [&](const std::function<cplx(const Vec&)>& sigma, const std::function<cplx(const Vec&)>& b) {
      std::vector<cplx> m(g.size(), cplx(0.0));
      for (std::size_t k : active_) {
        const Vec xi = g.freq_point(k);
        m[k] = sigma(xi) * (h ? std::polar(1.0, h(xi)) : cplx(1.0));
      }
      multipliers_.push_back(std::move(m));
      std::vector<cplx> s;
      if (b) {
        s.resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) s[i] = b(g.point(i));
      }
      space_factors_.push_back(std::move(s));
    };
    if (a.x_independent) {
      add_term([&a](const Vec& xi) { return a(Vec{0.0, 0.0}, xi); }, {});
    } else {
      for (const auto& term : a.separable) {
        auto freq = term.freq;
        add_term([freq](const Vec& xi) { return freq(std::span<const Vec>(&xi, 1)); }, term.space);
      }
    }
    return;
  }

  if (g.size() * active_.size() <= cache_entries) {
    const std::size_t cols = active_.size();
    matrix_.resize(g.size() * cols);
    parallel_for(g.size(), [&](std::size_t i) {
      std::vector<cplx> r;
      row(i, r);
      std::copy(r.begin(), r.end(), matrix_.begin() + static_cast<std::ptrdiff_t>(i * cols));
    });
  }
}

void FioOperator::check_resolution() const {
  // The residual phase phi - <x,xi> is what the grid must resolve: the
  // <x,xi> part is exact on the periodic grid.
  const UniformGrid& g = spec_.grid;
  const int n = g.points_per_dim();
  std::vector<char> mask(g.size(), 0);
  for (std::size_t k : active_) mask[k] = 1;
  double worst = 0.0;
  if (mode_ == QuadratureMode::fast_linear_phase || spec_.phase.is_linear()) {
    const auto& h = spec_.phase.multiplier_part;
    if (h) {
      std::vector<double> r(g.size(), 0.0);
      for (std::size_t k : active_) r[k] = h(g.freq_point(k));
      worst = max_increment(r, mask, g.dim(), n);
    }
  } else {
    std::vector<double> per_row(g.size(), 0.0);
    parallel_for(g.size(), [&](std::size_t i) {
      const Vec x = g.point(i);
      std::vector<double> r(g.size(), 0.0);
      for (std::size_t k : active_) {
        const Vec xi = g.freq_point(k);
        r[k] = spec_.phase(x, xi) - dot(x, xi);
      }
      per_row[i] = max_increment(r, mask, g.dim(), n);
    });
    for (double v : per_row) worst = std::max(worst, v);
  }
  if (!std::isfinite(worst)) throw NumericError("nonfinite", "phase is not finite on the frequency grid");
  if (worst > kPi) {
    // Keeping h fixed, X and N scale together with the increment.
    const long factor = next_pow2(worst / kPi);
    const long required = factor * n;
    throw UnderresolvedError("phase increment " + std::to_string(worst) +
                                 " per frequency cell exceeds pi; use X >= " +
                                 std::to_string(g.space_halfwidth() * static_cast<double>(factor)) +
                                 " with N >= " + std::to_string(required),
                             required);
  }
}

void FioOperator::row(std::size_t i, std::vector<cplx>& out) const {
  const UniformGrid& g = spec_.grid;
  const Vec x = g.point(i);
  out.resize(active_.size());
  for (std::size_t c = 0; c < active_.size(); ++c) {
    const Vec xi = g.freq_point(active_[c]);
    out[c] = spec_.amplitude(x, xi) * std::polar(weight_, spec_.phase(x, xi));
  }
}

void FioOperator::check_field(const SampledField& f, Domain domain) const {
  if (!(f.grid == spec_.grid)) throw ValidationError("field grid does not match the operator grid");
  if (f.values.size() != spec_.grid.size()) throw ValidationError("field length does not match grid");
  (void)domain;
}

SampledField FioOperator::apply(const SampledField& f) const {
  check_field(f, Domain::space);
  return apply_spectrum(fourier_transform(f, Direction::forward));
}

SampledField FioOperator::apply_spectrum(const SampledField& fhat) const {
  check_field(fhat, Domain::frequency);
  SampledField out = mode_ == QuadratureMode::fast_linear_phase ? fast_spectrum(fhat) : direct_spectrum(fhat);
  if (!all_finite(out.values)) throw NumericError("nonfinite", "operator output is not finite");
  return out;
}

SampledField FioOperator::direct_spectrum(const SampledField& fhat) const {
  const UniformGrid& g = spec_.grid;
  SampledField out(g, Domain::space);
  const std::size_t cols = active_.size();
  std::vector<cplx> input(cols);
  for (std::size_t c = 0; c < cols; ++c) input[c] = fhat.values[active_[c]];
  parallel_for(g.size(), [&](std::size_t i) {
    std::vector<cplx> local;
    const cplx* r = nullptr;
    if (!matrix_.empty()) {
      r = matrix_.data() + i * cols;
    } else {
      row(i, local);
      r = local.data();
    }
    cplx acc(0.0);
    for (std::size_t c = 0; c < cols; ++c) acc += r[c] * input[c];
    out.values[i] = acc;
  });
  return out;
}

SampledField FioOperator::fast_spectrum(const SampledField& fhat) const {
  const UniformGrid& g = spec_.grid;
  SampledField out(g, Domain::space);
  for (std::size_t t = 0; t < multipliers_.size(); ++t) {
    SampledField spec(g, Domain::frequency);
    for (std::size_t k = 0; k < g.size(); ++k) spec.values[k] = multipliers_[t][k] * fhat.values[k];
    const SampledField u = fourier_transform(spec, Direction::inverse);
    const auto& b = space_factors_[t];
    for (std::size_t i = 0; i < g.size(); ++i) out.values[i] += b.empty() ? u.values[i] : b[i] * u.values[i];
  }
  return out;
}

SampledField FioOperator::apply_adjoint(const SampledField& gfield) const {
  check_field(gfield, Domain::space);
  const UniformGrid& g = spec_.grid;
  SampledField y(g, Domain::frequency);
  if (mode_ == QuadratureMode::fast_linear_phase) {
    // The inverse transform matrix is (dxi/2pi)^n / h^n times the conjugate
    // transpose of the forward one.
    const double scale = weight_ / g.cell_volume();
    for (std::size_t t = 0; t < multipliers_.size(); ++t) {
      SampledField u(g, Domain::space);
      const auto& b = space_factors_[t];
      for (std::size_t i = 0; i < g.size(); ++i) u.values[i] = b.empty() ? gfield.values[i] : std::conj(b[i]) * gfield.values[i];
      const SampledField v = fourier_transform(u, Direction::forward);
      for (std::size_t k = 0; k < g.size(); ++k) y.values[k] += std::conj(multipliers_[t][k]) * v.values[k] * scale;
    }
  } else {
    const std::size_t cols = active_.size();
    std::vector<cplx> col_values(cols);
    parallel_for(cols, [&](std::size_t c) {
      const std::size_t k = active_[c];
      const Vec xi = g.freq_point(k);
      cplx acc(0.0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        cplx m;
        if (!matrix_.empty()) {
          m = matrix_[i * cols + c];
        } else {
          const Vec x = g.point(i);
          m = spec_.amplitude(x, xi) * std::polar(weight_, spec_.phase(x, xi));
        }
        acc += std::conj(m) * gfield.values[i];
      }
      col_values[c] = acc;
    });
    for (std::size_t c = 0; c < cols; ++c) y.values[active_[c]] = col_values[c];
  }
  SampledField out = forward_transform_adjoint(y);
  if (!all_finite(out.values)) throw NumericError("nonfinite", "adjoint output is not finite");
  return out;
}

NonstationaryProblem nonstationary_example(const std::string& name) {
  NonstationaryProblem pr;
  pr.dim = 2;
  auto quadratic = [](const auto& a, const auto& b) { return 0.5 * (a * a + b * b); };
  if (name == "bump_linear") {
    pr.amplitude = [](const Vec& xi) { return smooth::bump_sq(xi[0] * xi[0] + xi[1] * xi[1]); };
    pr.amplitude_jet = [](std::span<const Jet> xi) { return smooth::bump_sq(xi[0] * xi[0] + xi[1] * xi[1]); };
    pr.phase = [](const Vec& xi) { return xi[0]; };
    pr.phase_jet = [](std::span<const Jet> xi) { return xi[0] * 1.0; };
    pr.support_radius = 1.0;
  } else if (name == "annulus_quadratic") {
    pr.amplitude = [](const Vec& xi) { return smooth::bump(2.0 * (std::hypot(xi[0], xi[1]) - 1.0)); };
    pr.amplitude_jet = [](std::span<const Jet> xi) {
      return smooth::bump(2.0 * (sqrt(xi[0] * xi[0] + xi[1] * xi[1]) - 1.0));
    };
    pr.phase = [quadratic](const Vec& xi) { return quadratic(xi[0], xi[1]); };
    pr.phase_jet = [quadratic](std::span<const Jet> xi) { return quadratic(xi[0], xi[1]); };
    pr.support_radius = 1.5;
  } else if (name == "origin_quadratic") {
    pr = nonstationary_example("bump_linear");
    pr.phase = [quadratic](const Vec& xi) { return quadratic(xi[0], xi[1]); };
    pr.phase_jet = [quadratic](std::span<const Jet> xi) { return quadratic(xi[0], xi[1]); };
  } else {
    throw ValidationError("unknown non-stationary example '" + name + "'");
  }
  return pr;
}

int nonstationary_example_order(const std::string& name) {
  if (name == "bump_linear") return 2;
  if (name == "annulus_quadratic" || name == "origin_quadratic") return 1;
  throw ValidationError("unknown non-stationary example '" + name + "'");
}

SampledField apply_fio(const OperatorSpec& spec, const SampledField& f) {
  // One-shot application: skip the matrix cache.
  return FioOperator(spec, 0).apply(f);
}

double kaiser_window(double t, double beta) {
  const double a = std::abs(t);
  if (!(a < 1.0)) return 0.0;
  const double taper = 1.0 - smooth::step((a - 0.9) / 0.1);
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - a * a)) / std::cyl_bessel_i(0.0, beta) * taper;
}

AmplitudeDescriptor windowed_amplitude(std::function<cplx(const Vec&)> psi, int dim, double radius, double beta,
                                       std::string name) {
  if (!(radius > 0.0)) throw ValidationError("window radius must be positive");
  auto sigma = [radius, beta](const Vec& xi) { return cplx(kaiser_window(norm(xi) / radius, beta)); };
  AmplitudeDescriptor a;
  a.arity = 1;
  a.dim = dim;
  a.evaluator = [psi, sigma](const Vec& x, std::span<const Vec> xi) { return psi(x) * sigma(xi[0]); };
  a.claimed = ClassTag::hormander(0.0, 1.0, 0.0);
  a.freq_support_radius = radius;
  a.separable = {{psi, [sigma](std::span<const Vec> xi) { return sigma(xi[0]); }}};
  a.name = std::move(name);
  return a;
}

// ---------------------------------------------------------------------------
// Low-frequency kernel

namespace {

struct KernelQuadrature {
  int dim = 1;
  int points = 0;
  std::vector<double> nodes;
  /// eta e^{i psi} (delta)^n, row-major.
  std::vector<cplx> weights;
};

KernelQuadrature kernel_quadrature(const KernelProblem& p, int points, double z_max) {
  if (p.dim != 1 && p.dim != 2) throw ValidationError("unsupported dimension");
  if (!p.psi || !p.eta) throw ValidationError("kernel needs psi and eta");
  if (!(p.eta_radius > 0.0)) throw ValidationError("eta radius must be positive");
  if (points < 8) throw ValidationError("kernel quadrature needs at least 8 points");
  KernelQuadrature q;
  q.dim = p.dim;
  q.points = points;
  const double delta = 2.0 * p.eta_radius / points;
  for (int m = 0; m < points; ++m) q.nodes.push_back(-p.eta_radius + m * delta);
  const std::size_t size = p.dim == 1 ? points : static_cast<std::size_t>(points) * points;
  std::vector<double> psi(size, 0.0);
  std::vector<char> mask(size, 0);
  q.weights.assign(size, cplx(0.0));
  const double cell = std::pow(delta, p.dim);
  for (std::size_t s = 0; s < size; ++s) {
    const Vec xi = p.dim == 1 ? Vec{q.nodes[s], 0.0} : Vec{q.nodes[s / points], q.nodes[s % points]};
    const double e = p.eta(xi);
    if (e == 0.0) continue;
    psi[s] = p.psi(xi);
    mask[s] = 1;
    q.weights[s] = e * std::polar(cell, psi[s]);
  }
  if (!all_finite(q.weights)) throw NumericError("nonfinite", "kernel integrand is not finite");
  // Both psi and <z, xi> advance along each axis.
  const double worst = max_increment(psi, mask, p.dim, points) + z_max * delta;
  if (worst > kPi) {
    const long required = next_pow2(points * worst / kPi);
    throw UnderresolvedError("kernel phase increment " + std::to_string(worst) + " per cell exceeds pi; need " +
                                 std::to_string(required) + " points per dimension",
                             required);
  }
  return q;
}

cplx kernel_at(const KernelQuadrature& q, const Vec& z) {
  const int n = q.points;
  if (q.dim == 1) {
    cplx acc(0.0);
    for (int m = 0; m < n; ++m) acc += q.weights[m] * std::polar(1.0, z[0] * q.nodes[m]);
    return acc;
  }
  std::vector<cplx> e2(n);
  for (int m = 0; m < n; ++m) e2[m] = std::polar(1.0, z[1] * q.nodes[m]);
  cplx acc(0.0);
  for (int m1 = 0; m1 < n; ++m1) {
    cplx inner(0.0);
    const cplx* w = q.weights.data() + static_cast<std::size_t>(m1) * n;
    for (int m2 = 0; m2 < n; ++m2) inner += w[m2] * e2[m2];
    acc += std::polar(1.0, z[0] * q.nodes[m1]) * inner;
  }
  return acc;
}

}  // namespace

KernelReport low_frequency_kernel(const KernelProblem& problem, const KernelOptions& options) {
  if (!(options.r_min > 0.0) || !(options.r_max > options.r_min) || options.radii < 2) {
    throw ValidationError("kernel radii need 0 < r_min < r_max and at least two radii");
  }
  const KernelQuadrature q = kernel_quadrature(problem, options.points, options.r_max);
  const int angles = problem.dim == 1 ? 2 : std::max(1, options.angles);
  std::vector<double> radii(options.radii);
  for (int r = 0; r < options.radii; ++r) {
    radii[r] = options.r_min * std::pow(options.r_max / options.r_min, static_cast<double>(r) / (options.radii - 1));
  }
  std::vector<double> values(radii.size() * angles);
  parallel_for(values.size(), [&](std::size_t s) {
    const double rad = radii[s / angles];
    const int a = static_cast<int>(s % angles);
    Vec z{0.0, 0.0};
    if (problem.dim == 1) {
      z[0] = a == 0 ? rad : -rad;
    } else {
      const double th = 2.0 * kPi * a / angles;
      z = {rad * std::cos(th), rad * std::sin(th)};
    }
    values[s] = std::abs(kernel_at(q, z));
  });

  KernelReport report;
  report.alpha = options.alpha;
  double overall = 0.0;
  for (std::size_t r = 0; r < radii.size(); ++r) {
    double m = 0.0;
    for (int a = 0; a < angles; ++a) m = std::max(m, values[r * angles + a]);
    report.samples.push_back({radii[r], m});
    overall = std::max(overall, m);
  }
  std::vector<double> lx;
  std::vector<double> ly;
  for (const auto& s : report.samples) {
    report.constant = std::max(report.constant, s.max_abs * std::pow(1.0 + s.radius, problem.dim + options.alpha));
    if (s.max_abs <= 1e-12 * overall) {
      ++report.excluded;
      continue;
    }
    lx.push_back(std::log(s.radius));
    ly.push_back(std::log(s.max_abs));
  }
  if (lx.size() < 2) throw NumericError("fit", "kernel is below the noise floor on the whole radius range");
  report.fit = fit_line(lx, ly);
  report.fitted_slope = report.fit.slope;
  return report;
}

KernelReport low_frequency_kernel(const ReducedPhase& psi, const Vec& x, std::function<double(const Vec&)> eta,
                                  double eta_radius, const KernelOptions& options) {
  KernelProblem p;
  p.dim = psi.base.dim;
  p.psi = [psi, x](const Vec& xi) { return psi.value(x, xi); };
  p.eta = std::move(eta);
  p.eta_radius = eta_radius;
  return low_frequency_kernel(p, options);
}

SampledField low_frequency_kernel_field(const KernelProblem& problem, const UniformGrid& z_grid, int points) {
  if (z_grid.dim() != problem.dim) throw ValidationError("z grid dimension differs from the kernel dimension");
  const double z_max = z_grid.space_halfwidth() * std::sqrt(static_cast<double>(problem.dim));
  const KernelQuadrature q = kernel_quadrature(problem, points, z_max);
  SampledField out(z_grid, Domain::space);
  parallel_for(z_grid.size(), [&](std::size_t i) { out.values[i] = kernel_at(q, z_grid.point(i)); });
  return out;
}

// ---------------------------------------------------------------------------
// Periodization

double PeriodizationResult::eta(const Vec& xi) const {
  if (!use_eta) return 1.0;
  return 1.0 - smooth::step(norm(xi) - support_radius);
}

const PeriodMode* PeriodizationResult::find(std::array<int, 2> k) const {
  for (const auto& m : coefficients) {
    if (m.k == k) return &m;
  }
  return nullptr;
}

PeriodizationResult periodize_amplitude(const AmplitudeDescriptor& a, const UniformGrid& grid,
                                        const PeriodizeOptions& options) {
  if (!a.freq_support_radius) throw ValidationError("periodization needs an amplitude with compact xi-support");
  if (a.arity != 1 || a.dim != grid.dim()) throw ValidationError("amplitude must be linear and match the grid dimension");
  if (options.modes < 1) throw ValidationError("mode cutoff must be at least 1");
  const int n = grid.dim();
  const double radius = *a.freq_support_radius;
  const double side = options.cube_side > 0.0 ? options.cube_side : 2.0 * (radius + 1.0);
  if (radius > side / 2.0) throw ValidationError("support radius exceeds half the cube side");

  PeriodizationResult res;
  res.cube_side = side;
  res.support_radius = radius;
  res.modes = options.modes;
  res.use_eta = options.use_eta;
  res.norm_exponent = a.claimed.space_exponent();
  const double p = res.norm_exponent;
  res.decay_order = options.decay_order > 0
                        ? options.decay_order
                        : static_cast<int>(std::floor(std::max<double>(n, std::isinf(p) ? 0.0 : n / p))) + 1;

  const int K = options.modes;
  const int width = 2 * K + 1;
  const int M = options.quadrature_points > 0 ? options.quadrature_points : (n == 1 ? 256 : 96);
  std::vector<double> nodes(M);
  for (int m = 0; m < M; ++m) nodes[m] = -side / 2.0 + side * m / M;
  // E[k][m] = e^{-i 2pi k xi_m / L} / M.
  std::vector<cplx> E(static_cast<std::size_t>(width) * M);
  for (int k = -K; k <= K; ++k) {
    for (int m = 0; m < M; ++m) E[static_cast<std::size_t>(k + K) * M + m] = std::polar(1.0 / M, -2.0 * kPi * k * nodes[m] / side);
  }

  const std::size_t nk = n == 1 ? width : static_cast<std::size_t>(width) * width;
  std::vector<std::vector<cplx>> coeff(nk, std::vector<cplx>(grid.size()));
  parallel_for(grid.size(), [&](std::size_t i) {
    const Vec x = grid.point(i);
    if (n == 1) {
      std::vector<cplx> v(M);
      for (int m = 0; m < M; ++m) v[m] = a(x, Vec{nodes[m], 0.0});
      for (int k = 0; k < width; ++k) {
        cplx acc(0.0);
        for (int m = 0; m < M; ++m) acc += E[static_cast<std::size_t>(k) * M + m] * v[m];
        coeff[k][i] = acc;
      }
      return;
    }
    // w[m1][k2] = sum_{m2} v[m1][m2] E[k2][m2], then c[k1][k2] = sum_{m1} E[k1][m1] w[m1][k2].
    std::vector<cplx> w(static_cast<std::size_t>(M) * width);
    std::vector<cplx> v(M);
    for (int m1 = 0; m1 < M; ++m1) {
      for (int m2 = 0; m2 < M; ++m2) v[m2] = a(x, Vec{nodes[m1], nodes[m2]});
      for (int k2 = 0; k2 < width; ++k2) {
        cplx acc(0.0);
        for (int m2 = 0; m2 < M; ++m2) acc += E[static_cast<std::size_t>(k2) * M + m2] * v[m2];
        w[static_cast<std::size_t>(m1) * width + k2] = acc;
      }
    }
    for (int k1 = 0; k1 < width; ++k1) {
      for (int k2 = 0; k2 < width; ++k2) {
        cplx acc(0.0);
        for (int m1 = 0; m1 < M; ++m1) acc += E[static_cast<std::size_t>(k1) * M + m1] * w[static_cast<std::size_t>(m1) * width + k2];
        coeff[static_cast<std::size_t>(k1) * width + k2][i] = acc;
      }
    }
  });

  res.shell_norms.assign(K + 1, 0.0);
  for (std::size_t idx = 0; idx < nk; ++idx) {
    PeriodMode mode;
    if (n == 1) {
      mode.k = {static_cast<int>(idx) - K, 0};
    } else {
      mode.k = {static_cast<int>(idx / width) - K, static_cast<int>(idx % width) - K};
    }
    mode.coefficient = SampledField(grid, std::move(coeff[idx]), Domain::space);
    if (!all_finite(mode.coefficient.values)) throw NumericError("nonfinite", "Fourier coefficient is not finite");
    mode.norm = lp_norm(mode.coefficient, p);
    const int shell = std::max(std::abs(mode.k[0]), std::abs(mode.k[1]));
    res.shell_norms[shell] = std::max(res.shell_norms[shell], mode.norm);
    res.coefficients.push_back(std::move(mode));
  }

  const double top = *std::max_element(res.shell_norms.begin(), res.shell_norms.end());
  std::vector<double> lx;
  std::vector<double> ly;
  for (int s = 0; s <= K; ++s) {
    res.decay_constant = std::max(res.decay_constant, res.shell_norms[s] * std::pow(1.0 + s, res.decay_order));
    if (s == 0 || res.shell_norms[s] <= 1e-12 * top) continue;
    lx.push_back(std::log(1.0 + s));
    ly.push_back(std::log(res.shell_norms[s]));
  }
  if (lx.size() >= 2) res.decay_fit = fit_line(lx, ly);

  // Reconstruction on a strided subset of grid x and of frequency grid
  // points inside the cube.
  const int np = grid.points_per_dim();
  const int xstride = std::max(1, np / 64);
  std::vector<std::size_t> xs;
  std::vector<Vec> xis;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto idx = grid.unflatten(i);
    if (idx[0] % xstride == 0 && (n == 1 || idx[1] % xstride == 0)) xs.push_back(i);
  }
  std::vector<double> axis;
  for (int k = 0; k < np; ++k) {
    const double v = grid.frequency(k);
    if (std::abs(v) < side / 2.0) axis.push_back(v);
  }
  const std::size_t fstride = std::max<std::size_t>(1, axis.size() / (n == 1 ? 256 : 48));
  std::vector<double> sub;
  for (std::size_t k = 0; k < axis.size(); k += fstride) sub.push_back(axis[k]);
  for (double u : sub) {
    if (n == 1) {
      xis.push_back({u, 0.0});
    } else {
      for (double w : sub) xis.push_back({u, w});
    }
  }
  std::vector<double> err(xs.size(), 0.0);
  std::vector<double> mag(xs.size(), 0.0);
  parallel_for(xs.size(), [&](std::size_t s) {
    const std::size_t i = xs[s];
    const Vec x = grid.point(i);
    for (const Vec& xi : xis) {
      cplx sum(0.0);
      for (const auto& mode : res.coefficients) {
        sum += mode.coefficient.values[i] * std::polar(1.0, 2.0 * kPi * (mode.k[0] * xi[0] + mode.k[1] * xi[1]) / side);
      }
      sum *= res.eta(xi);
      const cplx exact = a(x, xi);
      err[s] = std::max(err[s], std::abs(sum - exact));
      mag[s] = std::max(mag[s], std::abs(exact));
    }
  });
  const double emax = err.empty() ? 0.0 : *std::max_element(err.begin(), err.end());
  const double amax = mag.empty() ? 0.0 : *std::max_element(mag.begin(), mag.end());
  res.reconstruction_error = amax > 0.0 ? emax / amax : emax;
  return res;
}

SampledField apply_periodized(const PeriodizationResult& result, const PhaseDescriptor& phase, const SampledField& f) {
  const UniformGrid& g = f.grid;
  if (result.coefficients.empty() || !(result.coefficients.front().coefficient.grid == g)) {
    throw ValidationError("field grid does not match the periodization grid");
  }
  OperatorSpec spec;
  spec.grid = g;
  spec.phase = phase;
  AmplitudeDescriptor eta;
  eta.arity = 1;
  eta.dim = g.dim();
  auto sigma = [&result](const Vec& xi) { return cplx(result.eta(xi)); };
  eta.evaluator = [sigma](const Vec&, std::span<const Vec> xi) { return sigma(xi[0]); };
  eta.claimed = ClassTag::hormander(0.0, 1.0, 0.0);
  if (result.use_eta) eta.freq_support_radius = result.support_radius + 1.0;
  eta.x_independent = true;
  eta.separable = {{[](const Vec&) { return cplx(1.0); }, [sigma](std::span<const Vec> xi) { return sigma(xi[0]); }}};
  eta.name = "eta";
  spec.amplitude = eta;
  spec.acknowledge_tail = true;
  const FioOperator op(spec);

  const SampledField fhat = fourier_transform(f, Direction::forward);
  SampledField out(g, Domain::space);
  for (const auto& mode : result.coefficients) {
    SampledField shifted(g, Domain::frequency);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Vec xi = g.freq_point(k);
      shifted.values[k] = fhat.values[k] *
                          std::polar(1.0, 2.0 * kPi * (mode.k[0] * xi[0] + mode.k[1] * xi[1]) / result.cube_side);
    }
    const SampledField u = op.apply_spectrum(shifted);
    for (std::size_t i = 0; i < g.size(); ++i) out.values[i] += mode.coefficient.values[i] * u.values[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Non-stationary phase

namespace {

std::vector<Jet> point_jets(int dim, const Vec& xi, int order) {
  auto layout = JetLayout::get(dim, order);
  std::vector<Jet> v;
  for (int d = 0; d < dim; ++d) v.push_back(Jet::variable(layout, d, xi[d]));
  return v;
}

Vec jet_gradient(const Jet& j, int dim) {
  Vec g{0.0, 0.0};
  for (int d = 0; d < dim; ++d) {
    std::array<int, 2> e{0, 0};
    e[d] = 1;
    g[d] = j.derivative(std::span<const int>(e.data(), dim)).real();
  }
  return g;
}

}  // namespace

NonstationaryReport verify_nonstationary_decay(const NonstationaryProblem& problem, int k, std::vector<double> lambdas,
                                               int rhs_points) {
  const int n = problem.dim;
  if (n != 1 && n != 2) throw ValidationError("unsupported dimension");
  if (k < 0) throw ValidationError("k must be nonnegative");
  if (!problem.amplitude || !problem.amplitude_jet || !problem.phase || !problem.phase_jet) {
    throw ValidationError("non-stationary check needs value and jet evaluators");
  }
  if (!(problem.support_radius > 0.0)) throw ValidationError("support radius must be positive");
  if (lambdas.empty()) {
    for (int e = 2; e <= 10; ++e) lambdas.push_back(std::ldexp(1.0, e));
  }
  for (double l : lambdas) {
    if (!(l > 0.0)) throw ValidationError("lambda values must be positive");
  }
  const double rho = problem.support_radius;
  // Vertex grid with an even count so the origin is a node.
  const int P = std::max(16, rhs_points + rhs_points % 2);
  const double delta = 2.0 * rho / P;
  const std::size_t per = static_cast<std::size_t>(P) + 1;
  const std::size_t size = n == 1 ? per : per * per;
  auto node = [&](std::size_t s) {
    return n == 1 ? Vec{-rho + static_cast<double>(s) * delta, 0.0}
                  : Vec{-rho + static_cast<double>(s / per) * delta, -rho + static_cast<double>(s % per) * delta};
  };

  const auto alphas = multi_indices(n, 0, k);
  std::vector<double> rhs_terms(size, 0.0);
  std::vector<double> grad(size, kInf);
  parallel_for(size, [&](std::size_t s) {
    const Vec xi = node(s);
    if (problem.amplitude(xi) == 0.0) return;
    const auto vf = point_jets(n, xi, std::max(k, 0));
    const Jet F = problem.amplitude_jet(vf);
    const auto vp = point_jets(n, xi, 1);
    const double g = norm(jet_gradient(problem.phase_jet(vp), n));
    grad[s] = g;
    double sum = 0.0;
    for (const auto& alpha : alphas) sum += std::abs(F.derivative(alpha));
    rhs_terms[s] = sum * std::pow(g, -k);
  });

  std::size_t best = 0;
  for (std::size_t s = 1; s < size; ++s) {
    if (grad[s] < grad[best]) best = s;
  }
  if (std::isinf(grad[best])) throw ValidationError("amplitude vanishes on the whole support box");
  double min_grad = grad[best];
  // Newton on grad phi = 0 from the best node catches critical points between nodes.
  Vec xi = node(best);
  for (int it = 0; it < 30 && min_grad > 1e-6; ++it) {
    const Jet ph = problem.phase_jet(point_jets(n, xi, 2));
    const Vec g = jet_gradient(ph, n);
    Vec step{0.0, 0.0};
    if (n == 1) {
      const int a2[1] = {2};
      const double h = ph.derivative(a2).real();
      if (h == 0.0) break;
      step[0] = g[0] / h;
    } else {
      const int a20[2] = {2, 0};
      const int a11[2] = {1, 1};
      const int a02[2] = {0, 2};
      const double h11 = ph.derivative(a20).real();
      const double h12 = ph.derivative(a11).real();
      const double h22 = ph.derivative(a02).real();
      const double det = h11 * h22 - h12 * h12;
      if (det == 0.0) break;
      step = {(h22 * g[0] - h12 * g[1]) / det, (h11 * g[1] - h12 * g[0]) / det};
    }
    xi = {xi[0] - step[0], xi[1] - step[1]};
    if (std::abs(xi[0]) > rho || std::abs(xi[1]) > rho || problem.amplitude(xi) == 0.0) break;
    min_grad = std::min(min_grad, norm(jet_gradient(problem.phase_jet(point_jets(n, xi, 1)), n)));
  }
  if (min_grad <= 1e-6) {
    throw ValidationError("stationary point detected: |grad phi| = " + std::to_string(min_grad) +
                          " on the support of F");
  }

  NonstationaryReport report;
  report.k = k;
  report.min_gradient = min_grad;
  report.lambdas = lambdas;
  double g_max = 0.0;
  NeumaierSum rhs;
  for (std::size_t s = 0; s < size; ++s) {
    rhs.add(rhs_terms[s]);
    if (std::isfinite(grad[s])) g_max = std::max(g_max, grad[s]);
  }
  report.rhs = rhs.result() * std::pow(delta, n);

  for (double lambda : lambdas) {
    // Quarter-period phase steps keep the trapezoid spectrally accurate.
    const int Q = static_cast<int>(std::max<long>(P, next_pow2(2.0 * rho * lambda * g_max / (kPi / 2.0))));
    const double d = 2.0 * rho / Q;
    const std::size_t qper = static_cast<std::size_t>(Q) + 1;
    const std::size_t rows = n == 1 ? 1 : qper;
    std::vector<cplx> partial(rows);
    parallel_for(rows, [&](std::size_t r) {
      cplx acc(0.0);
      for (std::size_t c = 0; c < qper; ++c) {
        const Vec p = n == 1 ? Vec{-rho + static_cast<double>(c) * d, 0.0}
                             : Vec{-rho + static_cast<double>(r) * d, -rho + static_cast<double>(c) * d};
        const double f = problem.amplitude(p);
        if (f != 0.0) acc += f * std::polar(1.0, lambda * problem.phase(p));
      }
      partial[r] = acc;
    });
    cplx total(0.0);
    for (const auto& v : partial) total += v;
    const double lhs = std::pow(lambda, k) * std::abs(total) * std::pow(d, n);
    report.lhs.push_back(lhs);
    report.ratios.push_back(lhs / report.rhs);
  }
  const auto [lo, hi] = std::minmax_element(report.ratios.begin(), report.ratios.end());
  report.finite = std::isfinite(report.rhs) &&
                  std::all_of(report.ratios.begin(), report.ratios.end(), [](double r) { return std::isfinite(r); });
  report.spread = *lo > 0.0 ? *hi / *lo : kInf;
  report.stable = report.finite && *hi <= 4.0 * *lo;
  return report;
}

// ---------------------------------------------------------------------------
// TT* kernel

TTStarReport ttstar_decay_check(const AmplitudeDescriptor& a, const PhaseDescriptor& phi, int j, double m,
                                const TTStarOptions& options) {
  const int n = phi.dim;
  if (a.arity != 1 || a.dim != n) throw ValidationError("amplitude must be linear and match the phase dimension");
  if (!phi.homogeneous_degree_1) throw ValidationError("TT* check needs a phase homogeneous of degree 1");
  if (!(m > n)) throw ValidationError("decay order M must exceed the dimension");
  if (j < 1) throw ValidationError("level j must be at least 1");
  if (options.pairs < 3 || !(options.scaled_min > 0.0) || !(options.scaled_max > options.scaled_min)) {
    throw ValidationError("TT* slice needs at least 3 pairs and 0 < scaled_min < scaled_max");
  }
  PhaseBox box;
  box.x_samples = 3;
  box.radial_samples = 3;
  box.angular_samples = 8;
  if (!(verify_phase(phi, 2, box).snd_constant > 0.0)) {
    throw ValidationError("phase fails the non-degeneracy condition");
  }

  const double scale = std::ldexp(1.0, j);
  const double rho = 2.0 * scale;
  const double d_max = options.scaled_max / scale;
  int P = options.points;
  // Phase steps of at most 0.8 pi at the largest distance keep aliases of the
  // kernel farther out than the sample itself.
  if (P <= 0) P = static_cast<int>(std::max<long>(n == 1 ? 1024 : 256, next_pow2(2.0 * rho * d_max / (0.8 * kPi))));
  const double delta = 2.0 * rho / P;
  const std::size_t size = n == 1 ? static_cast<std::size_t>(P) : static_cast<std::size_t>(P) * P;
  std::vector<Vec> nodes(size);
  for (std::size_t s = 0; s < size; ++s) {
    nodes[s] = n == 1 ? Vec{-rho + static_cast<double>(s) * delta, 0.0}
                      : Vec{-rho + static_cast<double>(s / P) * delta, -rho + static_cast<double>(s % P) * delta};
  }
  std::vector<double> cutoff(size);
  std::vector<char> mask(size, 0);
  for (std::size_t s = 0; s < size; ++s) {
    const Vec& xi = nodes[s];
    cutoff[s] = LPPartition::psi_sq(j, xi[0] * xi[0] + xi[1] * xi[1]);
    mask[s] = cutoff[s] != 0.0;
  }

  Vec dir = n == 1 ? Vec{1.0, 0.0} : Vec{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
  const int sub = std::max(1, options.envelope);
  const double ratio = std::pow(options.scaled_max / options.scaled_min, 1.0 / (options.pairs - 1));
  std::vector<Vec> points{options.x0};
  TTStarReport report;
  report.j = j;
  report.m = m;
  report.predicted = -m;
  for (int p = 0; p < options.pairs; ++p) {
    const double s = options.scaled_min * std::pow(ratio, p);
    report.distances.push_back(s / scale);
    for (int q = 0; q < sub; ++q) {
      const double t = s * std::pow(ratio, static_cast<double>(q) / sub) / scale;
      points.push_back({options.x0[0] + t * dir[0], options.x0[1] + t * dir[1]});
    }
  }

  // Per point: phi and a_j on the nodes.
  std::vector<std::vector<double>> phase(points.size(), std::vector<double>(size, 0.0));
  std::vector<std::vector<cplx>> amp(points.size(), std::vector<cplx>(size, cplx(0.0)));
  parallel_for(points.size(), [&](std::size_t q) {
    for (std::size_t s = 0; s < size; ++s) {
      if (!mask[s]) continue;
      phase[q][s] = phi(points[q], nodes[s]);
      amp[q][s] = a(points[q], nodes[s]) * cutoff[s];
    }
  });
  double worst = 0.0;
  for (std::size_t q = 1; q < points.size(); ++q) {
    std::vector<double> diff(size);
    for (std::size_t s = 0; s < size; ++s) diff[s] = phase[0][s] - phase[q][s];
    worst = std::max(worst, max_increment(diff, mask, n, P));
  }
  if (!std::isfinite(worst)) throw NumericError("nonfinite", "phase is not finite on the TT* grid");
  if (worst > kPi) {
    const long required = next_pow2(P * worst / kPi);
    throw UnderresolvedError("TT* phase increment " + std::to_string(worst) + " per cell exceeds pi; need " +
                                 std::to_string(required) + " points per dimension",
                             required);
  }

  const double w = std::pow(delta / (2.0 * kPi), n);
  auto kernel = [&](std::size_t p, std::size_t q) {
    cplx acc(0.0);
    for (std::size_t s = 0; s < size; ++s) {
      if (!mask[s]) continue;
      acc += std::polar(1.0, phase[p][s] - phase[q][s]) * (amp[p][s] * std::conj(amp[q][s]));
    }
    return acc * w;
  };
  const std::size_t samples = points.size() - 1;
  std::vector<cplx> kxy(samples);
  std::vector<cplx> kyx(samples);
  parallel_for(2 * samples, [&](std::size_t t) {
    if (t < samples) {
      kxy[t] = kernel(0, t + 1);
    } else {
      kyx[t - samples] = kernel(t - samples + 1, 0);
    }
  });
  const std::size_t pairs = static_cast<std::size_t>(options.pairs);
  double top = 0.0;
  for (std::size_t p = 0; p < pairs; ++p) {
    double bin = 0.0;
    for (int q = 0; q < sub; ++q) {
      const std::size_t t = p * sub + q;
      bin = std::max(bin, std::abs(kxy[t]));
      report.kernel_hermitian_error = std::max(report.kernel_hermitian_error, std::abs(kxy[t] - std::conj(kyx[t])));
    }
    report.magnitudes.push_back(bin);
    top = std::max(top, bin);
  }
  if (!std::isfinite(top)) throw NumericError("nonfinite", "TT* kernel is not finite");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t p = 0; p < pairs; ++p) {
    if (report.magnitudes[p] <= 1e-12 * top) {
      ++report.excluded;
      continue;
    }
    lx.push_back(std::log(1.0 + scale * report.distances[p]));
    ly.push_back(std::log(report.magnitudes[p]));
  }
  if (lx.size() < 2) throw NumericError("fit", "TT* kernel is below the noise floor on the whole slice");
  report.fit = fit_line(lx, ly);
  report.fitted_decay = report.fit.slope;
  report.pass = report.fitted_decay <= -m + options.tolerance && report.kernel_hermitian_error <= 1e-12 * std::max(1.0, top);
  return report;
}

}  // namespace fiolab
