#include "fiolab/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fiolab/error.hpp"
#include "fiolab/parallel.hpp"

namespace fiolab {

namespace {

double norm2(const Vec& v) { return v[0] * v[0] + v[1] * v[1]; }

double chord(const Vec& a, const Vec& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

// Scaling by 1/max|xi_k| is exact for every xi and its multiples by exactly
// representable factors, which makes degree-0 homogeneity hold bit for bit.
Vec canonical(const Vec& xi) {
  const double m = std::max(std::abs(xi[0]), std::abs(xi[1]));
  return {xi[0] / m, xi[1] / m};
}

}  // namespace

LPPartition::LPPartition(int j_max, int dim) : j_max_(j_max), dim_(dim) {
  if (j_max < 1) throw ValidationError("j_max must be >= 1");
  if (dim != 1 && dim != 2) throw ValidationError("unsupported dimension");
}

double LPPartition::psi0(const Vec& xi) const { return psi0_sq(norm2(xi)); }

double LPPartition::psi(int j, const Vec& xi) const {
  if (j < 0) throw ValidationError("level must be nonnegative");
  return psi_sq(j, norm2(xi));
}

double LPPartition::partial_sum(const Vec& xi) const {
  const double r2 = norm2(xi);
  double s = psi0_sq(r2);
  for (int j = 1; j <= j_max_; ++j) s += psi_sq(j, r2);
  return s;
}

ConeNet::ConeNet(int j, int dim) : j_(j), dim_(dim) {
  if (j < 1) throw ValidationError("cone level must be >= 1");
  if (dim != 1 && dim != 2) throw ValidationError("unsupported dimension");
  delta_ = std::pow(2.0, -0.5 * j);
  width_ = 2.0 * delta_;
  if (dim == 1) {
    centers_ = {{1.0, 0.0}, {-1.0, 0.0}};
    return;
  }
  // Largest equiangular net whose neighbouring chords are >= 2^{-j/2}.
  const double count = std::floor(kPi / std::asin(delta_ / 2.0));
  if (!(count <= static_cast<double>(kMaxCenters))) throw ValidationError("cone net exceeds the memory cap");
  const std::size_t k = static_cast<std::size_t>(count);
  centers_.reserve(k);
  for (std::size_t nu = 0; nu < k; ++nu) {
    const double angle = 2.0 * kPi * static_cast<double>(nu) / static_cast<double>(k);
    centers_.push_back({std::cos(angle), std::sin(angle)});
  }
  const double step = 2.0 * kPi / static_cast<double>(k);
  const double reach = 2.0 * std::asin(std::min(1.0, width_ / 2.0));
  window_ = static_cast<int>(std::ceil(reach / step)) + 1;
  if (2 * window_ + 1 > static_cast<int>(k)) window_ = static_cast<int>(k) / 2;
}

double ConeNet::bump_value(std::size_t nu, const Vec& u) const {
  const Vec& c = centers_[nu];
  const double r = std::sqrt(norm2(u));
  const double d2 = std::max(0.0, 2.0 - 2.0 * (u[0] * c[0] + u[1] * c[1]) / r);
  return smooth::bump_sq(d2 / (width_ * width_));
}

std::size_t ConeNet::nearest(const Vec& u) const {
  const double k = static_cast<double>(centers_.size());
  double angle = std::atan2(u[1], u[0]);
  if (angle < 0.0) angle += 2.0 * kPi;
  const long idx = std::lround(angle * k / (2.0 * kPi));
  return static_cast<std::size_t>(idx) % centers_.size();
}

std::vector<double> ConeNet::chi_all(const Vec& xi) const {
  const std::size_t k = centers_.size();
  std::vector<double> out(k, 0.0);
  if (xi[0] == 0.0 && xi[1] == 0.0) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(k));
    return out;
  }
  if (dim_ == 1) {
    out[xi[0] > 0.0 ? 0 : 1] = 1.0;
    return out;
  }
  const Vec u = canonical(xi);
  const std::size_t mid = nearest(u);
  double total = 0.0;
  for (int off = -window_; off <= window_; ++off) {
    const std::size_t nu = (mid + k + static_cast<std::size_t>(off + static_cast<int>(k))) % k;
    const double b = bump_value(nu, u);
    out[nu] = b;
    total += b;
  }
  for (int off = -window_; off <= window_; ++off) {
    const std::size_t nu = (mid + k + static_cast<std::size_t>(off + static_cast<int>(k))) % k;
    out[nu] /= total;
  }
  return out;
}

double ConeNet::chi(std::size_t nu, const Vec& xi) const {
  if (nu >= centers_.size()) throw ValidationError("cone index out of range");
  const std::size_t k = centers_.size();
  if (xi[0] == 0.0 && xi[1] == 0.0) return 1.0 / static_cast<double>(k);
  if (dim_ == 1) return (xi[0] > 0.0) == (nu == 0) ? 1.0 : 0.0;
  const Vec u = canonical(xi);
  const std::size_t mid = nearest(u);
  const long gap = std::labs(static_cast<long>(nu) - static_cast<long>(mid));
  if (std::min<long>(gap, static_cast<long>(k) - gap) > window_) return 0.0;
  const double b = bump_value(nu, u);
  if (b == 0.0) return 0.0;
  double total = 0.0;
  for (int off = -window_; off <= window_; ++off) {
    total += bump_value((mid + k + static_cast<std::size_t>(off + static_cast<int>(k))) % k, u);
  }
  return b / total;
}

Jet ConeNet::chi_jet(std::size_t nu, std::span<const Jet> xi) const {
  if (dim_ == 1) {
    const double v = value_of(xi[0]);
    return Jet(xi[0].layout(), cplx((v > 0.0) == (nu == 0) ? 1.0 : 0.0));
  }
  Jet r = sqrt(xi[0] * xi[0] + xi[1] * xi[1]);
  auto bump = [&](std::size_t mu) {
    const Vec& c = centers_[mu];
    Jet d2 = 2.0 - 2.0 * (xi[0] * c[0] + xi[1] * c[1]) / r;
    return smooth::bump_sq(d2 / (width_ * width_));
  };
  Jet total(xi[0].layout(), cplx(0.0));
  for (std::size_t mu = 0; mu < centers_.size(); ++mu) total += bump(mu);
  return bump(nu) / total;
}

bool ConeNet::in_cone(std::size_t nu, const Vec& xi) const {
  const double r = std::sqrt(norm2(xi));
  if (r == 0.0) return false;
  const Vec unit{xi[0] / r, xi[1] / r};
  return chord(unit, centers_.at(nu)) <= width_;
}

double ConeNet::min_separation() const {
  double best = kInf;
  for (std::size_t a = 0; a < centers_.size(); ++a) {
    for (std::size_t b = a + 1; b < centers_.size(); ++b) best = std::min(best, chord(centers_[a], centers_[b]));
  }
  return best;
}

double ConeNet::covering_radius(int random_samples, unsigned long seed) const {
  std::vector<Vec> probes;
  const std::size_t k = centers_.size();
  if (dim_ == 1) return 0.0;
  // Angular midpoints between neighbours are the exact worst case for an equiangular net.
  for (std::size_t nu = 0; nu < k; ++nu) {
    const double angle = 2.0 * kPi * (static_cast<double>(nu) + 0.5) / static_cast<double>(k);
    probes.push_back({std::cos(angle), std::sin(angle)});
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  for (int s = 0; s < random_samples; ++s) {
    const double angle = u(rng);
    probes.push_back({std::cos(angle), std::sin(angle)});
  }
  double worst = 0.0;
  for (const auto& p : probes) {
    double best = kInf;
    for (const auto& c : centers_) best = std::min(best, chord(p, c));
    worst = std::max(worst, best);
  }
  return worst;
}

std::vector<Vec> cone_samples(const ConeNet& net, std::size_t nu, int radial, int angular) {
  const int j = net.level();
  const Vec& c = net.center(nu);
  std::vector<Vec> out;
  const double lo = std::ldexp(1.0, j - 1);
  for (int r = 0; r < radial; ++r) {
    const double radius = lo * std::pow(4.0, (r + 0.5) / radial);
    if (net.dim() == 1) {
      out.push_back({c[0] * radius, 0.0});
      continue;
    }
    const double base = std::atan2(c[1], c[0]);
    // Chord 2 * 2^{-j/2} corresponds to an angle 2 asin(2^{-j/2}).
    const double half = 2.0 * std::asin(std::min(1.0, net.separation_scale()));
    for (int a = 0; a < angular; ++a) {
      const double t = angular == 1 ? 0.0 : -1.0 + 2.0 * (a + 0.5) / angular;
      const double angle = base + 0.999 * half * t;
      out.push_back({radius * std::cos(angle), radius * std::sin(angle)});
    }
  }
  return out;
}

ChiEstimates measure_chi_estimates(const ConeNet& net, int radial, int angular) {
  const int dim = net.dim();
  const int j = net.level();
  const auto alphas = multi_indices(dim, 0, 2);
  auto iso_layout = JetLayout::get(dim, 2);
  auto dir_layout = JetLayout::get(1, 3);

  struct Partial {
    std::vector<double> iso;
    std::vector<double> radial;
  };
  std::vector<Partial> partial(net.size());
  parallel_for(net.size(), [&](std::size_t nu) {
    Partial& p = partial[nu];
    p.iso.assign(alphas.size(), 0.0);
    p.radial.assign(3, 0.0);
    const Vec& c = net.center(nu);
    for (const Vec& xi : cone_samples(net, nu, radial, angular)) {
      const double r = std::sqrt(norm2(xi));
      std::vector<Jet> vars;
      for (int k = 0; k < dim; ++k) vars.push_back(Jet::variable(iso_layout, k, xi[static_cast<std::size_t>(k)]));
      Jet chi = net.chi_jet(nu, vars);
      for (std::size_t t = 0; t < alphas.size(); ++t) {
        int order = 0;
        for (int a : alphas[t]) order += a;
        const double d = std::abs(chi.derivative(alphas[t]));
        p.iso[t] = std::max(p.iso[t], d * std::pow(r, order) * std::pow(2.0, -0.5 * order * j));
      }
      // Directional derivatives along the center through a one-variable jet.
      Jet t = Jet::variable(dir_layout, 0, 0.0);
      std::vector<Jet> line;
      for (int k = 0; k < dim; ++k) line.push_back(xi[static_cast<std::size_t>(k)] + c[static_cast<std::size_t>(k)] * t);
      Jet along = net.chi_jet(nu, line);
      for (int n = 1; n <= 3; ++n) {
        const int idx[1] = {n};
        p.radial[static_cast<std::size_t>(n - 1)] =
            std::max(p.radial[static_cast<std::size_t>(n - 1)], std::abs(along.derivative(idx)) * std::pow(r, n));
      }
    }
  });
  ChiEstimates est;
  std::vector<double> iso(alphas.size(), 0.0);
  est.radial.assign(3, 0.0);
  for (const auto& p : partial) {
    for (std::size_t t = 0; t < alphas.size(); ++t) iso[t] = std::max(iso[t], p.iso[t]);
    for (std::size_t n = 0; n < 3; ++n) est.radial[n] = std::max(est.radial[n], p.radial[n]);
  }
  for (std::size_t t = 0; t < alphas.size(); ++t) est.isotropic.emplace_back(alphas[t], iso[t]);
  return est;
}

double ReducedPhase::value(const Vec& x, const Vec& xi) const {
  const Vec g = linear_part(x);
  return base(x, xi) - (g[0] * xi[0] + g[1] * xi[1]);
}

Jet ReducedPhase::xi_jet(int order, const Vec& x, const Vec& xi) const {
  const int dim = base.dim;
  auto layout = JetLayout::get(dim, order);
  Jet full = base.derivatives(order, x, xi);
  auto full_layout = full.layout();
  Jet out(layout, cplx(0.0));
  std::vector<int> idx(static_cast<std::size_t>(2 * dim), 0);
  for (std::size_t m = 0; m < layout->size(); ++m) {
    auto alpha = layout->exponents(m);
    for (int c = 0; c < dim; ++c) idx[static_cast<std::size_t>(dim + c)] = alpha[static_cast<std::size_t>(c)];
    out.coeff(m) = full.coeff(full_layout->index(idx));
  }
  const Vec g = linear_part(x);
  for (int c = 0; c < dim; ++c) {
    out -= Jet::variable(layout, c, xi[static_cast<std::size_t>(c)]) * g[static_cast<std::size_t>(c)];
  }
  return out;
}

double ReducedPhase::directional(int order, const Vec& direction, const Vec& x, const Vec& xi) const {
  const int dim = base.dim;
  Jet j = xi_jet(order, x, xi);
  auto layout = j.layout();
  // (v . grad)^N Phi = N! sum_{|alpha| = N} c_alpha v^alpha.
  double sum = 0.0;
  for (std::size_t m = 0; m < layout->size(); ++m) {
    if (layout->total_degree(m) != order) continue;
    auto alpha = layout->exponents(m);
    double w = 1.0;
    for (int c = 0; c < dim; ++c) w *= std::pow(direction[static_cast<std::size_t>(c)], alpha[static_cast<std::size_t>(c)]);
    sum += j.coeff(m).real() * w;
  }
  return std::tgamma(order + 1.0) * sum;
}

namespace {

std::vector<Vec> box_points(int dim, double halfwidth, int per_dim) {
  std::vector<Vec> xs;
  for (int i = 0; i < per_dim; ++i) {
    for (int k = 0; k < (dim == 2 ? per_dim : 1); ++k) {
      auto coord = [&](int t) { return per_dim == 1 ? 0.0 : -halfwidth + 2.0 * halfwidth * t / (per_dim - 1); };
      xs.push_back({coord(i), dim == 2 ? coord(k) : 0.0});
    }
  }
  return xs;
}

}  // namespace

ReducedPhaseReport reduce_phase(const PhaseDescriptor& phi, const ConeNet& net, std::size_t nu, double x_halfwidth) {
  if (!phi.homogeneous_degree_1) throw ValidationError("reduce_phase needs a phase homogeneous of degree 1");
  if (phi.dim != net.dim()) throw ValidationError("phase and cone net dimensions differ");
  ReducedPhaseReport rep;
  rep.j = net.level();
  rep.nu = nu;
  rep.phase.base = phi;
  rep.phase.center = net.center(nu);
  const Vec c = rep.phase.center;
  const Vec perp{-c[1], c[0]};
  const auto xs = box_points(phi.dim, x_halfwidth, 3);
  const auto xis = cone_samples(net, nu, 5, 9);
  const int j = net.level();

  for (int order : {2, 3}) {
    PhaseEstimate est;
    est.order = order;
    double worst = -1.0;
    for (const auto& x : xs) {
      for (const auto& xi : xis) {
        Jet jet = rep.phase.xi_jet(order, x, xi);
        auto contract = [&](const Vec& v) {
          double sum = 0.0;
          auto layout = jet.layout();
          for (std::size_t m = 0; m < layout->size(); ++m) {
            if (layout->total_degree(m) != order) continue;
            auto alpha = layout->exponents(m);
            double w = 1.0;
            for (int k = 0; k < phi.dim; ++k) w *= std::pow(v[static_cast<std::size_t>(k)], alpha[static_cast<std::size_t>(k)]);
            sum += jet.coeff(m).real() * w;
          }
          return std::abs(std::tgamma(order + 1.0) * sum);
        };
        const double par = contract(c) * std::pow(2.0, order * j);
        const double per = phi.dim == 2 ? contract(perp) * std::pow(2.0, 0.5 * order * j) : 0.0;
        est.parallel = std::max(est.parallel, par);
        est.perpendicular = std::max(est.perpendicular, per);
        if (std::max(par, per) > worst || std::isnan(par) || std::isnan(per)) {
          worst = std::isnan(par) || std::isnan(per) ? kInf : std::max(par, per);
          est.worst_x = x;
          est.worst_xi = xi;
        }
        if (!std::isfinite(par) || !std::isfinite(per)) rep.pass = false;
      }
    }
    rep.estimates.push_back(est);
  }
  for (const auto& x : xs) {
    for (double t : {0.5, 1.0, std::ldexp(1.0, j), std::ldexp(1.0, j + 1)}) {
      const Vec xi{t * c[0], t * c[1]};
      rep.euler_error = std::max(rep.euler_error, std::abs(rep.phase.value(x, xi)) / t);
    }
  }
  if (!(rep.euler_error <= 1e-9)) rep.pass = false;
  return rep;
}

std::vector<CapReport> reduce_phase_low_frequency(const PhaseDescriptor& phi, double x_halfwidth) {
  if (!phi.homogeneous_degree_1) throw ValidationError("reduce_phase needs a phase homogeneous of degree 1");
  std::vector<CapReport> caps;
  const auto xs = box_points(phi.dim, x_halfwidth, 3);
  const int count = phi.dim == 1 ? 2 : 8;
  const double radius = phi.dim == 1 ? kPi / 2 : kPi / 8;
  for (int k = 0; k < count; ++k) {
    CapReport cap;
    cap.phase.base = phi;
    const double angle = 2.0 * kPi * k / count;
    cap.phase.center = phi.dim == 1 ? Vec{k == 0 ? 1.0 : -1.0, 0.0} : Vec{std::cos(angle), std::sin(angle)};
    cap.cap_radius = radius;
    for (const auto& x : xs) {
      const Vec g0 = phi.grad_xi(x, cap.phase.center);
      for (double r : {0.5, 1.0, 2.0}) {
        const int angular = phi.dim == 1 ? 1 : 9;
        for (int a = 0; a < angular; ++a) {
          const double off = angular == 1 ? 0.0 : radius * (-1.0 + 2.0 * a / (angular - 1));
          const Vec xi = phi.dim == 1 ? Vec{r * cap.phase.center[0], 0.0}
                                      : Vec{r * std::cos(angle + off), r * std::sin(angle + off)};
          const Vec g = phi.grad_xi(x, xi);
          cap.gradient_sup = std::max(cap.gradient_sup, std::hypot(g[0] - g0[0], g[1] - g0[1]));
        }
      }
    }
    caps.push_back(cap);
  }
  return caps;
}

std::vector<double> support_measures(const ConeNet& net, int cells_per_dim) {
  if (cells_per_dim < 8) throw ValidationError("support grid needs at least 8 cells per dimension");
  const int j = net.level();
  const int dim = net.dim();
  const double half = std::ldexp(1.0, j + 1);
  const double step = 2.0 * half / cells_per_dim;
  const std::size_t rows = static_cast<std::size_t>(cells_per_dim);
  std::vector<std::vector<std::size_t>> counts(rows, std::vector<std::size_t>(net.size(), 0));
  parallel_for(rows, [&](std::size_t row) {
    const double a = -half + (static_cast<double>(row) + 0.5) * step;
    for (std::size_t col = 0; col < (dim == 2 ? rows : 1); ++col) {
      const Vec xi = dim == 2 ? Vec{a, -half + (static_cast<double>(col) + 0.5) * step} : Vec{a, 0.0};
      const double psi = LPPartition::psi_sq(j, norm2(xi));
      if (psi <= 1e-14) continue;
      const auto chi = net.chi_all(xi);
      for (std::size_t nu = 0; nu < chi.size(); ++nu) {
        if (std::abs(chi[nu] * psi) > 1e-14) ++counts[row][nu];
      }
    }
  });
  std::vector<double> out(net.size(), 0.0);
  const double cell = std::pow(step, dim);
  for (std::size_t nu = 0; nu < net.size(); ++nu) {
    std::size_t total = 0;
    for (const auto& r : counts) total += r[nu];
    out[nu] = static_cast<double>(total) * cell;
  }
  return out;
}

PieceAmplitude make_piece_amplitude(const AmplitudeDescriptor& a, const PhaseDescriptor& phi, const LPPartition& lp,
                                    const ConeNet& net, int j, std::size_t nu, int cells_per_dim) {
  if (a.arity != 1) throw ValidationError("piece amplitudes need an arity-1 amplitude");
  if (a.dim != net.dim() || phi.dim != net.dim() || lp.dim() != net.dim()) {
    throw ValidationError("amplitude, phase and net dimensions differ");
  }
  if (j != net.level()) throw ValidationError("cone net level differs from j");
  if (j > lp.j_max()) throw ValidationError("level exceeds the partition's j_max");
  if (nu >= net.size()) throw ValidationError("cone index out of range");
  PieceAmplitude piece;
  piece.j = j;
  piece.nu = nu;
  piece.phase.base = phi;
  piece.phase.center = net.center(nu);
  auto shared_net = std::make_shared<const ConeNet>(net);
  piece.cutoff = [shared_net, nu, j](const Vec& xi) {
    const double psi = LPPartition::psi_sq(j, norm2(xi));
    if (psi == 0.0) return 0.0;
    return shared_net->chi(nu, xi) * psi;
  };
  auto cutoff = piece.cutoff;
  const ReducedPhase phase = piece.phase;
  const auto amp = a.evaluator;
  piece.evaluator = [cutoff, phase, amp](const Vec& x, const Vec& xi) {
    const double w = cutoff(xi);
    if (w == 0.0) return cplx(0.0);
    return std::exp(cplx(0.0, phase.value(x, xi))) * amp(x, std::span<const Vec>(&xi, 1)) * w;
  };
  piece.support_measure = support_measures(net, cells_per_dim)[nu];
  return piece;
}

std::vector<LevelReport> decomposition_report(int j_min, int j_max, bool with_support) {
  if (j_min < 1 || j_max < j_min) throw ValidationError("decomposition levels must satisfy 1 <= j_min <= j_max");
  std::vector<LevelReport> out;
  for (int j = j_min; j <= j_max; ++j) {
    ConeNet net(j, 2);
    LevelReport rep;
    rep.j = j;
    rep.centers = net.size();
    rep.min_separation = net.min_separation();
    rep.covering_radius = net.covering_radius();
    rep.chi = measure_chi_estimates(net);
    if (with_support) rep.support_measures = support_measures(net);
    out.push_back(std::move(rep));
  }
  return out;
}

PartitionCheck check_partition(int j_max, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw ValidationError("partition check needs at least one sample");
  const LPPartition lp(j_max);
  std::vector<ConeNet> nets;
  for (int j = 1; j <= j_max; ++j) nets.emplace_back(j);
  const double radius = std::ldexp(1.0, j_max);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec> points;
  points.reserve(samples);
  while (points.size() < samples) {
    const Vec v{u(rng), u(rng)};
    if (v[0] * v[0] + v[1] * v[1] <= 1.0) points.push_back({radius * v[0], radius * v[1]});
  }
  std::vector<double> lp_err(samples), cone_err(samples);
  parallel_for(samples, [&](std::size_t t) {
    const Vec& xi = points[t];
    lp_err[t] = std::abs(lp.partial_sum(xi) - 1.0);
    double s = lp.psi0(xi);
    for (int j = 1; j <= j_max; ++j) {
      const double psi = lp.psi(j, xi);
      if (psi == 0.0) continue;
      for (double c : nets[static_cast<std::size_t>(j - 1)].chi_all(xi)) s += c * psi;
    }
    cone_err[t] = std::abs(s - 1.0);
  });
  PartitionCheck out;
  out.samples = samples;
  out.lp_error = *std::max_element(lp_err.begin(), lp_err.end());
  out.cone_error = *std::max_element(cone_err.begin(), cone_err.end());
  return out;
}

}  // namespace fiolab
