#include "fiolab/multilinear.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "fiolab/error.hpp"
#include "fiolab/parallel.hpp"

namespace fiolab {

namespace {

double norm(const Vec& v) { return std::hypot(v[0], v[1]); }

/// Spectrum samples below this fraction of the peak are transform round-off.
constexpr double kNegligible = 1e-14;

/// Retained spectrum samples, each carrying the weight (dxi / 2pi)^n.
struct Entry {
  Vec xi;
  cplx value;
};
using Spectrum = std::shared_ptr<const std::vector<Entry>>;

Spectrum spectrum_entries(const SampledField& f, std::optional<double> support) {
  const UniformGrid& g = f.grid;
  const SampledField hat = fourier_transform(f, Direction::forward);
  const double w = std::pow(g.freq_spacing() / (2.0 * kPi), g.dim());
  double peak = 0.0;
  for (const auto& v : hat.values) peak = std::max(peak, std::abs(v));
  auto out = std::make_shared<std::vector<Entry>>();
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!(std::abs(hat.values[k]) > kNegligible * peak)) continue;
    const Vec xi = g.freq_point(k);
    if (support && norm(xi) > *support) continue;
    out->push_back({xi, hat.values[k] * w});
  }
  return out;
}

bool decays(const AmplitudeDescriptor& a) {
  if (a.freq_support_radius) return true;
  if (a.claimed.kind == ClassTag::Kind::product_rough) {
    for (double m : a.claimed.ms) {
      if (!(m < 0.0)) return false;
    }
    return true;
  }
  return a.claimed.total_order() < 0.0;
}

void validate(const MultilinearSpec& spec, const std::vector<SampledField>& fs) {
  const int N = spec.amplitude.arity;
  if (N != 2 && N != 3) throw ValidationError("multilinear operators support 2 or 3 operands");
  if (static_cast<int>(spec.phases.size()) != N) throw ValidationError("need one phase per operand");
  if (static_cast<int>(fs.size()) != N) throw ValidationError("need one input field per operand");
  if (spec.amplitude.dim != spec.grid.dim()) throw ValidationError("amplitude and grid dimensions differ");
  if (!spec.amplitude.evaluator) throw ValidationError("amplitude needs an evaluator");
  for (const auto& phi : spec.phases) {
    if (phi.dim != spec.grid.dim() || !phi.evaluator) throw ValidationError("phase dimension differs from the grid");
  }
  for (const auto& f : fs) {
    if (!(f.grid == spec.grid) || f.values.size() != spec.grid.size()) {
      throw ValidationError("field grid does not match the operator grid");
    }
  }
  if (!decays(spec.amplitude) && !spec.acknowledge_tail) {
    throw ValidationError("amplitude '" + spec.amplitude.name +
                          "' does not decay in every operand and has no compact xi-support; acknowledge the "
                          "truncation tail to proceed");
  }
}

void check_finite(const std::vector<cplx>& v) {
  for (const auto& z : v) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
      throw NumericError("nonfinite", "multilinear output is not finite");
    }
  }
}

/// Lazily evaluated a_f; shares the spectrum between copies.
AmplitudeDescriptor freeze_impl(const AmplitudeDescriptor& a, const PhaseDescriptor& phi, Spectrum entries, int operand) {
  const int N = a.arity;
  AmplitudeDescriptor out;
  out.arity = N - 1;
  out.dim = a.dim;
  out.freq_support_radius = a.freq_support_radius;
  auto ev = a.evaluator;
  auto ph = phi.evaluator;
  out.evaluator = [ev, ph, entries, operand, N](const Vec& x, std::span<const Vec> rest) {
    std::vector<Vec> full(static_cast<std::size_t>(N));
    for (int j = 0, r = 0; j < N; ++j) {
      if (j != operand) full[j] = rest[r++];
    }
    cplx acc(0.0);
    for (const auto& e : *entries) {
      full[operand] = e.xi;
      acc += ev(x, full) * e.value * std::polar(1.0, ph(x, e.xi));
    }
    return acc;
  };
  if (a.jet_evaluator) {
    auto jev = a.jet_evaluator;
    const int dim = a.dim;
    out.jet_evaluator = [jev, ph, entries, operand, N, dim](std::span<const Jet> x, std::span<const Jet> rest) {
      const auto& layout = rest[0].layout();
      const Vec xv{value_of(x[0]), dim == 2 ? value_of(x[1]) : 0.0};
      std::vector<Jet> full(static_cast<std::size_t>(N * dim), Jet(layout, cplx(0.0)));
      for (int j = 0, r = 0; j < N; ++j) {
        if (j == operand) continue;
        for (int c = 0; c < dim; ++c) full[j * dim + c] = rest[r * dim + c];
        ++r;
      }
      Jet acc(layout, cplx(0.0));
      for (const auto& e : *entries) {
        for (int c = 0; c < dim; ++c) full[operand * dim + c] = Jet(layout, cplx(e.xi[c]));
        acc += jev(x, full) * (e.value * std::polar(1.0, ph(xv, e.xi)));
      }
      return acc;
    };
  }
  out.claimed = a.claimed;
  out.name = "frozen(" + a.name + ")";
  return out;
}

std::uint64_t direct_count(const std::vector<Spectrum>& spectra) {
  std::uint64_t count = 1;
  for (const auto& s : spectra) {
    count *= static_cast<std::uint64_t>(s->size());
    if (count > kDirectBudget) return count;
  }
  return count;
}

cplx direct_at(const MultilinearSpec& spec, const std::vector<Spectrum>& spectra, const Vec& x) {
  const std::size_t N = spectra.size();
  std::vector<std::vector<cplx>> factors(N);
  for (std::size_t j = 0; j < N; ++j) {
    factors[j].reserve(spectra[j]->size());
    for (const auto& e : *spectra[j]) factors[j].push_back(e.value * std::polar(1.0, spec.phases[j](x, e.xi)));
    if (factors[j].empty()) return cplx(0.0);
  }
  std::vector<std::size_t> idx(N, 0);
  std::vector<Vec> xi(N);
  cplx acc(0.0);
  while (true) {
    cplx w(1.0);
    for (std::size_t j = 0; j < N; ++j) {
      xi[j] = (*spectra[j])[idx[j]].xi;
      w *= factors[j][idx[j]];
    }
    acc += spec.amplitude(x, xi) * w;
    std::size_t j = N;
    while (j > 0) {
      --j;
      if (++idx[j] < factors[j].size()) break;
      idx[j] = 0;
      if (j == 0) return acc;
    }
  }
}

std::vector<Spectrum> all_spectra(const MultilinearSpec& spec, const std::vector<SampledField>& fs) {
  std::vector<Spectrum> spectra;
  for (const auto& f : fs) spectra.push_back(spectrum_entries(f, spec.amplitude.freq_support_radius));
  return spectra;
}

void check_budget(const std::vector<Spectrum>& spectra) {
  const std::uint64_t count = direct_count(spectra);
  if (count > kDirectBudget) {
    throw ValidationError("direct quadrature needs " + std::to_string(count) +
                          " evaluations per output point, above the 2^24 budget; use iterated mode");
  }
}

}  // namespace

std::vector<cplx> apply_multilinear_at(const MultilinearSpec& spec, const std::vector<SampledField>& fs,
                                       const std::vector<std::size_t>& points) {
  validate(spec, fs);
  const auto spectra = all_spectra(spec, fs);
  check_budget(spectra);
  std::vector<cplx> out(points.size());
  for (std::size_t p : points) {
    if (p >= spec.grid.size()) throw ValidationError("output point outside the grid");
  }
  parallel_for(points.size(), [&](std::size_t i) { out[i] = direct_at(spec, spectra, spec.grid.point(points[i])); });
  check_finite(out);
  return out;
}

SampledField apply_multilinear(const MultilinearSpec& spec, const std::vector<SampledField>& fs, MultilinearMode mode) {
  validate(spec, fs);
  const UniformGrid& g = spec.grid;
  const int N = spec.amplitude.arity;
  const auto spectra = all_spectra(spec, fs);
  SampledField out(g, Domain::space);
  if (mode == MultilinearMode::direct) {
    check_budget(spectra);
    parallel_for(g.size(), [&](std::size_t i) { out.values[i] = direct_at(spec, spectra, g.point(i)); });
  } else {
    if (!((N == 2 && g.dim() <= 2) || (N == 3 && g.dim() == 1))) {
      throw ValidationError("iterated mode supports N=2 with n<=2 and N=3 with n=1");
    }
    AmplitudeDescriptor frozen = spec.amplitude;
    for (int j = 0; j + 1 < N; ++j) frozen = freeze_impl(frozen, spec.phases[j], spectra[j], 0);
    const auto& last = *spectra.back();
    const auto& phi = spec.phases.back();
    parallel_for(g.size(), [&](std::size_t i) {
      const Vec x = g.point(i);
      cplx acc(0.0);
      for (const auto& e : last) acc += frozen(x, e.xi) * e.value * std::polar(1.0, phi(x, e.xi));
      out.values[i] = acc;
    });
  }
  check_finite(out.values);
  return out;
}

AmplitudeDescriptor freeze_argument(const AmplitudeDescriptor& a, const PhaseDescriptor& phi, const SampledField& f,
                                    double q1, int operand) {
  if (a.claimed.kind != ClassTag::Kind::product_rough) {
    throw ValidationError("freeze_argument needs a product-type class; no transfer rule is known for class '" +
                          a.claimed.kind_name() + "'");
  }
  if (a.arity < 2 || static_cast<int>(a.claimed.ms.size()) != a.arity) {
    throw ValidationError("product class needs one (m, rho) per operand");
  }
  if (operand < 0 || operand >= a.arity) throw ValidationError("operand index out of range");
  if (f.grid.dim() != a.dim || phi.dim != a.dim) throw ValidationError("field, phase and amplitude dimensions differ");
  if (!(q1 >= 1.0)) throw ValidationError("q1 must lie in [1,inf]");
  const double inv = (std::isinf(a.claimed.p) ? 0.0 : 1.0 / a.claimed.p) + (std::isinf(q1) ? 0.0 : 1.0 / q1);
  const double r = inv == 0.0 ? kInf : 1.0 / inv;
  if (r < 1.0) throw ValidationError("transferred exponent r = " + std::to_string(r) + " lies below 1");

  AmplitudeDescriptor out = freeze_impl(a, phi, spectrum_entries(f, a.freq_support_radius), operand);
  std::vector<double> ms;
  std::vector<double> rhos;
  for (int j = 0; j < a.arity; ++j) {
    if (j == operand) continue;
    ms.push_back(a.claimed.ms[j]);
    rhos.push_back(a.claimed.rhos[j]);
  }
  out.claimed = ms.size() == 1 ? ClassTag::rough(r, ms[0], rhos[0]) : ClassTag::product_rough(r, ms, rhos);
  return out;
}

std::pair<AmplitudeDescriptor, AmplitudeDescriptor> frequency_split(const AmplitudeDescriptor& a) {
  if (a.arity != 2) throw ValidationError("frequency_split needs an arity-2 amplitude");
  const int dim = a.dim;
  auto ratio = [dim](const Vec& p, const Vec& q) {
    const double np = 1.0 + p[0] * p[0] + (dim == 2 ? p[1] * p[1] : 0.0);
    const double nq = 1.0 + q[0] * q[0] + (dim == 2 ? q[1] * q[1] : 0.0);
    return np / nq;
  };
  auto make = [&](bool first) {
    AmplitudeDescriptor out = a;
    auto ev = a.evaluator;
    out.evaluator = [ev, ratio, first](const Vec& x, std::span<const Vec> xi) {
      const double s = first ? ratio(xi[0], xi[1]) : ratio(xi[1], xi[0]);
      return ev(x, xi) * split_cutoff(s);
    };
    if (a.jet_evaluator) {
      auto jev = a.jet_evaluator;
      out.jet_evaluator = [jev, first, dim](std::span<const Jet> x, std::span<const Jet> xi) {
        Jet np = 1.0 + xi[0] * xi[0];
        Jet nq = 1.0 + xi[static_cast<std::size_t>(dim)] * xi[static_cast<std::size_t>(dim)];
        if (dim == 2) {
          np += xi[1] * xi[1];
          nq += xi[3] * xi[3];
        }
        return jev(x, xi) * split_cutoff(first ? np / nq : nq / np);
      };
    }
    // The cutoff couples the operands, so separability is lost.
    out.separable.clear();
    out.x_independent = a.x_independent;
    out.unit = false;
    out.name = std::string(first ? "split1(" : "split2(") + a.name + ")";
    return out;
  };
  return {make(true), make(false)};
}

}  // namespace fiolab
