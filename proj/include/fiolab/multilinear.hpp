#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fiolab/bump.hpp"
#include "fiolab/numgrid.hpp"
#include "fiolab/symbols.hpp"

namespace fiolab {

/// T(f_1..f_N)(x) = (2pi)^{-Nn} int a(x, xi_1..xi_N) e^{i sum phi_j(x, xi_j)} prod fhat_j(xi_j) dxi.
struct MultilinearSpec {
  AmplitudeDescriptor amplitude;
  std::vector<PhaseDescriptor> phases;
  UniformGrid grid;
  /// Required when the amplitude neither decays in every operand nor has compact support.
  bool acknowledge_tail = false;
};

enum class MultilinearMode { direct, iterated };

/// Per output point budget of the direct quadrature.
inline constexpr std::uint64_t kDirectBudget = std::uint64_t{1} << 24;

/// Supported: N in {2, 3}; iterated for (N=2, n<=2) and (N=3, n=1); direct
/// whenever the per-point sum fits the budget. Frequency samples where an
/// input spectrum is below 1e-14 of its peak are skipped in both modes.
SampledField apply_multilinear(const MultilinearSpec& spec, const std::vector<SampledField>& fs, MultilinearMode mode);

/// Direct quadrature at selected output points only (cross-checks on large grids).
std::vector<cplx> apply_multilinear_at(const MultilinearSpec& spec, const std::vector<SampledField>& fs,
                                       const std::vector<std::size_t>& points);

/// a_f(x, rest) = (2pi)^{-n} int e^{i phi(x, xi)} a(x, .., xi, ..) fhat(xi) dxi for the
/// operand `operand`. Needs a product-type class; the result is claimed in
/// Rough(r, m, rho) (or a product class for N > 2) with 1/r = 1/p + 1/q1.
/// xi-derivatives of a_f come from differentiating under the integral.
AmplitudeDescriptor freeze_argument(const AmplitudeDescriptor& a, const PhaseDescriptor& phi, const SampledField& f,
                                    double q1, int operand = 0);

/// chi(s) = B(s) / (B(s) + B(1/s)) with B = 1 on s <= 1/2 and 0 on s >= 2;
/// chi(s) + chi(1/s) = 1 by construction.
template <class T>
T split_cutoff(const T& s) {
  auto b = [](const T& t) { return smooth::step((2.0 - t) / 1.5); };
  const T lo = b(s);
  const T hi = b(1.0 / s);
  return lo / (lo + hi);
}

/// a_1 = a chi(<xi>^2/<eta>^2), a_2 = a chi(<eta>^2/<xi>^2).
std::pair<AmplitudeDescriptor, AmplitudeDescriptor> frequency_split(const AmplitudeDescriptor& a);

}  // namespace fiolab
