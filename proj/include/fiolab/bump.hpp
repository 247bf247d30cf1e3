#pragma once

// Smooth compactly supported building blocks, written once over the scalar
// type so the same formula serves plain evaluation (double / cplx) and exact
// differentiation (Jet).

#include <cmath>

#include "fiolab/jet.hpp"

namespace fiolab::smooth {

inline double zero_like(double) { return 0.0; }
inline cplx zero_like(const cplx&) { return cplx(0.0); }
inline Jet zero_like(const Jet& j) { return Jet(j.layout(), cplx(0.0)); }

inline double one_like(double) { return 1.0; }
inline cplx one_like(const cplx&) { return cplx(1.0); }
inline Jet one_like(const Jet& j) { return Jet(j.layout(), cplx(1.0)); }

using std::exp;

/// Standard bump e^{1 - 1/(1 - t^2)} on |t| < 1, zero elsewhere; equals 1 at t = 0.
/// Takes t^2 so callers can avoid square roots.
template <class T>
T bump_sq(const T& t_squared) {
  const double v = value_of(t_squared);
  if (!(v < 1.0)) return zero_like(t_squared);
  return exp(1.0 - 1.0 / (1.0 - t_squared));
}

template <class T>
T bump(const T& t) {
  return bump_sq(t * t);
}

/// e^{-1/t} for t > 0, zero otherwise.
template <class T>
T flat_exp(const T& t) {
  if (!(value_of(t) > 0.0)) return zero_like(t);
  return exp(-1.0 / t);
}

/// Smooth step: 0 for t <= 0, 1 for t >= 1, C-infinity in between.
template <class T>
T step(const T& t) {
  const double v = value_of(t);
  if (v <= 0.0) return zero_like(t);
  if (v >= 1.0) return one_like(t);
  T a = flat_exp(t);
  T b = flat_exp(1.0 - t);
  return a / (a + b);
}

/// Radial plateau in the squared radius s = |xi|^2: 1 for s <= 1, 0 for s >= 4.
template <class T>
T plateau_sq(const T& s) {
  return 1.0 - step((s - 1.0) / 3.0);
}

}  // namespace fiolab::smooth
