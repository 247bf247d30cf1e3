#include "fiolab/jet.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include "fiolab/error.hpp"

namespace fiolab {

namespace {

std::size_t encode(std::span<const int> alpha, int base) {
  std::size_t code = 0;
  for (int a : alpha) code = code * static_cast<std::size_t>(base) + static_cast<std::size_t>(a);
  return code;
}

}  // namespace

JetLayout::JetLayout(int nvars, int degree) : nvars_(nvars), degree_(degree) {
  if (nvars < 1 || degree < 0) throw ValidationError("jet layout needs nvars >= 1 and degree >= 0");
  // Graded enumeration: all exponent vectors of total degree 0, 1, ..., degree.
  std::vector<int> alpha(static_cast<std::size_t>(nvars), 0);
  for (int total = 0; total <= degree; ++total) {
    // Iterate compositions of `total` into nvars parts in lexicographic order.
    std::vector<int> e(static_cast<std::size_t>(nvars), 0);
    e[0] = total;
    while (true) {
      exponents_.insert(exponents_.end(), e.begin(), e.end());
      degrees_.push_back(total);
      double fact = 1.0;
      for (int a : e) {
        for (int k = 2; k <= a; ++k) fact *= k;
      }
      factorials_.push_back(fact);
      // Next composition: find rightmost nonzero entry before the last slot.
      int last = nvars - 1;
      int pivot = -1;
      for (int i = last - 1; i >= 0; --i) {
        if (e[static_cast<std::size_t>(i)] > 0) {
          pivot = i;
          break;
        }
      }
      if (pivot < 0) break;
      int tail = e[static_cast<std::size_t>(last)];
      e[static_cast<std::size_t>(last)] = 0;
      e[static_cast<std::size_t>(pivot)] -= 1;
      e[static_cast<std::size_t>(pivot) + 1] = tail + 1;
    }
  }

  const std::size_t count = size();
  std::map<std::size_t, std::size_t> lookup;
  for (std::size_t m = 0; m < count; ++m) lookup[encode(exponents(m), degree + 1)] = m;

  std::vector<int> sum(static_cast<std::size_t>(nvars));
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < count; ++j) {
      if (degrees_[i] + degrees_[j] > degree) continue;
      auto ei = exponents(i);
      auto ej = exponents(j);
      for (int v = 0; v < nvars; ++v) {
        sum[static_cast<std::size_t>(v)] = ei[static_cast<std::size_t>(v)] + ej[static_cast<std::size_t>(v)];
      }
      products_.push_back({i, j, lookup.at(encode(sum, degree + 1))});
    }
  }
}

std::shared_ptr<const JetLayout> JetLayout::get(int nvars, int degree) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const JetLayout>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_pair(nvars, degree);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto layout = std::make_shared<const JetLayout>(nvars, degree);
  cache.emplace(key, layout);
  return layout;
}

std::span<const int> JetLayout::exponents(std::size_t monomial) const {
  return {exponents_.data() + monomial * static_cast<std::size_t>(nvars_),
          static_cast<std::size_t>(nvars_)};
}

std::size_t JetLayout::index(std::span<const int> alpha) const {
  if (static_cast<int>(alpha.size()) != nvars_) {
    throw ValidationError("multi-index length does not match jet variable count");
  }
  int total = 0;
  for (int a : alpha) {
    if (a < 0) throw ValidationError("negative multi-index entry");
    total += a;
  }
  if (total > degree_) throw ValidationError("derivative order exceeds jet degree");
  // Linear scan inside the degree block is enough at these sizes.
  for (std::size_t m = 0; m < size(); ++m) {
    if (degrees_[m] != total) continue;
    auto e = exponents(m);
    bool same = true;
    for (std::size_t v = 0; v < alpha.size(); ++v) {
      if (e[v] != alpha[v]) {
        same = false;
        break;
      }
    }
    if (same) return m;
  }
  throw ValidationError("multi-index not found in jet layout");
}

Jet::Jet(std::shared_ptr<const JetLayout> layout, cplx constant)
    : layout_(std::move(layout)), coeffs_(layout_->size(), cplx(0.0)) {
  coeffs_[0] = constant;
}

Jet Jet::variable(std::shared_ptr<const JetLayout> layout, int var, double value) {
  Jet j(layout, cplx(value));
  if (layout->degree() >= 1) {
    std::vector<int> alpha(static_cast<std::size_t>(layout->nvars()), 0);
    alpha[static_cast<std::size_t>(var)] = 1;
    j.coeffs_[layout->index(alpha)] = 1.0;
  }
  return j;
}

cplx Jet::derivative(std::span<const int> alpha) const {
  std::size_t m = layout_->index(alpha);
  return coeffs_[m] * layout_->factorial(m);
}

bool Jet::is_real() const {
  for (const auto& c : coeffs_) {
    if (c.imag() != 0.0) return false;
  }
  return true;
}

Jet Jet::operator-() const {
  Jet r = *this;
  for (auto& c : r.coeffs_) c = -c;
  return r;
}

Jet& Jet::operator+=(const Jet& other) {
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& other) {
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

Jet& Jet::operator*=(const Jet& other) {
  std::vector<cplx> out(coeffs_.size(), cplx(0.0));
  for (const auto& p : layout_->products()) out[p.out] += coeffs_[p.lhs] * other.coeffs_[p.rhs];
  coeffs_ = std::move(out);
  return *this;
}

Jet& Jet::operator/=(const Jet& other) { return *this *= (cplx(1.0) / other); }

Jet& Jet::operator+=(cplx s) {
  coeffs_[0] += s;
  return *this;
}

Jet& Jet::operator-=(cplx s) {
  coeffs_[0] -= s;
  return *this;
}

Jet& Jet::operator*=(cplx s) {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

Jet& Jet::operator/=(cplx s) {
  for (auto& c : coeffs_) c /= s;
  return *this;
}

Jet Jet::compose(std::span<const cplx> taylor) const {
  const int degree = layout_->degree();
  Jet delta = *this;
  delta.coeffs_[0] = 0.0;
  Jet result(layout_, taylor[static_cast<std::size_t>(degree)]);
  for (int k = degree - 1; k >= 0; --k) {
    result *= delta;
    result.coeffs_[0] += taylor[static_cast<std::size_t>(k)];
  }
  return result;
}

Jet operator/(cplx s, const Jet& a) {
  const int degree = a.layout()->degree();
  const cplx v = a.value();
  std::vector<cplx> taylor(static_cast<std::size_t>(degree) + 1);
  // d^k/dv^k (1/v) / k! = (-1)^k / v^(k+1)
  cplx term = 1.0 / v;
  for (int k = 0; k <= degree; ++k) {
    taylor[static_cast<std::size_t>(k)] = s * term;
    term *= -1.0 / v;
  }
  return a.compose(taylor);
}

Jet exp(const Jet& u) {
  const int degree = u.layout()->degree();
  const cplx e = std::exp(u.value());
  std::vector<cplx> taylor(static_cast<std::size_t>(degree) + 1);
  double fact = 1.0;
  for (int k = 0; k <= degree; ++k) {
    if (k > 0) fact *= k;
    taylor[static_cast<std::size_t>(k)] = e / fact;
  }
  return u.compose(taylor);
}

Jet log(const Jet& u) {
  const int degree = u.layout()->degree();
  const cplx v = u.value();
  std::vector<cplx> taylor(static_cast<std::size_t>(degree) + 1);
  taylor[0] = std::log(v);
  cplx power = v;
  for (int k = 1; k <= degree; ++k) {
    double sign = (k % 2 == 1) ? 1.0 : -1.0;
    taylor[static_cast<std::size_t>(k)] = sign / (static_cast<double>(k) * power);
    power *= v;
  }
  return u.compose(taylor);
}

Jet sin(const Jet& u) {
  const int degree = u.layout()->degree();
  const cplx s = std::sin(u.value());
  const cplx c = std::cos(u.value());
  const cplx cycle[4] = {s, c, -s, -c};
  std::vector<cplx> taylor(static_cast<std::size_t>(degree) + 1);
  double fact = 1.0;
  for (int k = 0; k <= degree; ++k) {
    if (k > 0) fact *= k;
    taylor[static_cast<std::size_t>(k)] = cycle[k % 4] / fact;
  }
  return u.compose(taylor);
}

Jet cos(const Jet& u) {
  const int degree = u.layout()->degree();
  const cplx s = std::sin(u.value());
  const cplx c = std::cos(u.value());
  const cplx cycle[4] = {c, -s, -c, s};
  std::vector<cplx> taylor(static_cast<std::size_t>(degree) + 1);
  double fact = 1.0;
  for (int k = 0; k <= degree; ++k) {
    if (k > 0) fact *= k;
    taylor[static_cast<std::size_t>(k)] = cycle[k % 4] / fact;
  }
  return u.compose(taylor);
}

Jet pow(const Jet& u, cplx exponent) {
  // Nonnegative integer powers stay exact (and defined at zero) by repeated products.
  if (exponent.imag() == 0.0 && exponent.real() >= 0.0 && exponent.real() <= 16.0 &&
      std::floor(exponent.real()) == exponent.real()) {
    int k = static_cast<int>(exponent.real());
    Jet r(u.layout(), cplx(1.0));
    for (int i = 0; i < k; ++i) r *= u;
    return r;
  }
  if (exponent.imag() == 0.0 && exponent.real() < 0.0 && exponent.real() >= -16.0 &&
      std::floor(exponent.real()) == exponent.real()) {
    return cplx(1.0) / pow(u, cplx(-exponent.real()));
  }
  const int degree = u.layout()->degree();
  const cplx v = u.value();
  std::vector<cplx> taylor(static_cast<std::size_t>(degree) + 1);
  const bool real_branch = exponent.imag() == 0.0 && v.imag() == 0.0 && v.real() > 0.0;
  taylor[0] = real_branch ? cplx(std::pow(v.real(), exponent.real())) : std::pow(v, exponent);
  for (int k = 1; k <= degree; ++k) {
    taylor[static_cast<std::size_t>(k)] =
        taylor[static_cast<std::size_t>(k) - 1] * (exponent - cplx(k - 1)) / (static_cast<double>(k) * v);
  }
  return u.compose(taylor);
}

Jet pow(const Jet& u, double exponent) { return pow(u, cplx(exponent)); }

Jet pow(const Jet& u, const Jet& exponent) {
  bool constant_exponent = true;
  for (std::size_t m = 1; m < exponent.layout()->size(); ++m) {
    if (exponent.coeff(m) != cplx(0.0)) {
      constant_exponent = false;
      break;
    }
  }
  if (constant_exponent) return pow(u, exponent.value());
  return exp(exponent * log(u));
}

Jet sqrt(const Jet& u) { return pow(u, 0.5); }

Jet abs(const Jet& u) {
  if (!u.is_real()) {
    // Modulus of a complex jet: sqrt(u * conj(u)) expanded in the real variables.
    Jet conj_u = u;
    for (std::size_t m = 0; m < u.layout()->size(); ++m) conj_u.coeff(m) = std::conj(u.coeff(m));
    if (std::abs(u.value()) == 0.0) {
      throw NumericError("non-differentiable", "abs() at a zero of a complex expression");
    }
    return real(sqrt(u * conj_u));
  }
  const double v = u.value().real();
  if (v == 0.0) {
    if (u.layout()->degree() == 0) return u;
    throw NumericError("non-differentiable", "abs() differentiated at zero");
  }
  return v > 0.0 ? u : -u;
}

Jet real(const Jet& u) {
  Jet r = u;
  for (std::size_t m = 0; m < u.layout()->size(); ++m) r.coeff(m) = cplx(u.coeff(m).real(), 0.0);
  return r;
}

Jet imag(const Jet& u) {
  Jet r = u;
  for (std::size_t m = 0; m < u.layout()->size(); ++m) r.coeff(m) = cplx(u.coeff(m).imag(), 0.0);
  return r;
}

}  // namespace fiolab
