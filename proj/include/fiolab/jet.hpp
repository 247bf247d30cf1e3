#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace fiolab {

using cplx = std::complex<double>;

/// Monomial bookkeeping for truncated Taylor expansions in `nvars` variables
/// up to total degree `degree`. Layouts are interned and immutable.
class JetLayout {
 public:
  struct Product {
    std::size_t lhs;
    std::size_t rhs;
    std::size_t out;
  };

  static std::shared_ptr<const JetLayout> get(int nvars, int degree);

  int nvars() const noexcept { return nvars_; }
  int degree() const noexcept { return degree_; }
  std::size_t size() const noexcept { return exponents_.size() / static_cast<std::size_t>(nvars_); }

  std::span<const int> exponents(std::size_t monomial) const;
  int total_degree(std::size_t monomial) const { return degrees_[monomial]; }
  /// Index of the monomial with exponent vector alpha; throws if |alpha| > degree.
  std::size_t index(std::span<const int> alpha) const;
  /// alpha! for the monomial, converting coefficients into derivatives.
  double factorial(std::size_t monomial) const { return factorials_[monomial]; }
  const std::vector<Product>& products() const noexcept { return products_; }

  JetLayout(int nvars, int degree);

 private:
  int nvars_;
  int degree_;
  std::vector<int> exponents_;
  std::vector<int> degrees_;
  std::vector<double> factorials_;
  std::vector<Product> products_;
};

/// Truncated multivariate Taylor polynomial with complex coefficients.
/// Arithmetic propagates exact derivatives up to the layout degree.
class Jet {
 public:
  Jet() = default;
  Jet(std::shared_ptr<const JetLayout> layout, cplx constant);

  static Jet variable(std::shared_ptr<const JetLayout> layout, int var, double value);

  const std::shared_ptr<const JetLayout>& layout() const noexcept { return layout_; }
  cplx value() const { return coeffs_[0]; }
  cplx coeff(std::size_t monomial) const { return coeffs_[monomial]; }
  cplx& coeff(std::size_t monomial) { return coeffs_[monomial]; }
  /// Partial derivative d^alpha evaluated at the expansion point.
  cplx derivative(std::span<const int> alpha) const;
  bool is_real() const;

  Jet operator-() const;
  Jet& operator+=(const Jet& other);
  Jet& operator-=(const Jet& other);
  Jet& operator*=(const Jet& other);
  Jet& operator/=(const Jet& other);
  Jet& operator+=(cplx s);
  Jet& operator-=(cplx s);
  Jet& operator*=(cplx s);
  Jet& operator/=(cplx s);

  /// Applies a univariate function given its Taylor coefficients
  /// taylor[k] = f^(k)(value)/k! at the current value.
  Jet compose(std::span<const cplx> taylor) const;

 private:
  std::shared_ptr<const JetLayout> layout_;
  std::vector<cplx> coeffs_;
};

inline Jet operator+(Jet a, const Jet& b) { return a += b; }
inline Jet operator-(Jet a, const Jet& b) { return a -= b; }
inline Jet operator*(Jet a, const Jet& b) { return a *= b; }
inline Jet operator/(Jet a, const Jet& b) { return a /= b; }
inline Jet operator+(Jet a, cplx s) { return a += s; }
inline Jet operator-(Jet a, cplx s) { return a -= s; }
inline Jet operator*(Jet a, cplx s) { return a *= s; }
inline Jet operator/(Jet a, cplx s) { return a /= s; }
inline Jet operator+(cplx s, Jet a) { return a += s; }
inline Jet operator-(cplx s, const Jet& a) { return -a + s; }
inline Jet operator*(cplx s, Jet a) { return a *= s; }
Jet operator/(cplx s, const Jet& a);
inline Jet operator+(Jet a, double s) { return a += cplx(s); }
inline Jet operator-(Jet a, double s) { return a -= cplx(s); }
inline Jet operator*(Jet a, double s) { return a *= cplx(s); }
inline Jet operator/(Jet a, double s) { return a /= cplx(s); }
inline Jet operator+(double s, Jet a) { return a += cplx(s); }
inline Jet operator-(double s, const Jet& a) { return -a + cplx(s); }
inline Jet operator*(double s, Jet a) { return a *= cplx(s); }
inline Jet operator/(double s, const Jet& a) { return cplx(s) / a; }

Jet exp(const Jet& u);
Jet log(const Jet& u);
Jet sin(const Jet& u);
Jet cos(const Jet& u);
Jet sqrt(const Jet& u);
Jet pow(const Jet& u, double exponent);
Jet pow(const Jet& u, cplx exponent);
Jet pow(const Jet& u, const Jet& exponent);
/// |u| for real-valued jets with nonzero value; throws otherwise.
Jet abs(const Jet& u);
Jet real(const Jet& u);
Jet imag(const Jet& u);

/// Real part of the expansion-point value; used for branch decisions.
inline double value_of(double v) { return v; }
inline double value_of(const cplx& v) { return v.real(); }
inline double value_of(const Jet& v) { return v.value().real(); }

}  // namespace fiolab
