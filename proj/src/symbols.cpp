#include "fiolab/symbols.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <regex>

#include "fiolab/bump.hpp"
#include "fiolab/error.hpp"
#include "fiolab/parallel.hpp"

namespace fiolab {

namespace {

void check_unit_interval(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(std::string(what) + " must lie in [0,1]");
}

void check_exponent(double p) {
  if (!(p >= 1.0)) throw ValidationError("class exponent p must lie in [1,inf]");
}

double reciprocal(double p) { return std::isinf(p) ? 0.0 : 1.0 / p; }

int total_degree(std::span<const int> alpha) { return std::accumulate(alpha.begin(), alpha.end(), 0); }

}  // namespace

ClassTag ClassTag::hormander(double m, double rho, double delta) {
  check_unit_interval(rho, "rho");
  check_unit_interval(delta, "delta");
  ClassTag t;
  t.kind = Kind::hormander;
  t.m = m;
  t.rho = rho;
  t.delta = delta;
  return t;
}

ClassTag ClassTag::rough(double p, double m, double rho) {
  check_exponent(p);
  check_unit_interval(rho, "rho");
  ClassTag t;
  t.kind = Kind::rough;
  t.p = p;
  t.m = m;
  t.rho = rho;
  return t;
}

ClassTag ClassTag::product_rough(double p, std::vector<double> ms, std::vector<double> rhos) {
  check_exponent(p);
  if (ms.empty() || ms.size() != rhos.size()) throw ValidationError("product class needs one (m, rho) per operand");
  for (double r : rhos) check_unit_interval(r, "rho");
  ClassTag t;
  t.kind = Kind::product_rough;
  t.p = p;
  t.ms = std::move(ms);
  t.rhos = std::move(rhos);
  t.m = std::accumulate(t.ms.begin(), t.ms.end(), 0.0);
  t.rho = *std::min_element(t.rhos.begin(), t.rhos.end());
  return t;
}

ClassTag ClassTag::joint_rough(double p, double m, double rho) {
  ClassTag t = rough(p, m, rho);
  t.kind = Kind::joint_rough;
  return t;
}

double ClassTag::total_order() const {
  if (kind == Kind::product_rough) return std::accumulate(ms.begin(), ms.end(), 0.0);
  return m;
}

std::string ClassTag::kind_name() const {
  switch (kind) {
    case Kind::hormander:
      return "hormander";
    case Kind::rough:
      return "rough";
    case Kind::product_rough:
      return "product_rough";
    case Kind::joint_rough:
      return "joint_rough";
  }
  return "unknown";
}

cplx finite_difference(const std::function<cplx(std::span<const double>)>& fn, std::span<const double> point,
                       std::span<const int> alpha) {
  std::vector<double> pt(point.begin(), point.end());
  std::vector<int> remaining(alpha.begin(), alpha.end());
  double norm = 0.0;
  for (double v : pt) norm += v * v;
  const double h = 1e-3 * std::max(1.0, std::sqrt(norm));

  // Differentiate one coordinate at a time; each first-order step is a
  // central difference refined by one Richardson level.
  std::function<cplx()> rec = [&]() -> cplx {
    std::size_t i = 0;
    while (i < remaining.size() && remaining[i] == 0) ++i;
    if (i == remaining.size()) return fn(pt);
    --remaining[i];
    auto central = [&](double step) {
      const double base = pt[i];
      pt[i] = base + step;
      cplx up = rec();
      pt[i] = base - step;
      cplx down = rec();
      pt[i] = base;
      return (up - down) / (2.0 * step);
    };
    cplx coarse = central(h);
    cplx fine = central(h / 2);
    ++remaining[i];
    return (4.0 * fine - coarse) / 3.0;
  };
  cplx r = rec();
  if (!std::isfinite(r.real()) || !std::isfinite(r.imag())) {
    throw NumericError("non_finite", "finite differencing produced a non-finite value");
  }
  return r;
}

cplx AmplitudeDescriptor::derivative(std::span<const int> alpha, const Vec& x, std::span<const Vec> xi) const {
  const int vars = arity * dim;
  if (static_cast<int>(alpha.size()) != vars) throw ValidationError("multi-index length must be arity*dim");
  if (jet_evaluator) return derivatives(total_degree(alpha), x, xi).derivative(alpha);
  std::vector<double> flat;
  for (int j = 0; j < arity; ++j) {
    for (int c = 0; c < dim; ++c) flat.push_back(xi[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)]);
  }
  auto fn = [&](std::span<const double> p) {
    std::vector<Vec> v(static_cast<std::size_t>(arity), Vec{0.0, 0.0});
    for (int j = 0; j < arity; ++j) {
      for (int c = 0; c < dim; ++c) {
        v[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)] = p[static_cast<std::size_t>(j * dim + c)];
      }
    }
    return evaluator(x, v);
  };
  return finite_difference(fn, flat, alpha);
}

Jet AmplitudeDescriptor::derivatives(int order, const Vec& x, std::span<const Vec> xi) const {
  const int vars = arity * dim;
  auto layout = JetLayout::get(vars, order);
  if (jet_evaluator) {
    std::vector<Jet> xj;
    for (int c = 0; c < dim; ++c) xj.emplace_back(layout, cplx(x[static_cast<std::size_t>(c)]));
    std::vector<Jet> xij;
    for (int j = 0; j < arity; ++j) {
      for (int c = 0; c < dim; ++c) {
        xij.push_back(Jet::variable(layout, j * dim + c, xi[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)]));
      }
    }
    return jet_evaluator(xj, xij);
  }
  Jet out(layout, cplx(0.0));
  for (std::size_t m = 0; m < layout->size(); ++m) {
    auto alpha = layout->exponents(m);
    out.coeff(m) = derivative(alpha, x, xi) / layout->factorial(m);
  }
  return out;
}

Jet PhaseDescriptor::derivatives(int order, const Vec& x, const Vec& xi) const {
  auto layout = JetLayout::get(2 * dim, order);
  if (jet_evaluator) {
    std::vector<Jet> xj;
    std::vector<Jet> xij;
    for (int c = 0; c < dim; ++c) {
      xj.push_back(Jet::variable(layout, c, x[static_cast<std::size_t>(c)]));
      xij.push_back(Jet::variable(layout, dim + c, xi[static_cast<std::size_t>(c)]));
    }
    return jet_evaluator(xj, xij);
  }
  std::vector<double> flat;
  for (int c = 0; c < dim; ++c) flat.push_back(x[static_cast<std::size_t>(c)]);
  for (int c = 0; c < dim; ++c) flat.push_back(xi[static_cast<std::size_t>(c)]);
  auto fn = [&](std::span<const double> p) {
    Vec xx{0.0, 0.0};
    Vec kk{0.0, 0.0};
    for (int c = 0; c < dim; ++c) {
      xx[static_cast<std::size_t>(c)] = p[static_cast<std::size_t>(c)];
      kk[static_cast<std::size_t>(c)] = p[static_cast<std::size_t>(dim + c)];
    }
    return cplx(evaluator(xx, kk));
  };
  Jet out(layout, cplx(0.0));
  for (std::size_t m = 0; m < layout->size(); ++m) {
    out.coeff(m) = finite_difference(fn, flat, layout->exponents(m)) / layout->factorial(m);
  }
  return out;
}

double PhaseDescriptor::derivative(std::span<const int> beta_x, std::span<const int> alpha_xi, const Vec& x,
                                   const Vec& xi) const {
  std::vector<int> idx(beta_x.begin(), beta_x.end());
  idx.insert(idx.end(), alpha_xi.begin(), alpha_xi.end());
  if (static_cast<int>(idx.size()) != 2 * dim) throw ValidationError("multi-index length must be dim");
  return derivatives(total_degree(idx), x, xi).derivative(idx).real();
}

Vec PhaseDescriptor::grad_xi(const Vec& x, const Vec& xi) const {
  Jet j = derivatives(1, x, xi);
  Vec g{0.0, 0.0};
  std::vector<int> idx(static_cast<std::size_t>(2 * dim), 0);
  for (int c = 0; c < dim; ++c) {
    idx[static_cast<std::size_t>(dim + c)] = 1;
    g[static_cast<std::size_t>(c)] = j.derivative(idx).real();
    idx[static_cast<std::size_t>(dim + c)] = 0;
  }
  return g;
}

Mat2 PhaseDescriptor::mixed_hessian(const Vec& x, const Vec& xi) const {
  Jet j = derivatives(2, x, xi);
  Mat2 h{};
  std::vector<int> idx(static_cast<std::size_t>(2 * dim), 0);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      idx[static_cast<std::size_t>(r)] += 1;
      idx[static_cast<std::size_t>(dim + c)] += 1;
      h[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = j.derivative(idx).real();
      idx[static_cast<std::size_t>(r)] -= 1;
      idx[static_cast<std::size_t>(dim + c)] -= 1;
    }
  }
  return h;
}

double standard_bump(const Vec& x, int dim) {
  double r2 = x[0] * x[0] + (dim == 2 ? x[1] * x[1] : 0.0);
  return smooth::bump_sq(r2);
}

namespace {

void check_dim(int dim) {
  if (dim != 1 && dim != 2) throw ValidationError("unsupported dimension");
}

template <class T>
T squared_norm(std::span<const T> v, std::size_t begin, std::size_t count) {
  T s = v[begin] * v[begin];
  for (std::size_t c = 1; c < count; ++c) s = s + v[begin + c] * v[begin + c];
  return s;
}

double squared_norm(const Vec& v, int dim) { return v[0] * v[0] + (dim == 2 ? v[1] * v[1] : 0.0); }

AmplitudeDescriptor make_one(int dim) {
  AmplitudeDescriptor a;
  a.dim = dim;
  a.evaluator = [](const Vec&, std::span<const Vec>) { return cplx(1.0); };
  a.jet_evaluator = [](std::span<const Jet>, std::span<const Jet> xi) { return Jet(xi[0].layout(), cplx(1.0)); };
  a.claimed = ClassTag::hormander(0.0, 1.0, 0.0);
  a.separable = {{[](const Vec&) { return cplx(1.0); }, [](std::span<const Vec>) { return cplx(1.0); }}};
  a.x_independent = true;
  a.unit = true;
  a.name = "one";
  return a;
}

AmplitudeDescriptor make_jb_power(double m, int dim) {
  AmplitudeDescriptor a;
  a.dim = dim;
  auto sigma = [m, dim](std::span<const Vec> xi) { return cplx(std::pow(1.0 + squared_norm(xi[0], dim), m / 2)); };
  a.evaluator = [sigma](const Vec&, std::span<const Vec> xi) { return sigma(xi); };
  a.jet_evaluator = [m, dim](std::span<const Jet>, std::span<const Jet> xi) {
    return pow(1.0 + squared_norm(xi, 0, static_cast<std::size_t>(dim)), m / 2);
  };
  a.claimed = ClassTag::hormander(m, 1.0, 0.0);
  a.separable = {{[](const Vec&) { return cplx(1.0); }, sigma}};
  a.x_independent = true;
  char buf[64];
  std::snprintf(buf, sizeof buf, "jb_power(%.17g)", m);
  a.name = buf;
  return a;
}

// e^{i xi_1 log|x|} psi(x), psi the standard bump; zero at x = 0.
AmplitudeDescriptor make_rough_log(int dim) {
  AmplitudeDescriptor a;
  a.dim = dim;
  a.evaluator = [dim](const Vec& x, std::span<const Vec> xi) {
    const double r2 = squared_norm(x, dim);
    if (r2 == 0.0 || r2 >= 1.0) return cplx(0.0);
    const double lg = 0.5 * std::log(r2);
    return std::exp(cplx(0.0, xi[0][0] * lg)) * smooth::bump_sq(r2);
  };
  a.jet_evaluator = [dim](std::span<const Jet> x, std::span<const Jet> xi) {
    Jet r2 = squared_norm(x, 0, static_cast<std::size_t>(dim));
    const double v = value_of(r2);
    if (v == 0.0 || v >= 1.0) return Jet(xi[0].layout(), cplx(0.0));
    Jet lg = 0.5 * log(r2);
    return exp(cplx(0.0, 1.0) * xi[0] * lg) * smooth::bump_sq(r2);
  };
  a.claimed = ClassTag::rough(2.0, 0.0, 0.0);
  a.name = "rough_log";
  return a;
}

}  // namespace

AmplitudeDescriptor builtin_amplitude(const std::string& spec, int dim) {
  check_dim(dim);
  if (spec == "one") return make_one(dim);
  if (spec == "rough_log") return make_rough_log(dim);
  static const std::regex jb(R"(\s*jb_power\(\s*([-+0-9.eE]+)\s*\)\s*)");
  std::smatch match;
  if (std::regex_match(spec, match, jb)) {
    char* end = nullptr;
    const std::string text = match[1].str();
    double m = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || !std::isfinite(m)) {
      throw ValidationError("jb_power needs a numeric order");
    }
    return make_jb_power(m, dim);
  }
  throw ValidationError("unknown built-in amplitude '" + spec + "'");
}

PhaseDescriptor builtin_phase(const std::string& name, int dim) {
  check_dim(dim);
  PhaseDescriptor phi;
  phi.dim = dim;
  phi.homogeneous_degree_1 = true;
  phi.claimed_phi_k = 2;
  phi.translation_form = true;
  phi.name = name;
  if (name == "linear_phase") {
    phi.evaluator = [dim](const Vec& x, const Vec& xi) { return x[0] * xi[0] + (dim == 2 ? x[1] * xi[1] : 0.0); };
    phi.jet_evaluator = [dim](std::span<const Jet> x, std::span<const Jet> xi) {
      Jet s = x[0] * xi[0];
      if (dim == 2) s += x[1] * xi[1];
      return s;
    };
    phi.snd_constant = 1.0;
    return phi;
  }
  if (name == "wave_phase") {
    phi.evaluator = [dim](const Vec& x, const Vec& xi) {
      return std::sqrt(squared_norm(xi, dim)) + x[0] * xi[0] + (dim == 2 ? x[1] * xi[1] : 0.0);
    };
    phi.jet_evaluator = [dim](std::span<const Jet> x, std::span<const Jet> xi) {
      Jet s = sqrt(squared_norm(xi, 0, static_cast<std::size_t>(dim))) + x[0] * xi[0];
      if (dim == 2) s += x[1] * xi[1];
      return s;
    };
    phi.multiplier_part = [dim](const Vec& xi) { return std::sqrt(squared_norm(xi, dim)); };
    phi.snd_constant = 1.0;
    return phi;
  }
  throw ValidationError("unknown built-in phase '" + name + "'");
}

namespace {

void check_expression_fits(const Expression& e, int arity, int dim) {
  if (e.max_operand() > arity) {
    throw ValidationError("expression uses operand " + std::to_string(e.max_operand()) + " but arity is " +
                          std::to_string(arity));
  }
  if (e.max_coordinate() > dim) {
    throw ValidationError("expression uses coordinate " + std::to_string(e.max_coordinate()) +
                          " but dimension is " + std::to_string(dim));
  }
}

}  // namespace

AmplitudeDescriptor amplitude_from_expression(const std::string& source, int arity, int dim, ClassTag claimed,
                                              std::optional<double> freq_support_radius) {
  check_dim(dim);
  if (arity < 1 || arity > Expression::kMaxOperands) throw ValidationError("arity must lie in [1,3]");
  auto expr = std::make_shared<const Expression>(Expression::parse(source));
  check_expression_fits(*expr, arity, dim);
  AmplitudeDescriptor a;
  a.arity = arity;
  a.dim = dim;
  a.evaluator = [expr, arity, dim](const Vec& x, std::span<const Vec> xi) {
    std::array<cplx, Expression::kSlots> slots{};
    for (int c = 0; c < dim; ++c) slots[static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(c)];
    for (int j = 0; j < arity; ++j) {
      for (int c = 0; c < dim; ++c) {
        slots[static_cast<std::size_t>(Expression::k_slot(j, c))] =
            xi[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];
      }
    }
    return expr->evaluate(slots);
  };
  a.jet_evaluator = [expr, arity, dim](std::span<const Jet> x, std::span<const Jet> xi) {
    Jet zero(xi[0].layout(), cplx(0.0));
    std::vector<Jet> slots(Expression::kSlots, zero);
    for (int c = 0; c < dim; ++c) slots[static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(c)];
    for (int j = 0; j < arity; ++j) {
      for (int c = 0; c < dim; ++c) {
        slots[static_cast<std::size_t>(Expression::k_slot(j, c))] = xi[static_cast<std::size_t>(j * dim + c)];
      }
    }
    return expr->evaluate(std::span<const Jet>(slots));
  };
  a.claimed = std::move(claimed);
  if (a.claimed.kind == ClassTag::Kind::product_rough && static_cast<int>(a.claimed.ms.size()) != arity) {
    throw ValidationError("product class needs one (m, rho) per operand");
  }
  if (freq_support_radius && !(*freq_support_radius > 0.0)) {
    throw ValidationError("freq_support_radius must be positive");
  }
  a.freq_support_radius = freq_support_radius;
  a.x_independent = !expr->uses_space();
  if (a.x_independent) {
    auto ev = a.evaluator;
    a.separable = {{[](const Vec&) { return cplx(1.0); }, [ev](std::span<const Vec> xi) { return ev(Vec{0, 0}, xi); }}};
  } else if (expr->max_operand() == 0) {
    auto ev = a.evaluator;
    const std::size_t n = static_cast<std::size_t>(arity);
    a.separable = {{[ev, n](const Vec& x) {
                      std::vector<Vec> zeros(n, Vec{0, 0});
                      return ev(x, zeros);
                    },
                    [](std::span<const Vec>) { return cplx(1.0); }}};
  }
  a.name = source;
  return a;
}

PhaseDescriptor phase_from_expression(const std::string& source, int dim, bool homogeneous, int claimed_phi_k) {
  check_dim(dim);
  if (claimed_phi_k != 1 && claimed_phi_k != 2) throw ValidationError("claimed_phi_k must be 1 or 2");
  auto expr = std::make_shared<const Expression>(Expression::parse(source));
  check_expression_fits(*expr, 1, dim);
  PhaseDescriptor phi;
  phi.dim = dim;
  phi.evaluator = [expr, dim](const Vec& x, const Vec& xi) {
    std::array<cplx, Expression::kSlots> slots{};
    for (int c = 0; c < dim; ++c) {
      slots[static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(c)];
      slots[static_cast<std::size_t>(Expression::k_slot(0, c))] = xi[static_cast<std::size_t>(c)];
    }
    return expr->evaluate(slots).real();
  };
  phi.jet_evaluator = [expr, dim](std::span<const Jet> x, std::span<const Jet> xi) {
    Jet zero(xi[0].layout(), cplx(0.0));
    std::vector<Jet> slots(Expression::kSlots, zero);
    for (int c = 0; c < dim; ++c) {
      slots[static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(c)];
      slots[static_cast<std::size_t>(Expression::k_slot(0, c))] = xi[static_cast<std::size_t>(c)];
    }
    return real(expr->evaluate(std::span<const Jet>(slots)));
  };
  phi.homogeneous_degree_1 = homogeneous;
  phi.claimed_phi_k = claimed_phi_k;
  phi.name = source;
  return phi;
}

AmplitudeDescriptor space_amplitude(std::function<cplx(const Vec&)> b, std::function<Jet(std::span<const Jet>)> b_jet,
                                    int dim, double p, std::string name) {
  check_dim(dim);
  AmplitudeDescriptor a;
  a.dim = dim;
  a.evaluator = [b](const Vec& x, std::span<const Vec>) { return b(x); };
  if (b_jet) {
    a.jet_evaluator = [b_jet](std::span<const Jet> x, std::span<const Jet> xi) {
      // b does not depend on xi; only the value survives in the xi-jet.
      Jet v = b_jet(x);
      return Jet(xi[0].layout(), v.value());
    };
  }
  a.claimed = ClassTag::rough(p, 0.0, 1.0);
  a.separable = {{b, [](std::span<const Vec>) { return cplx(1.0); }}};
  a.name = std::move(name);
  return a;
}

AmplitudeDescriptor product_amplitude(const AmplitudeDescriptor& a, const AmplitudeDescriptor& b) {
  if (a.arity != 1 || b.arity != 1) throw ValidationError("product_amplitude needs arity-1 factors");
  if (a.dim != b.dim) throw ValidationError("product_amplitude factors differ in dimension");
  AmplitudeDescriptor out;
  out.arity = 1;
  out.dim = a.dim;
  if (a.unit) {
    out.claimed = b.claimed;
  } else if (b.unit) {
    out.claimed = a.claimed;
  } else {
    if (a.claimed.rho != b.claimed.rho) throw ValidationError("product_amplitude needs a common rho");
    const double inv_r = reciprocal(a.claimed.space_exponent()) + reciprocal(b.claimed.space_exponent());
    if (a.claimed.kind == ClassTag::Kind::hormander && b.claimed.kind == ClassTag::Kind::hormander) {
      out.claimed = ClassTag::hormander(a.claimed.m + b.claimed.m, a.claimed.rho,
                                        std::max(a.claimed.delta, b.claimed.delta));
    } else {
      if (inv_r > 1.0) throw ValidationError("product exponent 1/p + 1/q exceeds 1");
      out.claimed = ClassTag::rough(inv_r == 0.0 ? kInf : 1.0 / inv_r, a.claimed.m + b.claimed.m, a.claimed.rho);
    }
  }
  auto fa = a.evaluator;
  auto fb = b.evaluator;
  out.evaluator = [fa, fb](const Vec& x, std::span<const Vec> xi) { return fa(x, xi) * fb(x, xi); };
  if (a.jet_evaluator && b.jet_evaluator) {
    auto ja = a.jet_evaluator;
    auto jb = b.jet_evaluator;
    out.jet_evaluator = [ja, jb](std::span<const Jet> x, std::span<const Jet> xi) { return ja(x, xi) * jb(x, xi); };
  }
  if (a.freq_support_radius || b.freq_support_radius) {
    out.freq_support_radius = std::min(a.freq_support_radius.value_or(kInf), b.freq_support_radius.value_or(kInf));
  }
  if (!a.separable.empty() && !b.separable.empty()) {
    for (const auto& ta : a.separable) {
      for (const auto& tb : b.separable) {
        auto sa = ta.space;
        auto sb = tb.space;
        auto qa = ta.freq;
        auto qb = tb.freq;
        out.separable.push_back({[sa, sb](const Vec& x) { return sa(x) * sb(x); },
                                 [qa, qb](std::span<const Vec> xi) { return qa(xi) * qb(xi); }});
      }
    }
  }
  out.x_independent = a.x_independent && b.x_independent;
  out.unit = a.unit && b.unit;
  out.name = "(" + a.name + ")*(" + b.name + ")";
  return out;
}

AmplitudeDescriptor frequency_cutoff(const AmplitudeDescriptor& a, double eps) {
  if (!(eps > 0.0)) throw ValidationError("cutoff scale must be positive");
  if (a.arity != 1) throw ValidationError("frequency_cutoff needs an arity-1 amplitude");
  const int dim = a.dim;
  AmplitudeDescriptor eta;
  eta.dim = dim;
  auto sigma = [eps, dim](std::span<const Vec> xi) {
    return cplx(smooth::plateau_sq(eps * eps * squared_norm(xi[0], dim)));
  };
  eta.evaluator = [sigma](const Vec&, std::span<const Vec> xi) { return sigma(xi); };
  eta.jet_evaluator = [eps, dim](std::span<const Jet>, std::span<const Jet> xi) {
    return smooth::plateau_sq(eps * eps * squared_norm(xi, 0, static_cast<std::size_t>(dim)));
  };
  eta.separable = {{[](const Vec&) { return cplx(1.0); }, sigma}};
  eta.x_independent = true;
  eta.unit = true;  // eta(eps xi) lies in S^0_{1,0}; the product keeps a's class.
  eta.freq_support_radius = 2.0 / eps;
  eta.name = "eta";
  AmplitudeDescriptor out = product_amplitude(a, eta);
  out.unit = false;
  return out;
}

AmplitudeDescriptor scale_amplitude(const AmplitudeDescriptor& a, cplx c) {
  AmplitudeDescriptor out = a;
  auto f = a.evaluator;
  out.evaluator = [f, c](const Vec& x, std::span<const Vec> xi) { return c * f(x, xi); };
  if (a.jet_evaluator) {
    auto j = a.jet_evaluator;
    out.jet_evaluator = [j, c](std::span<const Jet> x, std::span<const Jet> xi) { return j(x, xi) * c; };
  }
  for (auto& t : out.separable) {
    auto s = t.space;
    t.space = [s, c](const Vec& x) { return c * s(x); };
  }
  out.unit = false;
  return out;
}

std::vector<MultiIndex> multi_indices(int vars, int lo, int hi) {
  std::vector<MultiIndex> out;
  if (hi < 0 || vars < 1) return out;
  auto layout = JetLayout::get(vars, hi);
  for (std::size_t m = 0; m < layout->size(); ++m) {
    if (layout->total_degree(m) < lo) continue;
    auto e = layout->exponents(m);
    out.emplace_back(e.begin(), e.end());
  }
  return out;
}

SeminormEstimate estimate_seminorm(const AmplitudeDescriptor& a, int s, const UniformGrid& grid,
                                   const XiSampling& sampling) {
  if (a.arity != 1) throw ValidationError("estimate_seminorm needs an arity-1 amplitude");
  if (a.dim != grid.dim()) throw ValidationError("amplitude and grid dimensions differ");
  if (s < 0) throw ValidationError("seminorm order must be nonnegative");
  if (sampling.j_max < 2) throw ValidationError("xi sampling needs j_max >= 2");
  const int dim = a.dim;
  const int directions = sampling.directions > 0 ? sampling.directions : (dim == 1 ? 2 : 16);
  if (dim == 1 && directions != 2) throw ValidationError("1D sampling uses exactly the two directions +-e1");

  SeminormEstimate est;
  est.s = s;
  est.p = a.claimed.space_exponent();
  est.directions = directions;
  for (int r = 0; r <= sampling.j_max; ++r) est.radii.push_back(std::ldexp(1.0, r));

  const auto alphas = multi_indices(dim, 0, s);
  auto layout = JetLayout::get(dim, s);
  std::vector<std::size_t> slots;
  for (const auto& al : alphas) slots.push_back(layout->index(al));

  struct Sample {
    Vec xi;
    int radius;
  };
  std::vector<Sample> samples;
  for (int r = 0; r <= sampling.j_max; ++r) {
    for (int d = 0; d < directions; ++d) {
      double angle = 2.0 * kPi * d / directions;
      Vec xi = dim == 1 ? Vec{d == 0 ? est.radii[static_cast<std::size_t>(r)] : -est.radii[static_cast<std::size_t>(r)], 0.0}
                        : Vec{est.radii[static_cast<std::size_t>(r)] * std::cos(angle),
                              est.radii[static_cast<std::size_t>(r)] * std::sin(angle)};
      samples.push_back({xi, r});
    }
  }

  // values[sample][alpha]
  std::vector<std::vector<double>> values(samples.size(), std::vector<double>(alphas.size(), 0.0));
  parallel_for(samples.size(), [&](std::size_t si) {
    const Vec xi = samples[si].xi;
    std::vector<SampledField> fields(alphas.size(), SampledField(grid));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      Jet j = a.derivatives(s, grid.point(i), std::span<const Vec>(&xi, 1));
      for (std::size_t k = 0; k < alphas.size(); ++k) {
        fields[k].values[i] = j.coeff(slots[k]) * layout->factorial(slots[k]);
      }
    }
    const double bracket = std::sqrt(1.0 + squared_norm(xi, dim));
    for (std::size_t k = 0; k < alphas.size(); ++k) {
      const int order = total_degree(alphas[k]);
      double norm = lp_norm(fields[k], est.p);
      values[si][k] = std::pow(bracket, a.claimed.rho * order - a.claimed.m) * norm;
    }
  });

  est.profile.assign(alphas.size(), std::vector<double>(est.radii.size(), 0.0));
  for (std::size_t si = 0; si < samples.size(); ++si) {
    for (std::size_t k = 0; k < alphas.size(); ++k) {
      double& slot = est.profile[k][static_cast<std::size_t>(samples[si].radius)];
      double v = values[si][k];
      slot = std::isnan(v) ? kInf : std::max(slot, v);
    }
  }
  NeumaierSum total;
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    const auto& prof = est.profile[k];
    double sup = *std::max_element(prof.begin(), prof.end());
    est.per_alpha.emplace_back(alphas[k], sup);
    total.add(sup);
    const std::size_t top = prof.size() - 1;
    const bool growing = prof[top - 2] < prof[top - 1] && prof[top - 1] < prof[top] && prof[top] > 10.0 * prof[top - 2];
    if ((growing || !std::isfinite(sup)) && !est.class_violation) {
      est.class_violation = true;
      est.violating_alpha = alphas[k];
    }
  }
  est.total = total.result();
  return est;
}

std::vector<Vec> phase_xi_samples(int dim, const PhaseBox& box) {
  std::vector<Vec> out;
  const int radial = std::max(1, box.radial_samples);
  for (int r = 0; r < radial; ++r) {
    const double t = radial == 1 ? 0.0 : static_cast<double>(r) / (radial - 1);
    const double radius = box.xi_min * std::pow(box.xi_max / box.xi_min, t);
    if (dim == 1) {
      out.push_back({radius, 0.0});
      out.push_back({-radius, 0.0});
    } else {
      for (int d = 0; d < box.angular_samples; ++d) {
        // Half-step angular offset keeps samples off the coordinate axes.
        const double angle = 2.0 * kPi * (d + 0.5) / box.angular_samples;
        out.push_back({radius * std::cos(angle), radius * std::sin(angle)});
      }
    }
  }
  return out;
}

PhaseReport verify_phase(const PhaseDescriptor& phi, int k, const PhaseBox& box) {
  if (k != 1 && k != 2) throw ValidationError("verify_phase supports k in {1,2}");
  if (!(box.xi_min >= 0.5) || !(box.xi_max >= box.xi_min)) {
    throw ValidationError("phase sampling must keep |xi| >= 0.5");
  }
  if (box.x_samples < 1 || box.angular_samples < 1) throw ValidationError("phase sampling counts must be positive");
  const int dim = phi.dim;
  const int vars = 2 * dim;
  const int top = k + 3;
  auto layout = JetLayout::get(vars, top);

  std::vector<Vec> xs;
  for (int i = 0; i < box.x_samples; ++i) {
    for (int j = 0; j < (dim == 2 ? box.x_samples : 1); ++j) {
      auto coord = [&](int t) {
        return box.x_samples == 1 ? 0.0 : -box.x_halfwidth + 2.0 * box.x_halfwidth * t / (box.x_samples - 1);
      };
      xs.push_back({coord(i), dim == 2 ? coord(j) : 0.0});
    }
  }
  const std::vector<Vec> xis = phase_xi_samples(dim, box);

  // Index (beta on x, alpha on xi) pairs as one multi-index over (x, xi).
  const auto indices = multi_indices(vars, k, top);
  std::vector<std::size_t> slots;
  for (const auto& idx : indices) slots.push_back(layout->index(idx));

  struct Partial {
    std::vector<double> sup;
    double det = kInf;
    double homog = 0.0;
  };
  const std::size_t count = xs.size() * xis.size();
  std::vector<Partial> partial(count);
  parallel_for(count, [&](std::size_t s) {
    const Vec& x = xs[s / xis.size()];
    const Vec& xi = xis[s % xis.size()];
    Partial& out = partial[s];
    out.sup.assign(indices.size(), 0.0);
    Jet jet = phi.derivatives(top, x, xi);
    const double r = std::sqrt(squared_norm(xi, dim));
    for (std::size_t t = 0; t < indices.size(); ++t) {
      int xi_order = 0;
      for (int c = 0; c < dim; ++c) xi_order += indices[t][static_cast<std::size_t>(dim + c)];
      const double d = std::abs(jet.coeff(slots[t])) * layout->factorial(slots[t]);
      const double v = std::pow(r, -1.0 + xi_order) * d;
      out.sup[t] = std::isnan(v) ? kInf : v;
    }
    Mat2 h{};
    std::vector<int> idx(static_cast<std::size_t>(vars), 0);
    for (int a = 0; a < dim; ++a) {
      for (int b = 0; b < dim; ++b) {
        idx[static_cast<std::size_t>(a)] += 1;
        idx[static_cast<std::size_t>(dim + b)] += 1;
        h[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = jet.derivative(idx).real();
        idx[static_cast<std::size_t>(a)] -= 1;
        idx[static_cast<std::size_t>(dim + b)] -= 1;
      }
    }
    out.det = std::abs(dim == 1 ? h[0][0] : h[0][0] * h[1][1] - h[0][1] * h[1][0]);
    if (phi.homogeneous_degree_1) {
      const double base = phi(x, xi);
      for (double lambda : {2.0, 3.5, 8.0}) {
        const Vec scaled{lambda * xi[0], lambda * xi[1]};
        out.homog = std::max(out.homog, std::abs(phi(x, scaled) - lambda * base) / (lambda * r));
      }
    }
  });

  PhaseReport rep;
  rep.k = k;
  std::vector<double> sup(indices.size(), 0.0);
  rep.snd_constant = kInf;
  for (const auto& p : partial) {
    for (std::size_t t = 0; t < indices.size(); ++t) sup[t] = std::max(sup[t], p.sup[t]);
    rep.snd_constant = std::min(rep.snd_constant, p.det);
    rep.homogeneity_error = std::max(rep.homogeneity_error, p.homog);
  }
  for (std::size_t t = 0; t < indices.size(); ++t) {
    MultiIndex beta(indices[t].begin(), indices[t].begin() + dim);
    MultiIndex alpha(indices[t].begin() + dim, indices[t].end());
    rep.phi_k_constants.push_back({{alpha, beta}, sup[t]});
    if (!std::isfinite(sup[t])) rep.finite = false;
  }
  if (!std::isfinite(rep.snd_constant)) rep.finite = false;
  rep.pass = rep.finite && rep.snd_constant > 0.0 && (!phi.homogeneous_degree_1 || rep.homogeneity_error <= 1e-9);
  return rep;
}

}  // namespace fiolab
