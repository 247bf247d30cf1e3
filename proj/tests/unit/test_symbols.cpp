#include <cmath>
#include <random>

#include "doctest.h"
#include "fiolab/bump.hpp"
#include "fiolab/error.hpp"
#include "fiolab/symbols.hpp"

using namespace fiolab;

namespace {

double per_alpha(const SeminormEstimate& est, const MultiIndex& alpha) {
  for (const auto& [a, v] : est.per_alpha) {
    if (a == alpha) return v;
  }
  FAIL("missing multi-index");
  return 0.0;
}

double phi_constant(const PhaseReport& rep, const MultiIndex& alpha, const MultiIndex& beta) {
  for (const auto& [key, v] : rep.phi_k_constants) {
    if (key.first == alpha && key.second == beta) return v;
  }
  FAIL("missing multi-index pair");
  return 0.0;
}

// L2 bump b(x) = psi(x) with its jet.
AmplitudeDescriptor bump_space(int dim) {
  return space_amplitude([dim](const Vec& x) { return cplx(standard_bump(x, dim)); },
                         [dim](std::span<const Jet> x) {
                           Jet r2 = x[0] * x[0];
                           if (dim == 2) r2 += x[1] * x[1];
                           return smooth::bump_sq(r2);
                         },
                         dim, 2.0, "psi");
}

}  // namespace

TEST_CASE("class tags") {
  CHECK_THROWS_AS(ClassTag::rough(0.5, 0, 0), ValidationError);
  CHECK_THROWS_AS(ClassTag::hormander(0, 1.5, 0), ValidationError);
  CHECK_THROWS_AS(ClassTag::product_rough(2, {1.0}, {1.0, 1.0}), ValidationError);
  auto t = ClassTag::product_rough(kInf, {-1.0, -0.5}, {1.0, 0.5});
  CHECK(t.total_order() == -1.5);
}

TEST_CASE("japanese bracket seminorm is one at order zero") {
  auto a = builtin_amplitude("jb_power(-1.5)", 1);
  auto grid = make_grid(1, 64, 2.0);
  auto est = estimate_seminorm(a, 0, grid);
  CHECK(std::abs(per_alpha(est, {0}) - 1.0) < 1e-9);
  CHECK_FALSE(est.class_violation);
  auto est2 = estimate_seminorm(a, 2, grid);
  CHECK(std::isfinite(est2.total));
  CHECK_FALSE(est2.class_violation);
}

TEST_CASE("rough log symbol separates rho = 0 from rho = 1") {
  auto grid = make_grid(1, 512, 2.0);
  auto a = builtin_amplitude("rough_log", 1);
  CHECK(a.claimed.rho == 0.0);
  auto est = estimate_seminorm(a, 2, grid);
  for (const auto& [alpha, v] : est.per_alpha) CHECK(std::isfinite(v));
  CHECK_FALSE(est.class_violation);

  auto strict = a;
  strict.claimed = ClassTag::rough(2.0, 0.0, 1.0);
  auto est1 = estimate_seminorm(strict, 2, grid);
  CHECK(est1.class_violation);

  // The parsed form agrees with the built-in away from x = 0.
  auto parsed = amplitude_from_expression("exp(i*k1_1*log(abs(x1)))", 1, 1, ClassTag::rough(2, 0, 0));
  for (double x : {-0.6, 0.2, 0.9}) {
    for (double xi : {1.0, 6.0}) {
      cplx expect = std::exp(cplx(0.0, xi * std::log(std::abs(x))));
      CHECK(std::abs(parsed(Vec{x, 0}, Vec{xi, 0}) - expect) < 1e-14);
      CHECK(std::abs(a(Vec{x, 0}, Vec{xi, 0}) - expect * standard_bump({x, 0}, 1)) < 1e-14);
    }
  }
  CHECK(a(Vec{0.0, 0.0}, Vec{3.0, 0.0}) == cplx(0.0));
}

TEST_CASE("space factor times symbol lands in the product class") {
  auto grid = make_grid(1, 256, 2.0);
  auto ab = product_amplitude(bump_space(1), builtin_amplitude("jb_power(-1)", 1));
  CHECK(ab.claimed.kind == ClassTag::Kind::rough);
  CHECK(ab.claimed.p == 2.0);
  CHECK(ab.claimed.m == -1.0);
  auto est = estimate_seminorm(ab, 2, grid);
  CHECK(std::isfinite(est.total));
  CHECK_FALSE(est.class_violation);
  CHECK(ab.separable.size() == 1);
}

TEST_CASE("product classes") {
  auto inf0 = builtin_amplitude("rough_log", 1);
  inf0.claimed = ClassTag::rough(kInf, 0.0, 1.0);
  auto l2 = builtin_amplitude("jb_power(-1)", 1);
  l2.claimed = ClassTag::rough(2.0, -1.0, 1.0);
  auto prod = product_amplitude(inf0, l2);
  CHECK(prod.claimed.kind == ClassTag::Kind::rough);
  CHECK(prod.claimed.p == 2.0);
  CHECK(prod.claimed.m == -1.0);

  auto rl = builtin_amplitude("rough_log", 1);
  auto with_one = product_amplitude(rl, builtin_amplitude("one", 1));
  CHECK(with_one.claimed.kind == rl.claimed.kind);
  CHECK(with_one.claimed.p == rl.claimed.p);
  CHECK(with_one.claimed.m == rl.claimed.m);
  CHECK(with_one.claimed.rho == rl.claimed.rho);

  CHECK_THROWS_AS(product_amplitude(rl, builtin_amplitude("jb_power(-1)", 1)), ValidationError);
}

TEST_CASE("leibniz bound on a concrete pair") {
  auto grid = make_grid(1, 256, 2.0);
  // a: rough-type factor with rho = 1 claimed loosely so seminorms stay finite
  auto a = product_amplitude(bump_space(1), builtin_amplitude("jb_power(-0.5)", 1));
  auto b = amplitude_from_expression("cos(x1) * jb(k1_1)^(-1) * exp(i*k1_1/jb(k1_1))", 1, 1,
                                     ClassTag::rough(kInf, -1.0, 1.0));
  auto ab = product_amplitude(a, b);
  const int s = 2;
  auto ea = estimate_seminorm(a, s, grid);
  auto eb = estimate_seminorm(b, s, grid);
  auto eab = estimate_seminorm(ab, s, grid);
  for (int k = 0; k <= s; ++k) {
    double bound = 0.0;
    for (int j = 0; j <= k; ++j) {
      double binom = std::tgamma(k + 1.0) / (std::tgamma(j + 1.0) * std::tgamma(k - j + 1.0));
      bound += binom * per_alpha(ea, {j}) * per_alpha(eb, {k - j});
    }
    CHECK(per_alpha(eab, {k}) <= bound * (1 + 1e-12));
  }
}

TEST_CASE("finite differences agree with jets") {
  auto a = amplitude_from_expression("exp(i*k1_1*x1/jb(k1_1)) * jb(k1_1)^(-2)", 1, 1, ClassTag::hormander(-2, 1, 0));
  auto fd = a;
  fd.jet_evaluator = nullptr;
  for (double xi : {0.3, 2.0, 37.0}) {
    const Vec x{0.7, 0.0};
    const Vec k{xi, 0.0};
    for (int order = 1; order <= 2; ++order) {
      int alpha[1] = {order};
      cplx exact = a.derivative(alpha, x, std::span<const Vec>(&k, 1));
      cplx approx = fd.derivative(alpha, x, std::span<const Vec>(&k, 1));
      CHECK(std::abs(exact - approx) <= 1e-6 * std::max(1e-3, std::abs(exact)));
    }
  }
  // Smooth phase built-in.
  auto phi = builtin_phase("wave_phase", 2);
  auto phi_fd = phi;
  phi_fd.jet_evaluator = nullptr;
  const Vec x{0.3, -0.2};
  const Vec xi{1.5, 2.5};
  auto h1 = phi.mixed_hessian(x, xi);
  auto h2 = phi_fd.mixed_hessian(x, xi);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) CHECK(std::abs(h1[r][c] - h2[r][c]) < 1e-6);
  }
  auto g1 = phi.grad_xi(x, xi);
  auto g2 = phi_fd.grad_xi(x, xi);
  CHECK(std::abs(g1[0] - g2[0]) < 1e-6 * std::abs(g1[0]));
}

TEST_CASE("linear phase") {
  for (int dim : {1, 2}) {
    auto rep = verify_phase(builtin_phase("linear_phase", dim), 2);
    CHECK(rep.snd_constant == 1.0);
    CHECK(rep.pass);
    for (const auto& [key, v] : rep.phi_k_constants) {
      const auto& [alpha, beta] = key;
      bool mixed_pair = false;
      for (int c = 0; c < dim; ++c) {
        MultiIndex e(static_cast<std::size_t>(dim), 0);
        e[static_cast<std::size_t>(c)] = 1;
        if (alpha == e && beta == e) mixed_pair = true;
      }
      CHECK(v == (mixed_pair ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("wave phase") {
  auto phi = builtin_phase("wave_phase", 2);
  auto rep = verify_phase(phi, 2);
  CHECK(rep.snd_constant == 1.0);
  CHECK(rep.finite);
  CHECK(rep.pass);
  auto rep1 = verify_phase(builtin_phase("wave_phase", 1), 1);
  CHECK(phi_constant(rep1, {1}, {0}) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep1.snd_constant == 1.0);
}

TEST_CASE("degenerate phase fails SND") {
  auto phi = phase_from_expression("x1*k1_1", 2, true, 2);
  auto rep = verify_phase(phi, 2);
  CHECK(rep.snd_constant == 0.0);
  CHECK_FALSE(rep.pass);
}

TEST_CASE("homogeneity spot check") {
  auto phi = builtin_phase("wave_phase", 2);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  std::uniform_real_distribution<double> lam(1, 8);
  for (int t = 0; t < 100; ++t) {
    Vec x{u(rng), u(rng)};
    Vec xi{u(rng), u(rng)};
    double l = lam(rng);
    double r = std::hypot(xi[0], xi[1]);
    CHECK(std::abs(phi(x, {l * xi[0], l * xi[1]}) - l * phi(x, xi)) <= 1e-9 * l * r);
  }
}

TEST_CASE("cutoff stability") {
  auto grid = make_grid(1, 256, 2.0);
  auto a = product_amplitude(bump_space(1), builtin_amplitude("jb_power(-1)", 1));
  auto base = estimate_seminorm(a, 2, grid);
  for (double eps : {1.0, 0.5, 0.25, 0.125}) {
    auto est = estimate_seminorm(frequency_cutoff(a, eps), 2, grid);
    CHECK(est.total <= 4.0 * base.total);
  }
}

TEST_CASE("builtins reject unknown names") {
  CHECK_THROWS_AS(builtin_amplitude("nope", 1), ValidationError);
  CHECK_THROWS_AS(builtin_phase("nope", 1), ValidationError);
  CHECK_THROWS_AS(amplitude_from_expression("k2_1", 1, 1, ClassTag{}), ValidationError);
  CHECK_THROWS_AS(amplitude_from_expression("x2", 1, 1, ClassTag{}), ValidationError);
  CHECK(builtin_amplitude("jb_power(-2.5)", 1).claimed.m == -2.5);
}
