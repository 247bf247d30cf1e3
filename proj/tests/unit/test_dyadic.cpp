#include <cmath>
#include <random>

#include "doctest.h"
#include "fiolab/dyadic.hpp"
#include "fiolab/error.hpp"

using namespace fiolab;

namespace {

Vec random_in_ball(std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (true) {
    Vec v{u(rng), u(rng)};
    if (v[0] * v[0] + v[1] * v[1] <= 1.0) return {radius * v[0], radius * v[1]};
  }
}

}  // namespace

TEST_CASE("littlewood-paley partition") {
  LPPartition lp(6);
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) worst = std::max(worst, std::abs(lp.partial_sum(random_in_ball(rng, 64.0)) - 1.0));
  CHECK(worst <= 1e-12);
  CHECK(lp.psi(3, {1.0, 0.0}) == 0.0);
  const double ref = lp.psi(1, {2.0, 0.0});
  for (int j = 1; j <= 6; ++j) CHECK(lp.psi(j, {std::ldexp(1.0, j), 0.0}) == ref);
  // Supports.
  CHECK(lp.psi0({2.0, 0.0}) == 0.0);
  CHECK(lp.psi(4, {0.0, 7.99}) == 0.0);
  CHECK(lp.psi(4, {0.0, 32.0}) == 0.0);
  CHECK(lp.psi(4, {0.0, 16.0}) > 0.0);
  CHECK_THROWS_AS(LPPartition(0), ValidationError);
}

TEST_CASE("cone net at level 4") {
  ConeNet net(4);
  CHECK(net.size() >= 12);
  CHECK(net.size() <= 50);
  CHECK(net.size() == 25);
  CHECK(net.min_separation() >= 0.25);
  CHECK(net.covering_radius() < 0.25);
  const double step = 2 * kPi / static_cast<double>(net.size());
  CHECK(step >= 0.25);
  CHECK(step < 0.5);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int t = 0; t < 200; ++t) {
    Vec xi{u(rng), u(rng)};
    auto chi = net.chi_all(xi);
    double s = 0.0;
    for (std::size_t nu = 0; nu < chi.size(); ++nu) {
      s += chi[nu];
      CHECK(chi[nu] == net.chi(nu, xi));
      if (chi[nu] > 0.0) CHECK(net.in_cone(nu, xi));
    }
    CHECK(std::abs(s - 1.0) <= 1e-10);
  }
  // Degree-0 homogeneity on exactly scalable samples.
  std::uniform_int_distribution<int> q(-4096, 4096);
  for (int t = 0; t < 200; ++t) {
    Vec xi{q(rng) / 64.0, q(rng) / 64.0};
    if (xi[0] == 0.0 && xi[1] == 0.0) continue;
    for (double lambda : {2.0, 10.0}) {
      Vec scaled{lambda * xi[0], lambda * xi[1]};
      for (std::size_t nu = 0; nu < net.size(); ++nu) CHECK(net.chi(nu, scaled) == net.chi(nu, xi));
    }
  }
}

TEST_CASE("separation and covering at several levels") {
  for (int j = 1; j <= 10; ++j) {
    ConeNet net(j);
    const double d = std::pow(2.0, -0.5 * j);
    CHECK(net.min_separation() >= d);
    CHECK(net.covering_radius() < d);
  }
}

TEST_CASE("one-dimensional net") {
  ConeNet net(3, 1);
  CHECK(net.size() == 2);
  CHECK(net.chi(0, {2.0, 0.0}) == 1.0);
  CHECK(net.chi(1, {-2.0, 0.0}) == 1.0);
  CHECK(net.chi(0, {-2.0, 0.0}) == 0.0);
}

TEST_CASE("combined partition") {
  const int j_max = 5;
  LPPartition lp(j_max);
  std::vector<ConeNet> nets;
  for (int j = 1; j <= j_max; ++j) nets.emplace_back(j);
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (int t = 0; t < 2000; ++t) {
    Vec xi = random_in_ball(rng, 32.0);
    double s = lp.psi0(xi);
    for (int j = 1; j <= j_max; ++j) {
      for (double c : nets[static_cast<std::size_t>(j - 1)].chi_all(xi)) s += c * lp.psi(j, xi);
    }
    worst = std::max(worst, std::abs(s - 1.0));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("cutoff derivative estimates are level uniform") {
  for (int j : {3, 4}) {
    auto a = measure_chi_estimates(ConeNet(j));
    auto b = measure_chi_estimates(ConeNet(j + 2));
    for (std::size_t t = 0; t < a.isotropic.size(); ++t) {
      const double ca = a.isotropic[t].second;
      const double cb = b.isotropic[t].second;
      CHECK(std::isfinite(ca));
      if (ca > 1e-12) CHECK(cb / ca <= 2.0);
      if (ca > 1e-12) CHECK(cb / ca >= 0.5);
    }
    for (double r : a.radial) CHECK(std::isfinite(r));
  }
}

TEST_CASE("phase reduction") {
  ConeNet net(4);
  auto lin = reduce_phase(builtin_phase("linear_phase", 2), net, 3);
  for (const auto& e : lin.estimates) {
    CHECK(e.parallel == 0.0);
    CHECK(e.perpendicular == 0.0);
  }
  CHECK(lin.pass);
  CHECK(lin.phase.value({0.3, 0.1}, {5.0, 2.0}) == doctest::Approx(0.0).scale(1.0));

  auto wave = builtin_phase("wave_phase", 2);
  auto w = reduce_phase(wave, net, 0);
  CHECK(w.pass);
  CHECK(w.euler_error <= 1e-9);
  const Vec xi{9.0, 1.5};
  CHECK(std::abs(w.phase.value({0.2, -0.4}, xi) - (std::hypot(xi[0], xi[1]) - xi[0])) < 1e-12);

  // Perpendicular N=2 constants stay stable across levels.
  std::vector<double> c2;
  for (int j : {3, 4, 5}) {
    auto r = reduce_phase(wave, ConeNet(j), 0);
    c2.push_back(r.estimates[0].perpendicular);
    CHECK(std::isfinite(r.estimates[0].parallel));
    CHECK(std::isfinite(r.estimates[1].parallel));
  }
  for (double c : c2) {
    CHECK(c > 0.0);
    CHECK(c / c2[0] < 2.0);
    CHECK(c / c2[0] > 0.5);
  }

  auto caps = reduce_phase_low_frequency(wave);
  CHECK(caps.size() == 8);
  for (const auto& cap : caps) CHECK(cap.gradient_sup <= 2.0);
  CHECK_THROWS_AS(reduce_phase(phase_from_expression("x1*k1_1^2", 2, false, 2), net, 0), ValidationError);
}

TEST_CASE("piece amplitudes") {
  LPPartition lp(6);
  auto one = builtin_amplitude("one", 2);
  auto wave = builtin_phase("wave_phase", 2);
  ConeNet net4(4);
  std::vector<double> ratios;
  for (int j : {2, 4, 6}) {
    ConeNet net(j);
    for (double m : support_measures(net)) ratios.push_back(m / std::pow(2.0, 1.5 * j));
  }
  const double lo = *std::min_element(ratios.begin(), ratios.end());
  const double hi = *std::max_element(ratios.begin(), ratios.end());
  CHECK(hi / lo <= 4.0);

  auto piece = make_piece_amplitude(one, wave, lp, net4, 4, 2);
  CHECK(piece.support_measure > 0.0);
  const Vec far{-16.0, 0.0};
  CHECK(piece({0.1, 0.2}, far) == cplx(0.0));

  auto rough = builtin_amplitude("rough_log", 2);
  std::vector<PieceAmplitude> pieces;
  for (std::size_t nu = 0; nu < net4.size(); ++nu) pieces.push_back(make_piece_amplitude(rough, wave, lp, net4, 4, nu, 16));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(-0.9, 0.9);
  for (int t = 0; t < 50; ++t) {
    Vec x{ux(rng) * 0.7, ux(rng) * 0.7};
    Vec xi = random_in_ball(rng, 32.0);
    cplx s = 0.0;
    for (const auto& p : pieces) s += p(x, xi) * std::exp(cplx(0.0, -p.phase.value(x, xi)));
    cplx expect = rough(x, xi) * lp.psi(4, xi);
    CHECK(std::abs(s - expect) <= 1e-10);
  }
}

TEST_CASE("decomposition report") {
  auto rep = decomposition_report(2, 4, false);
  CHECK(rep.size() == 3);
  CHECK(rep[2].centers == 25);
  CHECK_THROWS_AS(ConeNet(60), ValidationError);
}

TEST_CASE("partition check") {
  const PartitionCheck c = check_partition(5, 3000, 7);
  CHECK(c.samples == 3000);
  CHECK(c.lp_error <= 1e-12);
  CHECK(c.cone_error <= 1e-10);
  CHECK_THROWS_AS(check_partition(5, 0, 7), ValidationError);
}
