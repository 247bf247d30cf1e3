#include <cmath>
#include <random>

#include "doctest.h"
#include "fiolab/bump.hpp"
#include "fiolab/error.hpp"
#include "fiolab/multilinear.hpp"
#include "fiolab/oscint.hpp"

using namespace fiolab;

namespace {

SampledField band_limited(const UniformGrid& g, std::mt19937_64& rng, double fraction) {
  std::normal_distribution<double> nd;
  SampledField hat(g, Domain::frequency);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec xi = g.freq_point(k);
    if (std::hypot(xi[0], xi[1]) < fraction * g.freq_halfwidth()) hat.values[k] = cplx(nd(rng), nd(rng));
  }
  return fourier_transform(hat, Direction::inverse);
}

SampledField multiplier(const SampledField& f, const std::function<cplx(const Vec&)>& m) {
  SampledField hat = fourier_transform(f, Direction::forward);
  for (std::size_t k = 0; k < hat.size(); ++k) hat.values[k] *= m(hat.grid.freq_point(k));
  return fourier_transform(hat, Direction::inverse);
}

double jb(const Vec& v) { return std::sqrt(1.0 + v[0] * v[0] + v[1] * v[1]); }

/// <xi>^{-1} <eta>^{-1} e^{i xi.eta / (<xi><eta>)} psi(x).
AmplitudeDescriptor coupled(int dim) {
  AmplitudeDescriptor a;
  a.arity = 2;
  a.dim = dim;
  a.evaluator = [](const Vec& x, std::span<const Vec> xi) {
    const double u = jb(xi[0]);
    const double v = jb(xi[1]);
    const double dot = xi[0][0] * xi[1][0] + xi[0][1] * xi[1][1];
    return std::polar(std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1])) / (u * v), dot / (u * v));
  };
  a.claimed = ClassTag::product_rough(kInf, {-1.0, -1.0}, {1.0, 1.0});
  a.name = "coupled";
  return a;
}

MultilinearSpec linear_spec(AmplitudeDescriptor a, const UniformGrid& g) {
  MultilinearSpec spec;
  spec.amplitude = std::move(a);
  spec.grid = g;
  for (int j = 0; j < spec.amplitude.arity; ++j) spec.phases.push_back(builtin_phase("linear_phase", g.dim()));
  return spec;
}

}  // namespace

TEST_CASE("unit amplitude gives the pointwise product") {
  const auto g = make_grid(1, 64, 8.0);
  std::mt19937_64 rng(1);
  const auto f = band_limited(g, rng, 0.5);
  const auto h = band_limited(g, rng, 0.5);
  auto spec = linear_spec(amplitude_from_expression("1", 2, 1, ClassTag::hormander(0, 1, 0)), g);
  CHECK_THROWS_AS(apply_multilinear(spec, {f, h}, MultilinearMode::direct), ValidationError);
  spec.acknowledge_tail = true;
  SampledField expected(g);
  for (std::size_t i = 0; i < g.size(); ++i) expected.values[i] = f.values[i] * h.values[i];
  for (auto mode : {MultilinearMode::direct, MultilinearMode::iterated}) {
    CHECK(relative_l2_error(apply_multilinear(spec, {f, h}, mode), expected) <= 1e-10);
  }
}

TEST_CASE("separable amplitude factorizes") {
  const auto g = make_grid(1, 128, 8.0);
  std::mt19937_64 rng(2);
  const auto f = band_limited(g, rng, 0.6);
  const auto h = band_limited(g, rng, 0.6);
  const auto spec = linear_spec(amplitude_from_expression("jb(k1_1)^(-1) * jb(k2_1)^(-2)", 2, 1,
                                                          ClassTag::product_rough(kInf, {-1, -2}, {1, 1})),
                                g);
  const auto a1f = multiplier(f, [](const Vec& xi) { return cplx(1.0 / jb(xi)); });
  const auto a2h = multiplier(h, [](const Vec& xi) { return cplx(1.0 / (jb(xi) * jb(xi))); });
  SampledField expected(g);
  for (std::size_t i = 0; i < g.size(); ++i) expected.values[i] = a1f.values[i] * a2h.values[i];
  for (auto mode : {MultilinearMode::direct, MultilinearMode::iterated}) {
    CHECK(relative_l2_error(apply_multilinear(spec, {f, h}, mode), expected) <= 1e-9);
  }
}

TEST_CASE("direct and iterated agree on a nonseparable amplitude") {
  const auto g = make_grid(1, 256, 16.0);
  const auto spec = linear_spec(coupled(1), g);
  std::mt19937_64 rng(5);
  for (int draw = 0; draw < 2; ++draw) {
    const auto f = band_limited(g, rng, 0.5);
    const auto h = band_limited(g, rng, 0.5);
    const auto d = apply_multilinear(spec, {f, h}, MultilinearMode::direct);
    const auto it = apply_multilinear(spec, {f, h}, MultilinearMode::iterated);
    CHECK(relative_l2_error(it, d) <= 1e-6);
  }

  // Wave phases in both operands, still nonseparable.
  auto wave = spec;
  wave.phases = {builtin_phase("wave_phase", 1), builtin_phase("wave_phase", 1)};
  const auto f = band_limited(g, rng, 0.3);
  const auto h = band_limited(g, rng, 0.3);
  CHECK(relative_l2_error(apply_multilinear(wave, {f, h}, MultilinearMode::iterated),
                          apply_multilinear(wave, {f, h}, MultilinearMode::direct)) <= 1e-6);
}

TEST_CASE("two-dimensional iterated mode against direct samples") {
  const auto g = make_grid(2, 32, 8.0);
  const auto spec = linear_spec(coupled(2), g);
  std::mt19937_64 rng(9);
  const auto f = band_limited(g, rng, 0.4);
  const auto h = band_limited(g, rng, 0.4);
  const auto it = apply_multilinear(spec, {f, h}, MultilinearMode::iterated);
  std::vector<std::size_t> points;
  for (std::size_t i = 0; i < g.size(); i += 37) points.push_back(i);
  const auto d = apply_multilinear_at(spec, {f, h}, points);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t p = 0; p < points.size(); ++p) {
    num += std::norm(it.values[points[p]] - d[p]);
    den += std::norm(d[p]);
  }
  CHECK(std::sqrt(num / den) <= 1e-6);

  const auto big = make_grid(2, 128, 8.0);
  const auto fb = band_limited(big, rng, 0.9);
  CHECK_THROWS_AS(apply_multilinear(linear_spec(coupled(2), big), {fb, fb}, MultilinearMode::direct), ValidationError);
}

TEST_CASE("multilinearity") {
  const auto g = make_grid(1, 64, 8.0);
  const auto spec = linear_spec(coupled(1), g);
  std::mt19937_64 rng(4);
  const auto f = band_limited(g, rng, 0.5);
  const auto f2 = band_limited(g, rng, 0.5);
  const auto h = band_limited(g, rng, 0.5);
  const cplx alpha(1.5, -0.5);
  SampledField combo(g);
  for (std::size_t i = 0; i < g.size(); ++i) combo.values[i] = alpha * f.values[i] + f2.values[i];
  for (auto mode : {MultilinearMode::direct, MultilinearMode::iterated}) {
    const auto a = apply_multilinear(spec, {f, h}, mode);
    const auto b = apply_multilinear(spec, {f2, h}, mode);
    SampledField expected(g);
    for (std::size_t i = 0; i < g.size(); ++i) expected.values[i] = alpha * a.values[i] + b.values[i];
    CHECK(relative_l2_error(apply_multilinear(spec, {combo, h}, mode), expected) <= 1e-12);
    const auto c = apply_multilinear(spec, {h, combo}, mode);
    const auto c1 = apply_multilinear(spec, {h, f}, mode);
    const auto c2 = apply_multilinear(spec, {h, f2}, mode);
    for (std::size_t i = 0; i < g.size(); ++i) expected.values[i] = alpha * c1.values[i] + c2.values[i];
    CHECK(relative_l2_error(c, expected) <= 1e-12);
  }
}

TEST_CASE("freezing a factorized amplitude") {
  const auto g = make_grid(1, 64, 8.0);
  std::mt19937_64 rng(6);
  const auto f = band_limited(g, rng, 0.5);
  auto sigma = [](const Vec& eta) { return cplx(1.0 / jb(eta), 0.1 * eta[0] / (jb(eta) * jb(eta))); };
  auto a = amplitude_from_expression("cos(x1) * jb(k1_1)^(-2) * (1 + i * 0.1 * k2_1 / jb(k2_1)) / jb(k2_1)", 2, 1,
                                     ClassTag::product_rough(kInf, {-2, -1}, {1, 1}));
  const auto phase = builtin_phase("wave_phase", 1);
  const auto frozen = freeze_argument(a, phase, f, 2.0);
  CHECK(frozen.arity == 1);
  CHECK(frozen.claimed.kind == ClassTag::Kind::rough);
  CHECK(frozen.claimed.p == doctest::Approx(2.0));
  CHECK(frozen.claimed.m == doctest::Approx(-1.0));

  OperatorSpec spec;
  spec.grid = g;
  spec.amplitude = amplitude_from_expression("cos(x1) * jb(k1_1)^(-2)", 1, 1, ClassTag::hormander(-2, 1, 0));
  spec.phase = phase;
  spec.mode = QuadratureMode::direct;
  const auto t = apply_fio(spec, f);
  double worst = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < g.size(); i += 5) {
    for (double eta : {-3.0, 0.0, 1.25, 7.5}) {
      const Vec e{eta, 0.0};
      const cplx expected = t.values[i] * sigma(e);
      worst = std::max(worst, std::abs(frozen(g.point(i), e) - expected));
      scale = std::max(scale, std::abs(expected));
    }
  }
  CHECK(worst <= 1e-12 * scale);

  SampledField zero(g);
  const auto z = freeze_argument(a, phase, zero, 2.0);
  CHECK(z(Vec{0.5, 0}, Vec{2.0, 0}) == cplx(0.0));

  auto hormander = amplitude_from_expression("jb(k1_1)^(-1) * jb(k2_1)^(-1)", 2, 1, ClassTag::hormander(-2, 1, 0));
  CHECK_THROWS_AS(freeze_argument(hormander, phase, f, 2.0), ValidationError);
}

TEST_CASE("seminorm transfer for a rough frozen amplitude") {
  const auto g = make_grid(1, 64, 4.0);
  // e^{i eta log|x|} psi(x) <xi>^{-2}, product class with p = inf.
  AmplitudeDescriptor a;
  a.arity = 2;
  a.dim = 1;
  auto value = [](auto x0, auto xi, auto eta) {
    using T = decltype(eta);
    const double r2 = value_of(x0) * value_of(x0);
    if (r2 == 0.0 || r2 >= 1.0) return smooth::zero_like(eta);
    const double lg = 0.5 * std::log(r2);
    T out = exp(cplx(0.0, lg) * eta) * (smooth::bump_sq(r2) / (1.0 + xi * xi));
    return out;
  };
  a.evaluator = [value](const Vec& x, std::span<const Vec> xi) { return value(x[0], cplx(xi[0][0]), cplx(xi[1][0])); };
  a.jet_evaluator = [value](std::span<const Jet> x, std::span<const Jet> xi) { return value(x[0], xi[0], xi[1]); };
  a.claimed = ClassTag::product_rough(kInf, {-2.0, 0.0}, {1.0, 0.0});
  a.name = "rough_pair";

  std::mt19937_64 rng(12);
  const auto phase = builtin_phase("linear_phase", 1);
  XiSampling sampling;
  sampling.j_max = 4;
  for (int t = 0; t < 3; ++t) {
    const auto f = band_limited(g, rng, 0.5);
    const auto frozen = freeze_argument(a, phase, f, 2.0);
    CHECK(frozen.claimed.p == doctest::Approx(2.0));
    const auto est = estimate_seminorm(frozen, 1, g, sampling);
    CHECK(std::isfinite(est.total));
    CHECK_FALSE(est.class_violation);
    CHECK(est.total <= 10.0 * lp_norm(f, 2.0));

    SampledField twice = f;
    for (auto& v : twice.values) v *= 2.0;
    const auto est2 = estimate_seminorm(freeze_argument(a, phase, twice, 2.0), 1, g, sampling);
    CHECK(est2.total == doctest::Approx(2.0 * est.total).epsilon(1e-10));
  }
}

TEST_CASE("freezing composes for three operands") {
  const auto g = make_grid(1, 32, 8.0);
  AmplitudeDescriptor a;
  a.arity = 3;
  a.dim = 1;
  a.evaluator = [](const Vec& x, std::span<const Vec> xi) {
    const double u = jb(xi[0]);
    const double v = jb(xi[1]);
    const double w = jb(xi[2]);
    return std::polar(std::exp(-0.5 * x[0] * x[0]) / (u * v * w), (xi[0][0] * xi[1][0] + xi[1][0] * xi[2][0]) / (u * v * w));
  };
  a.claimed = ClassTag::product_rough(kInf, {-1, -1, -1}, {1, 1, 1});
  a.name = "triple";
  MultilinearSpec spec;
  spec.amplitude = a;
  spec.grid = g;
  spec.phases = {builtin_phase("linear_phase", 1), builtin_phase("wave_phase", 1), builtin_phase("linear_phase", 1)};
  std::mt19937_64 rng(8);
  const auto f1 = band_limited(g, rng, 0.6);
  const auto f2 = band_limited(g, rng, 0.6);
  const auto f3 = band_limited(g, rng, 0.6);
  const auto direct = apply_multilinear(spec, {f1, f2, f3}, MultilinearMode::direct);
  CHECK(relative_l2_error(apply_multilinear(spec, {f1, f2, f3}, MultilinearMode::iterated), direct) <= 1e-5);

  // Other order: freeze operand 2 first, then operand 1, then apply on f1.
  const auto b = freeze_argument(a, spec.phases[1], f2, kInf, 1);
  CHECK(b.arity == 2);
  CHECK(b.claimed.kind == ClassTag::Kind::product_rough);
  const auto c = freeze_argument(b, spec.phases[2], f3, kInf, 1);
  OperatorSpec op;
  op.grid = g;
  op.amplitude = c;
  op.phase = spec.phases[0];
  op.mode = QuadratureMode::direct;
  CHECK(relative_l2_error(apply_fio(op, f1), direct) <= 1e-5);

  CHECK_THROWS_AS(apply_multilinear(spec, {f1, f2}, MultilinearMode::direct), ValidationError);
}

TEST_CASE("frequency split") {
  auto a = amplitude_from_expression("exp(i * x1 * k1_1) * jb(k2_1)^(-1) + 0.3", 2, 1, ClassTag::hormander(0, 1, 0));
  const auto [a1, a2] = frequency_split(a);
  const Vec x{0.4, 0.0};
  const Vec far[2] = {Vec{0.0, 0.0}, Vec{10.0, 0.0}};
  CHECK(std::abs(a1(x, far) - a(x, far)) == 0.0);
  CHECK(a2(x, far) == cplx(0.0));
  const Vec same[2] = {Vec{3.0, 0.0}, Vec{3.0, 0.0}};
  CHECK(std::abs(a1(x, same) - 0.5 * a(x, same)) <= 1e-15);
  CHECK(std::abs(a2(x, same) - 0.5 * a(x, same)) <= 1e-15);
  CHECK(split_cutoff(1.0) == 0.5);

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const Vec p{u(rng), 0.0};
    const Vec xi[2] = {Vec{u(rng), 0.0}, Vec{u(rng) * std::exp(u(rng) / 20.0), 0.0}};
    const cplx full = a(p, xi);
    worst = std::max(worst, std::abs(a1(p, xi) + a2(p, xi) - full) / std::max(1.0, std::abs(full)));
    const double s = (1.0 + xi[0][0] * xi[0][0]) / (1.0 + xi[1][0] * xi[1][0]);
    if (s > 2.0) CHECK(a1(p, xi) == cplx(0.0));
    if (s < 0.5) CHECK(a2(p, xi) == cplx(0.0));
  }
  CHECK(worst <= 1e-12);

  // Jets follow the same cutoff.
  const Vec at[2] = {Vec{1.0, 0.0}, Vec{1.3, 0.0}};
  const int alpha[2] = {1, 1};
  const cplx exact = a1.derivative(alpha, x, at);
  AmplitudeDescriptor no_jets = a1;
  no_jets.jet_evaluator = nullptr;
  CHECK(std::abs(no_jets.derivative(alpha, x, at) - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
}
