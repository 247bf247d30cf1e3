#include <cmath>
#include <random>

#include "doctest.h"
#include "fiolab/bump.hpp"
#include "fiolab/error.hpp"
#include "fiolab/oscint.hpp"

using namespace fiolab;

namespace {

SampledField gaussian(const UniformGrid& g, double shift = 0.0) {
  return sample_space(g, [shift](const Vec& x) {
    return cplx(std::exp(-0.5 * ((x[0] - shift) * (x[0] - shift) + x[1] * x[1])));
  });
}

cplx inner(const SampledField& a, const SampledField& b) {
  cplx s(0.0);
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values[i] * std::conj(b.values[i]);
  return s;
}

SampledField random_band_limited(const UniformGrid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  SampledField hat(g, Domain::frequency);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec xi = g.freq_point(k);
    const double r = std::hypot(xi[0], xi[1]);
    if (r < 0.5 * g.freq_halfwidth()) hat.values[k] = cplx(nd(rng), nd(rng));
  }
  return fourier_transform(hat, Direction::inverse);
}

OperatorSpec multiplier_spec(const UniformGrid& g, QuadratureMode mode) {
  OperatorSpec spec;
  spec.grid = g;
  spec.amplitude = frequency_cutoff(builtin_amplitude("one", g.dim()), 0.25);
  spec.phase = builtin_phase("wave_phase", g.dim());
  spec.mode = mode;
  return spec;
}

}  // namespace

TEST_CASE("identity amplitude reproduces the input") {
  const auto g = make_grid(1, 256, 16.0);
  OperatorSpec spec;
  spec.grid = g;
  spec.amplitude = builtin_amplitude("one", 1);
  spec.phase = builtin_phase("linear_phase", 1);
  CHECK_THROWS_AS(apply_fio(spec, gaussian(g)), ValidationError);
  spec.acknowledge_tail = true;
  const auto f = gaussian(g);
  for (auto mode : {QuadratureMode::direct, QuadratureMode::fast_linear_phase}) {
    spec.mode = mode;
    CHECK(relative_l2_error(apply_fio(spec, f), f) <= 1e-10);
  }
}

TEST_CASE("space amplitude multiplies pointwise") {
  const auto g = make_grid(1, 256, 16.0);
  auto psi = [](const Vec& x) { return cplx(std::cos(x[0]) / (1.0 + x[0] * x[0])); };
  OperatorSpec spec;
  spec.grid = g;
  spec.amplitude = space_amplitude(psi, {}, 1, kInf, "psi");
  spec.phase = builtin_phase("linear_phase", 1);
  spec.acknowledge_tail = true;
  spec.mode = QuadratureMode::direct;
  const auto f = gaussian(g, 1.0);
  SampledField expected = f;
  for (std::size_t i = 0; i < g.size(); ++i) expected.values[i] *= psi(g.point(i));
  CHECK(relative_l2_error(apply_fio(spec, f), expected) <= 1e-10);
}

TEST_CASE("half-wave multiplier against a frequency-side oracle") {
  const auto g = make_grid(1, 512, 32.0);
  const auto f = gaussian(g, 2.0);
  const auto spec = multiplier_spec(g, QuadratureMode::direct);
  SampledField hat = fourier_transform(f, Direction::forward);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec xi = g.freq_point(k);
    hat.values[k] *= std::polar(1.0, std::abs(xi[0])) * spec.amplitude(Vec{0, 0}, xi);
  }
  const auto oracle = fourier_transform(hat, Direction::inverse);
  CHECK(relative_l2_error(apply_fio(spec, f), oracle) <= 1e-8);
}

TEST_CASE("direct and fast modes agree on random inputs") {
  for (int dim : {1, 2}) {
    const auto g = dim == 1 ? make_grid(1, 256, 16.0) : make_grid(2, 32, 8.0);
    const FioOperator direct(multiplier_spec(g, QuadratureMode::direct));
    const FioOperator fast(multiplier_spec(g, QuadratureMode::fast_linear_phase));
    CHECK(fast.mode() == QuadratureMode::fast_linear_phase);
    std::mt19937_64 rng(7);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const auto f = random_band_limited(g, rng);
      worst = std::max(worst, relative_l2_error(direct.apply(f), fast.apply(f)));
    }
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("separable amplitude in fast mode") {
  const auto g = make_grid(1, 256, 16.0);
  auto psi = [](const Vec& x) { return cplx(1.0 / (1.0 + x[0] * x[0]), 0.3 * x[0] / (4.0 + x[0] * x[0])); };
  OperatorSpec spec;
  spec.grid = g;
  spec.amplitude = windowed_amplitude(psi, 1, 6.0);
  spec.phase = builtin_phase("wave_phase", 1);
  spec.mode = QuadratureMode::direct;
  const FioOperator direct(spec);
  spec.mode = QuadratureMode::automatic;
  const FioOperator fast(spec);
  CHECK(fast.mode() == QuadratureMode::fast_linear_phase);
  const auto f = gaussian(g, -1.0);
  CHECK(relative_l2_error(fast.apply(f), direct.apply(f)) <= 1e-10);
}

TEST_CASE("linearity and translation covariance") {
  const auto g = make_grid(1, 128, 8.0);
  OperatorSpec spec = multiplier_spec(g, QuadratureMode::direct);
  spec.phase = builtin_phase("linear_phase", 1);
  const FioOperator op(spec);
  std::mt19937_64 rng(3);
  const auto f = random_band_limited(g, rng);
  const auto h = random_band_limited(g, rng);
  const cplx alpha(0.7, -1.2);
  const cplx beta(-0.4, 2.0);
  SampledField combo(g);
  for (std::size_t i = 0; i < g.size(); ++i) combo.values[i] = alpha * f.values[i] + beta * h.values[i];
  const auto tf = op.apply(f);
  const auto th = op.apply(h);
  SampledField expected(g);
  for (std::size_t i = 0; i < g.size(); ++i) expected.values[i] = alpha * tf.values[i] + beta * th.values[i];
  CHECK(relative_l2_error(op.apply(combo), expected) <= 1e-12);

  for (int shift : {1, 5}) {
    SampledField moved(g);
    SampledField moved_out(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      moved.values[(i + shift) % g.size()] = f.values[i];
      moved_out.values[(i + shift) % g.size()] = tf.values[i];
    }
    CHECK(relative_l2_error(op.apply(moved), moved_out) <= 1e-12);
  }
}

TEST_CASE("adjoint is the conjugate transpose") {
  const auto g = make_grid(1, 64, 8.0);
  OperatorSpec spec;
  spec.grid = g;
  spec.amplitude = amplitude_from_expression("exp(-x1^2) * jb(k1_1)^(-2) + 0.5 * sin(x1) * jb(k1_1)^(-3)", 1, 1,
                                             ClassTag::hormander(-2.0, 1.0, 0.0));
  spec.phase = builtin_phase("wave_phase", 1);
  std::mt19937_64 rng(11);
  const auto f = random_band_limited(g, rng);
  const auto h = random_band_limited(g, rng);
  spec.mode = QuadratureMode::direct;
  for (std::size_t cache : {std::size_t{0}, FioOperator::kCacheEntries}) {
    const FioOperator op(spec, cache);
    CHECK(op.cached() == (cache > 0));
    const cplx lhs = inner(op.apply(f), h);
    const cplx rhs = inner(f, op.apply_adjoint(h));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
  }

  spec.amplitude = windowed_amplitude([](const Vec& x) { return cplx(std::cos(x[0]), 0.5); }, 1, 5.0);
  spec.mode = QuadratureMode::fast_linear_phase;
  const FioOperator fast(spec);
  const cplx lhs = inner(fast.apply(f), h);
  const cplx rhs = inner(f, fast.apply_adjoint(h));
  CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
}

TEST_CASE("operator errors") {
  const auto g = make_grid(1, 64, 8.0);
  const auto spec = multiplier_spec(g, QuadratureMode::direct);
  CHECK_THROWS_AS(apply_fio(spec, gaussian(make_grid(1, 128, 8.0))), ValidationError);

  OperatorSpec bad = spec;
  bad.amplitude = builtin_amplitude("one", 1);
  bad.phase = builtin_phase("linear_phase", 1);
  bad.mode = QuadratureMode::fast_linear_phase;
  bad.phase = phase_from_expression("x1 * k1_1 + sin(x1) * k1_1", 1, true, 2);
  bad.acknowledge_tail = true;
  CHECK_THROWS_AS(FioOperator{bad}, ValidationError);

  // Residual phase 12 |xi| on a grid with dxi = pi / 8 jumps 1.5 pi per cell.
  OperatorSpec fast = bad;
  fast.mode = QuadratureMode::direct;
  fast.phase = phase_from_expression("x1 * k1_1 + 12 * abs(k1_1)", 1, true, 2);
  try {
    FioOperator op(fast);
    FAIL("expected an underresolved error");
  } catch (const UnderresolvedError& e) {
    CHECK(e.required_points() == 128);
  }
}

TEST_CASE("low-frequency kernel of a plain bump") {
  KernelProblem p;
  p.dim = 2;
  p.psi = [](const Vec&) { return 0.0; };
  p.eta = [](const Vec& xi) { return LPPartition::psi0_sq(xi[0] * xi[0] + xi[1] * xi[1]); };
  p.eta_radius = 2.0;
  KernelOptions opt;
  opt.angles = 16;
  opt.points = 200;
  const auto r1 = low_frequency_kernel(p, opt);
  CHECK(r1.fitted_slope <= -(2 + 0.9));

  KernelProblem doubled = p;
  doubled.eta = [p](const Vec& xi) { return 2.0 * p.eta(xi); };
  const auto r2 = low_frequency_kernel(doubled, opt);
  CHECK(r2.constant == doctest::Approx(2.0 * r1.constant).epsilon(1e-12));
  CHECK(r2.fitted_slope == doctest::Approx(r1.fitted_slope).epsilon(1e-9));

  opt.points = 64;
  CHECK_THROWS_AS(low_frequency_kernel(p, opt), UnderresolvedError);
}

TEST_CASE("low-frequency kernel of the reduced wave phase") {
  const auto caps = reduce_phase_low_frequency(builtin_phase("wave_phase", 2));
  REQUIRE(caps.size() == 8);
  const auto& cap = caps.front();
  CHECK(cap.phase.center[0] == doctest::Approx(1.0));
  auto eta = [](const Vec& xi) { return LPPartition::psi0_sq(xi[0] * xi[0] + xi[1] * xi[1]); };
  KernelOptions opt;
  opt.angles = 32;
  const auto r = low_frequency_kernel(cap.phase, Vec{0.3, -0.2}, eta, 2.0, opt);
  CHECK(r.fitted_slope <= -(2 + 0.9) + 0.15);
  CHECK(r.samples.size() == 17);
}

TEST_CASE("periodization of a single mode") {
  const auto g = make_grid(1, 64, 8.0);
  const double L = 2.0 * (3.0 + 1.0);
  auto a = amplitude_from_expression("exp(-x1^2) * exp(i * 2 * pi * 3 * k1_1 / 8)", 1, 1,
                                     ClassTag::hormander(0.0, 1.0, 0.0), 3.0);
  PeriodizeOptions opt;
  opt.use_eta = false;
  const auto res = periodize_amplitude(a, g, opt);
  CHECK(res.cube_side == doctest::Approx(L));
  for (const auto& mode : res.coefficients) {
    if (mode.k[0] == 3) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(std::abs(mode.coefficient.values[i] - std::exp(-g.point(i)[0] * g.point(i)[0])) <= 1e-12);
      }
    } else {
      CHECK(mode.norm < 1e-12);
    }
  }
}

TEST_CASE("periodization of a windowed amplitude") {
  const auto g = make_grid(1, 512, 16.0);
  auto psi = [](const Vec& x) { return cplx(std::exp(-0.25 * x[0] * x[0]) * (1.0 + 0.2 * std::sin(x[0]))); };
  const auto a = windowed_amplitude(psi, 1, 8.0);
  PeriodizeOptions opt;
  double previous = kInf;
  for (int K : {4, 8, 16}) {
    opt.modes = K;
    const auto res = periodize_amplitude(a, g, opt);
    CHECK(res.reconstruction_error < previous);
    previous = res.reconstruction_error;
    if (K == 8) {
      CHECK(res.decay_order == 2);
      CHECK(res.reconstruction_error <= 1e-6);
      REQUIRE(res.decay_fit.has_value());
      CHECK(res.decay_fit->slope <= -2.0);

      const auto phase = builtin_phase("wave_phase", 1);
      const auto f = gaussian(g, 1.5);
      OperatorSpec spec;
      spec.grid = g;
      spec.amplitude = a;
      spec.phase = phase;
      spec.mode = QuadratureMode::direct;
      CHECK(relative_l2_error(apply_periodized(res, phase, f), apply_fio(spec, f)) <= 1e-5);
    }
  }

  // Coefficients are linear in the amplitude.
  opt.modes = 4;
  const auto r1 = periodize_amplitude(a, g, opt);
  const auto r3 = periodize_amplitude(scale_amplitude(a, cplx(0.0, 3.0)), g, opt);
  for (std::size_t m = 0; m < r1.coefficients.size(); ++m) {
    for (std::size_t i = 0; i < g.size(); i += 37) {
      CHECK(std::abs(r3.coefficients[m].coefficient.values[i] - cplx(0.0, 3.0) * r1.coefficients[m].coefficient.values[i]) <=
            1e-14);
    }
  }

  AmplitudeDescriptor wide = a;
  PeriodizeOptions tight;
  tight.cube_side = 10.0;
  CHECK_THROWS_AS(periodize_amplitude(wide, g, tight), ValidationError);
  AmplitudeDescriptor unbounded = builtin_amplitude("one", 1);
  CHECK_THROWS_AS(periodize_amplitude(unbounded, g), ValidationError);
}

TEST_CASE("non-stationary phase check") {
  NonstationaryProblem ann;
  ann.dim = 1;
  // F supported on 0.5 < |xi| < 1.5.
  auto F = [](auto t) { return smooth::bump((t - 1.0) * 2.0) + smooth::bump((t + 1.0) * 2.0); };
  ann.amplitude = [F](const Vec& xi) { return F(xi[0]); };
  ann.amplitude_jet = [F](std::span<const Jet> xi) { return F(xi[0]); };
  ann.phase = [](const Vec& xi) { return 0.5 * xi[0] * xi[0]; };
  ann.phase_jet = [](std::span<const Jet> xi) { return 0.5 * xi[0] * xi[0]; };
  ann.support_radius = 1.5;
  const auto r = verify_nonstationary_decay(ann, 1);
  CHECK(r.finite);
  CHECK(r.lambdas.size() == 9);
  CHECK(r.min_gradient == doctest::Approx(0.5).epsilon(0.05));
  CHECK(r.rhs > 0.0);
  // The bound itself: LHS <= C RHS with a moderate C.
  for (double ratio : r.ratios) CHECK(ratio <= 2.0);

  NonstationaryProblem origin = ann;
  origin.amplitude = [](const Vec& xi) { return smooth::bump(xi[0]); };
  origin.amplitude_jet = [](std::span<const Jet> xi) { return smooth::bump(xi[0]); };
  origin.support_radius = 1.0;
  CHECK_THROWS_WITH_AS(verify_nonstationary_decay(origin, 1), doctest::Contains("stationary point detected"),
                       ValidationError);

  // Critical point between grid nodes is found by the Newton refinement.
  NonstationaryProblem offset = origin;
  offset.phase = [](const Vec& xi) { return 0.5 * (xi[0] - 0.0123) * (xi[0] - 0.0123); };
  offset.phase_jet = [](std::span<const Jet> xi) { return 0.5 * (xi[0] - 0.0123) * (xi[0] - 0.0123); };
  CHECK_THROWS_AS(verify_nonstationary_decay(offset, 1, {}, 64), ValidationError);
}

TEST_CASE("TT* kernel decay") {
  const auto psi_only = builtin_amplitude("one", 1);
  for (int dim : {1, 2}) {
    const auto r = ttstar_decay_check(builtin_amplitude("one", dim), builtin_phase("linear_phase", dim), 3, dim + 1.0);
    CHECK(r.fitted_decay <= -(dim + 1.0));
    CHECK(r.kernel_hermitian_error <= 1e-12);
    CHECK(r.distances.size() == 16);
  }
  const auto w = ttstar_decay_check(psi_only, builtin_phase("wave_phase", 1), 4, 2.0);
  CHECK(w.fitted_decay <= -2.0 + 0.2);
  CHECK(w.pass);

  auto rough = builtin_amplitude("rough_log", 2);
  const auto rr = ttstar_decay_check(rough, builtin_phase("wave_phase", 2), 3, 3.0, TTStarOptions{{0.3, 0.1}});
  CHECK(rr.kernel_hermitian_error <= 1e-12);

  CHECK_THROWS_AS(ttstar_decay_check(psi_only, builtin_phase("linear_phase", 1), 3, 1.0), ValidationError);
}

TEST_CASE("named non-stationary examples") {
  for (const std::string name : {"bump_linear", "annulus_quadratic"}) {
    const auto r = verify_nonstationary_decay(nonstationary_example(name), nonstationary_example_order(name));
    CHECK(r.finite);
    CHECK(r.min_gradient > 0.1);
    for (double ratio : r.ratios) CHECK(ratio <= 2.0);
  }
  CHECK_THROWS_WITH_AS(verify_nonstationary_decay(nonstationary_example("origin_quadratic"), 1),
                       doctest::Contains("stationary point detected"), ValidationError);
  CHECK_THROWS_AS(nonstationary_example("saddle"), ValidationError);
}
