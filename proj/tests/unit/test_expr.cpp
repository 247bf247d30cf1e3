#include <array>
#include <cmath>

#include "doctest.h"
#include "fiolab/error.hpp"
#include "fiolab/expr.hpp"

using namespace fiolab;

namespace {

std::array<cplx, Expression::kSlots> slots(double x1, double k11, double k21 = 0.0) {
  std::array<cplx, Expression::kSlots> v{};
  v[Expression::x_slot(0)] = x1;
  v[Expression::k_slot(0, 0)] = k11;
  v[Expression::k_slot(1, 0)] = k21;
  return v;
}

}  // namespace

TEST_CASE("japanese bracket power") {
  auto e = Expression::parse("jb(k1_1)^(-1)");
  CHECK(std::abs(e.evaluate(slots(0.0, 3.0)) - 1.0 / std::sqrt(10.0)) < 1e-15);
  CHECK_FALSE(e.uses_space());
  CHECK(e.max_operand() == 1);
}

TEST_CASE("rough log symbol") {
  auto e = Expression::parse("exp(i*k1_1*log(abs(x1)))");
  for (double x : {-0.7, 0.3, 2.5}) {
    for (double xi : {0.0, 1.0, 17.0}) {
      cplx expect = std::exp(cplx(0.0, xi * std::log(std::abs(x))));
      CHECK(std::abs(e.evaluate(slots(x, xi)) - expect) < 1e-14);
    }
  }
  CHECK_THROWS_AS(e.evaluate(slots(0.0, 1.0)), NumericError);
}

TEST_CASE("precedence and unary minus") {
  auto e = Expression::parse("1 + 2*3^2 - -4/2");
  CHECK(e.evaluate(slots(0, 0)) == cplx(21.0));
  CHECK(Expression::parse("-2^2").evaluate(slots(0, 0)) == cplx(-4.0));
  CHECK(Expression::parse("2^3^2").evaluate(slots(0, 0)) == cplx(512.0));
  CHECK(std::abs(Expression::parse("norm(3, 4) + re(i) + im(2*i)").evaluate(slots(0, 0)) - 7.0) < 1e-15);
  CHECK(Expression::parse("k2_1 * x1").evaluate(slots(2.0, 0.0, 5.0)) == cplx(10.0));
}

TEST_CASE("parse errors carry positions") {
  try {
    Expression::parse("sin(");
    FAIL("expected a parse error");
  } catch (const ParseError& err) {
    CHECK(err.line() == 1);
    CHECK(err.column() == 5);
  }
  try {
    Expression::parse("1 +\n  foo(2)");
    FAIL("expected a parse error");
  } catch (const ParseError& err) {
    CHECK(err.line() == 2);
    CHECK(err.column() == 3);
    CHECK(std::string(err.what()).find("unknown identifier") != std::string::npos);
  }
  CHECK_THROWS_AS(Expression::parse("sin(1, 2)"), ParseError);
  CHECK_THROWS_AS(Expression::parse("k4_1"), ParseError);
  CHECK_THROWS_AS(Expression::parse("(1"), ParseError);
  CHECK_THROWS_AS(Expression::parse("1 $ 2"), ParseError);
}

TEST_CASE("division by zero is a tagged error") {
  auto e = Expression::parse("1 / x1");
  try {
    e.evaluate(slots(0.0, 0.0));
    FAIL("expected a numeric error");
  } catch (const NumericError& err) {
    CHECK(err.tag() == "division_by_zero");
  }
}

TEST_CASE("jet evaluation gives exact derivatives") {
  auto layout = JetLayout::get(2, 3);
  auto e = Expression::parse("sin(x1) * jb(k1_1)^3");
  std::vector<Jet> v(Expression::kSlots, Jet(layout, 0.0));
  const double x = 0.4;
  const double xi = 1.7;
  v[Expression::x_slot(0)] = Jet::variable(layout, 0, x);
  v[Expression::k_slot(0, 0)] = Jet::variable(layout, 1, xi);
  Jet r = e.evaluate(std::span<const Jet>(v));
  // d/dxi (1+xi^2)^{3/2} = 3 xi (1+xi^2)^{1/2}; d2/dxi2 = 3 (1+2 xi^2)/(1+xi^2)^{1/2}.
  int a01[2] = {0, 1};
  int a02[2] = {0, 2};
  int a11[2] = {1, 1};
  double s = std::sqrt(1 + xi * xi);
  CHECK(std::abs(r.derivative(a01) - std::sin(x) * 3 * xi * s) < 1e-13);
  CHECK(std::abs(r.derivative(a02) - std::sin(x) * 3 * (1 + 2 * xi * xi) / s) < 1e-12);
  CHECK(std::abs(r.derivative(a11) - std::cos(x) * 3 * xi * s) < 1e-13);
}
