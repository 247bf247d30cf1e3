#include <cmath>
#include <random>

#include "doctest.h"
#include "fiolab/bounds.hpp"
#include "fiolab/error.hpp"

using namespace fiolab;

namespace {

// Branch formulas written out in the original exponents.
double first_branch(int n, double rho, double p, double q) {
  const double mn = std::min(p, q);
  return n * (rho - 1) / mn - (n - 1) / 2.0 * (1 / p + 1 / mn);
}

double third_branch(int n, double rho, double p, double q) {
  return n * (rho - 1) / q - (n - 1) / (1 - 2 / p) * (1 / q - 0.5);
}

Scenario scenario(const std::string& tag, int n, double rho, double q1, double q2) {
  Scenario s;
  s.tag = tag;
  s.n = n;
  s.rho = rho;
  s.q1 = q1;
  s.q2 = q2;
  return s;
}

}  // namespace

TEST_CASE("m_bar at rho = 1, p = inf is -(n-1)|1/q - 1/2|") {
  for (int n = 1; n <= 4; ++n) {
    for (double q : {1.0, 4.0 / 3.0, 2.0, 4.0, kInf}) {
      CHECK(std::abs(m_bar(n, 1.0, kInf, q) + (n - 1) * std::abs(1 / q - 0.5)) <= 1e-12);
    }
  }
}

TEST_CASE("second branch by hand") {
  CHECK(m_bar_branch(2.0, 2.0) == 2);
  CHECK(std::abs(m_bar(2, 0.5, 2.0, 2.0) + 0.5) <= 1e-15);
  CHECK(std::abs(m_bar(3, 0.25, 4.0, 8.0) - (3 * -0.75 / 2 - 2 * (0.5 - 0.125))) <= 1e-15);
}

TEST_CASE("rho = 1, p = q = 2 degenerates") {
  for (int n = 1; n <= 3; ++n) {
    const ThresholdReport rep = linear_thresholds(n, 1.0, 2.0, 2.0, 0.0);
    CHECK(rep.values.at("m_bar") == 0.0);
    CHECK(rep.values.at("L2_threshold") == 0.0);
    CHECK(rep.values.at("psido_threshold") == 0.0);
    CHECK(rep.values.count("m_script") == 0);
    CHECK(rep.inapplicable == std::vector<std::string>{"m_script"});
    CHECK(rep.r == 1.0);
    CHECK(rep.verdicts.at("psido").status == VerdictStatus::borderline);
    CHECK(rep.verdicts.at("fio_l2").status == VerdictStatus::borderline);
    // Not sharp: the general estimate keeps the loss -(n-1)/2.
    CHECK(rep.values.at("eq_m1") == -(n - 1) / 2.0);
  }
}

TEST_CASE("branch selection is total and p = 2 never uses the third branch") {
  const std::vector<double> exps{1.0, 1.1, 4.0 / 3.0, 1.5, 2.0, 3.0, 4.0, 10.0, kInf};
  for (double p : exps) {
    for (double q : exps) {
      const int b = m_bar_branch(p, q);
      CHECK((b >= 1 && b <= 3));
      const double ip = 1 / p, iq = 1 / q;
      const bool c1 = p < 2 || (p >= 2 && iq > 1 - ip);
      const bool c2 = p >= 2 && q >= 2;
      const bool c3 = p > 2 && iq <= 1 - ip && q <= 2;
      CHECK((c1 || c2 || c3));
      if (b == 1) CHECK(c1);
      if (b == 2) CHECK((c2 && !c1));
      if (b == 3) CHECK((c3 && !c1 && !c2));
    }
    CHECK(m_bar_branch(2.0, p) != 3);
  }
}

TEST_CASE("first and third branches meet at q = p'") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const int n = dim(rng);
    const double rho = unit(rng);
    const double p = 2.0 + 0.01 + 50.0 * unit(rng);
    const double pc = conjugate_exponent(p);
    CHECK(std::abs(first_branch(n, rho, p, pc) - third_branch(n, rho, p, pc)) <= 1e-12);
    CHECK(std::abs(m_bar(n, rho, p, pc * (1 - 1e-13)) - m_bar(n, rho, p, pc)) <= 1e-10);
    // q = 2 is shared by the second and third branches.
    CHECK(std::abs(third_branch(n, rho, p, 2.0) - m_bar(n, rho, p, 2.0)) <= 1e-12);
  }
}

TEST_CASE("m_bar is nondecreasing in rho") {
  const std::vector<double> exps{1.0, 1.5, 2.0, 3.0, 6.0, kInf};
  for (int n = 1; n <= 3; ++n) {
    for (double p : exps) {
      for (double q : exps) {
        double prev = -kInf;
        for (int k = 0; k <= 20; ++k) {
          const double v = m_bar(n, k / 20.0, p, q);
          CHECK(v >= prev);
          prev = v;
        }
      }
    }
  }
}

TEST_CASE("Lorentz range and its verdicts") {
  const double bar = m_bar(2, 0.5, 4.0, 1.5);
  const double big = m_script(2, 0.5, 4.0, 1.5);
  CHECK(big > bar);
  CHECK(std::abs(big - (2 * -0.5 / 1.5 - 1.0 / 1.25 * (1 / 1.5 - 0.5))) <= 1e-15);
  const ThresholdReport inside = linear_thresholds(2, 0.5, 4.0, 1.5, 0.5 * (bar + big));
  CHECK(inside.verdicts.at("fio_sharp").status == VerdictStatus::inadmissible);
  CHECK(inside.verdicts.at("fio_lorentz").status == VerdictStatus::admissible);
  CHECK(inside.verdicts.at("fio_lorentz").target_space == "L^{r,q}");
  CHECK(*inside.verdicts.at("fio_lorentz").lower == bar);
  const ThresholdReport below = linear_thresholds(2, 0.5, 4.0, 1.5, bar - 1.0);
  CHECK(below.verdicts.at("fio_sharp").status == VerdictStatus::admissible);
  CHECK(below.verdicts.at("fio_lorentz").status == VerdictStatus::inapplicable);
  CHECK_THROWS_AS(m_script(2, 0.5, 4.0, 2.0), ValidationError);
  CHECK_THROWS_AS(m_script(2, 0.5, 4.0, 1.0), ValidationError);
}

TEST_CASE("linear hypotheses") {
  const ThresholdReport rep = linear_thresholds(2, 1.0, 1.5, 2.0, -5.0);
  CHECK(rep.verdicts.at("fio_sharp").status == VerdictStatus::hypothesis_violated);
  CHECK(rep.verdicts.at("fio_l2").status == VerdictStatus::hypothesis_violated);
  CHECK(rep.verdicts.at("fio_general").status == VerdictStatus::admissible);
  CHECK(rep.primary == "fio_general");
  const ThresholdReport none = linear_thresholds(2, 1.0, 4.0, 2.0);
  CHECK(none.verdicts.at("psido").status == VerdictStatus::not_evaluated);
  CHECK(none.r == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("psido scenario threshold") {
  Scenario s = scenario("psido", 2, 0.0, 2.0, 2.0);
  s.p = 2.0;
  s.m = -1.5;
  const ThresholdReport rep = multilinear_admissibility(s);
  CHECK(rep.values.at("psido_threshold") == -1.0);
  CHECK(rep.primary_verdict().admissible());
}

TEST_CASE("bilinear_Linfty at q1 = q2 = 2, rho = 1 is zeroth order") {
  Scenario s = scenario("bilinear_Linfty", 2, 1.0, 2.0, 2.0);
  s.m = -0.1;
  ThresholdReport rep = multilinear_admissibility(s);
  CHECK(rep.values.at("threshold") == 0.0);
  CHECK(rep.r == 1.0);
  CHECK(rep.primary_verdict().admissible());
  s.m = 0.0;
  CHECK(multilinear_admissibility(s).primary_verdict().status == VerdictStatus::borderline);
  s.m = 0.1;
  CHECK(multilinear_admissibility(s).primary_verdict().status == VerdictStatus::inadmissible);
}

TEST_CASE("L^p x L^inf identity") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> ps{1.0, 2.0, 4.0, kInf};
  for (int t = 0; t < 20; ++t) ps.push_back(1.0 / u(rng));
  for (int n = 1; n <= 4; ++n) {
    for (double p : ps) {
      const double expect = -(n - 1) * (0.5 + std::abs(1 / p - 0.5));
      CHECK(std::abs(m_bar(n, 1.0, kInf, kInf) + m_bar(n, 1.0, kInf, p) - expect) <= 1e-12);
      const ThresholdReport rep = multilinear_admissibility(scenario("bilinear_Linfty", n, 1.0, p, kInf));
      CHECK(std::abs(rep.values.at("threshold") - expect) <= 1e-12);
    }
  }
}

TEST_CASE("general_multilinear aggregate at p = inf") {
  const std::vector<std::vector<double>> sets{{2.0, 4.0}, {1.5, 3.0, 6.0}, {1.0, 1.25}};
  for (int n = 1; n <= 3; ++n) {
    for (const auto& qs : sets) {
      Scenario s;
      s.tag = "general_multilinear";
      s.n = n;
      s.qs = qs;
      double expect = 0.0, ir = 0.0;
      for (double q : qs) {
        expect -= (n - 1) * std::abs(1 / q - 0.5);
        ir += 1 / q;
      }
      s.m = expect - 0.01;
      const ThresholdReport rep = multilinear_admissibility(s);
      CHECK(std::abs(rep.values.at("aggregate") - expect) <= 1e-12);
      CHECK(std::abs(1 / rep.r - ir) <= 1e-15);
      CHECK(rep.primary_verdict().admissible());
      // Equal split m_j = m / N gives the same per-operand thresholds at p = inf.
      s.orders.assign(qs.size(), (expect - 0.5) / qs.size());
      const ThresholdReport split = multilinear_admissibility(s);
      CHECK(std::abs(split.values.at("aggregate") - expect) <= 1e-12);
    }
  }
}

TEST_CASE("general_multilinear side conditions") {
  Scenario s;
  s.tag = "general_multilinear";
  s.p = 2.0;
  s.q1 = 2.0;
  s.q2 = 2.0;
  CHECK_THROWS_AS(multilinear_admissibility(s), ValidationError);
  s.orders = {-1.0, 0.5};
  CHECK(multilinear_admissibility(s).primary_verdict().status == VerdictStatus::hypothesis_violated);
  // sum / min = 1.01 < 2/p = 2 at p = 1.
  s.p = 1.0;
  s.orders = {-1.0, -0.01};
  CHECK(multilinear_admissibility(s).primary_verdict().binding_constraint == "sum(m) / min(m) >= 2/p");
  // p = 2: per-operand exponents p_j = 2 (m1 + m2) / m_j.
  s.p = 2.0;
  s.orders = {-3.0, -1.0};
  const ThresholdReport rep = multilinear_admissibility(s);
  CHECK(std::abs(rep.values.at("m_bar_1") - m_bar(2, 1.0, 8.0 / 3.0, 2.0)) <= 1e-12);
  CHECK(std::abs(rep.values.at("m_bar_2") - m_bar(2, 1.0, 8.0, 2.0)) <= 1e-12);
  s.p = kInf;
  s.orders = {};
  s.q1 = kInf;
  CHECK(multilinear_admissibility(s).primary_verdict().status == VerdictStatus::hypothesis_violated);
}

TEST_CASE("bilinear_product") {
  Scenario s = scenario("bilinear_product", 2, 1.0, 4.0, 1.5);
  s.p = 4.0;
  s.m1 = -2.0;
  s.m2 = -3.0;
  ThresholdReport rep = multilinear_admissibility(s);
  CHECK(rep.values.at("r2") == 2.0);
  CHECK(std::abs(1 / rep.r - (0.25 + 0.25 + 1 / 1.5)) <= 1e-15);
  CHECK(rep.values.at("m_bar_1") == m_bar(2, 1.0, 4.0, 4.0));
  CHECK(rep.values.at("m_bar_2") == m_bar(2, 1.0, 2.0, 1.5));
  CHECK(rep.primary_verdict().admissible());
  REQUIRE(rep.verdicts.count("bilinear_product_lorentz") == 1);
  CHECK(rep.values.at("m_script_2") == m_script(2, 1.0, 2.0, 1.5));
  // q1 < p' is a hypothesis violation, not an inadmissible order.
  s.q1 = 1.2;
  s.q2 = 1.1;
  rep = multilinear_admissibility(s);
  CHECK(rep.primary_verdict().status == VerdictStatus::hypothesis_violated);
  CHECK(rep.primary_verdict().binding_constraint == "q1 >= p'");
  s.q1 = 1.5;
  s.q2 = 4.0;
  CHECK(multilinear_admissibility(s).primary_verdict().binding_constraint == "q1 = max(q1, q2)");
}

TEST_CASE("bilinear PsiDO endpoints") {
  for (int n = 1; n <= 3; ++n) {
    const double rho = 0.25;
    Scenario s = scenario("bilinear_psido_interp", n, rho, 2.0, 2.0);
    CHECK(multilinear_admissibility(s).values.at("threshold") == n * (rho - 1) / 2);
    s.q1 = s.q2 = kInf;
    ThresholdReport rep = multilinear_admissibility(s);
    CHECK(rep.values.at("threshold") == n * (rho - 1));
    CHECK(rep.primary_verdict().status == VerdictStatus::hypothesis_violated);

    Scenario r = scenario("bilinear_psido_rough", n, rho, 2.0, 2.0);
    CHECK(multilinear_admissibility(r).values.at("threshold") == n * (rho - 1));
    r.p = 2.0;
    r.q1 = 1.5;
    r.q2 = 1.5;
    CHECK(multilinear_admissibility(r).primary_verdict().status == VerdictStatus::hypothesis_violated);

    Scenario m = scenario("bilinear_psido_smooth", n, rho, 2.0, 2.0);
    m.delta = 0.5;
    CHECK(multilinear_admissibility(m).values.at("threshold") == n * (rho - 1) / 2 + n * (rho - 0.5) / 2);
  }
}

TEST_CASE("smooth_bilinear") {
  Scenario s = scenario("smooth_bilinear", 2, 1.0, 2.0, 2.0);
  s.m = -0.5;
  ThresholdReport rep = multilinear_admissibility(s);
  CHECK(rep.values.at("threshold") == 0.0);
  CHECK(rep.values.at("global_threshold") == 0.0);
  CHECK(rep.primary_verdict().admissible());
  s.rho = 0.25;
  rep = multilinear_admissibility(s);
  CHECK(rep.primary == "smooth_bilinear_global");
  s.q1 = 1.0;
  CHECK(multilinear_admissibility(s).verdicts.at("smooth_bilinear").status == VerdictStatus::hypothesis_violated);
}

TEST_CASE("input errors") {
  Scenario s;
  s.tag = "frobnicate";
  try {
    multilinear_admissibility(s);
    FAIL("no throw");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("bounds: unknown scenario") == 0);
  }
  s = scenario("bilinear_Linfty", 2, 1.0, 2.0, 2.0);
  s.r = 2.0;
  CHECK_THROWS_AS(multilinear_admissibility(s), ValidationError);
  s.r = 1.0;
  CHECK_NOTHROW(multilinear_admissibility(s));
  CHECK_THROWS_AS(m_bar(2, 1.5, 2.0, 2.0), ValidationError);
  CHECK_THROWS_AS(m_bar(2, 1.0, 0.5, 2.0), ValidationError);
  CHECK_THROWS_AS(m_bar(0, 1.0, 2.0, 2.0), ValidationError);
  CHECK_THROWS_AS(parse_exponent("0.5"), ValidationError);
  CHECK_THROWS_AS(parse_exponent("two"), ValidationError);
}

TEST_CASE("exponent text") {
  CHECK(std::isinf(parse_exponent("inf")));
  CHECK(parse_exponent("1.5") == 1.5);
  CHECK(format_exponent(kInf) == "inf");
  CHECK(format_exponent(4.0 / 3.0) == "1.3333333333333333");
  CHECK(conjugate_exponent(1.0) == kInf);
  CHECK(conjugate_exponent(kInf) == 1.0);
}
