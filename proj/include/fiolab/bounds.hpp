#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fiolab/numgrid.hpp"

namespace fiolab {

// Order thresholds for rough and smooth (multi)linear FIOs and PsiDOs.
// Exponents are doubles in [1, inf] with kInf for infinity; every formula is
// evaluated on reciprocals, so 1/inf = 0 needs no special case.

/// Strict thresholds are met when m <= threshold - kThresholdTolerance;
/// |m - threshold| below it is borderline.
inline constexpr double kThresholdTolerance = 1e-12;

/// p' with 1/p + 1/p' = 1.
double conjugate_exponent(double p);

/// Branch of m_bar used at (p, q): 1, 2 or 3, checked in that order.
int m_bar_branch(double p, double q);

/// m_bar(rho, p, q): the sharp order for L^q -> L^r with a in L^p S^m_rho.
double m_bar(int n, double rho, double p, double q);

/// M(rho, p, q) for 1 < q < 2: upper end of the Lorentz range.
double m_script(int n, double rho, double p, double q);

/// -(n-1)/2 (1/s + 1/min(p, s')) + n(rho-1)/s with s = min(2, p, q).
double general_fio_threshold(int n, double rho, double p, double q);

/// n(rho-1)/2.
double l2_threshold(int n, double rho);

/// n(rho-1)/min(2, p, q).
double psido_threshold(int n, double rho, double p, double q);

enum class VerdictStatus { admissible, borderline, inadmissible, hypothesis_violated, inapplicable, not_evaluated };

std::string status_name(VerdictStatus status);

struct Verdict {
  VerdictStatus status = VerdictStatus::not_evaluated;
  /// Strict upper bound on the order (or on the binding operand order).
  double threshold = 0.0;
  /// Lower end of a Lorentz range.
  std::optional<double> lower;
  std::string binding_constraint;
  std::string target_space;

  bool admissible() const noexcept { return status == VerdictStatus::admissible; }
};

/// Input of a threshold query. Unused fields are ignored by each scenario.
struct Scenario {
  std::string tag = "fio";
  int n = 2;
  double rho = 1.0;
  /// Second type for bilinear_product; unset means rho.
  std::optional<double> rho2;
  double delta = 0.0;
  /// Spatial exponent of the amplitude class.
  double p = kInf;
  double q1 = 2.0;
  double q2 = 2.0;
  /// Operand exponents for general_multilinear; empty means {q1, q2}.
  std::vector<double> qs;
  /// Optional target exponent, checked against the Hoelder relation.
  std::optional<double> r;
  std::optional<double> m;
  std::optional<double> m1;
  std::optional<double> m2;
  /// Per-operand orders for general_multilinear.
  std::vector<double> orders;
};

struct ThresholdReport {
  std::string scenario;
  Scenario inputs;
  double r = kInf;
  /// Named threshold values; inapplicable ones are listed separately.
  std::map<std::string, double> values;
  std::vector<std::string> inapplicable;
  std::map<std::string, Verdict> verdicts;
  /// Key of the verdict that answers the scenario.
  std::string primary;

  const Verdict& primary_verdict() const;
};

/// Tags: fio, psido (linear); bilinear_product, bilinear_Linfty, general_multilinear,
/// smooth_bilinear, bilinear_psido_rough, bilinear_psido_smooth, bilinear_psido_interp.
const std::vector<std::string>& scenario_tags();

/// Linear values m_bar, m_script, eq_m1, L2_threshold, psido_threshold with
/// 1/r = 1/p + 1/q; verdicts for every linear result when m is given.
ThresholdReport linear_thresholds(int n, double rho, double p, double q, std::optional<double> m = {});

/// Any scenario tag; throws ValidationError "bounds: unknown scenario" otherwise.
ThresholdReport multilinear_admissibility(const Scenario& scenario);

/// Parses "inf" / "infinity" or a number >= 1.
double parse_exponent(const std::string& text);
/// "inf" for infinity, shortest round-trip decimal otherwise.
std::string format_exponent(double p);

}  // namespace fiolab
