#include "fiolab/bounds.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "fiolab/error.hpp"

namespace fiolab {

namespace {

double inv(double p) { return 1.0 / p; }

void check_exponent(double p, const std::string& name) {
  if (!(p >= 1.0)) throw ValidationError("bounds: exponent " + name + " must lie in [1, inf]");
}

void check_common(int n, double rho) {
  if (n < 1) throw ValidationError("bounds: dimension n must be >= 1");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ValidationError("bounds: rho must lie in [0, 1]");
}

double m_bar_inv(int n, double rho, double ip, double iq) {
  const double nr = n * (rho - 1.0);
  if (ip > 0.5 || iq > 1.0 - ip) {
    const double imin = std::max(ip, iq);
    return nr * imin - 0.5 * (n - 1) * (ip + imin);
  }
  if (iq <= 0.5) return 0.5 * nr - (n - 1) * (0.5 - iq);
  return nr * iq - (n - 1) / (1.0 - 2.0 * ip) * (iq - 0.5);
}

double m_script_inv(int n, double rho, double ip, double iq) {
  return n * (rho - 1.0) * iq - (n - 1) / (1.0 + ip) * (iq - 0.5);
}

Verdict judge(std::optional<double> m, double threshold, std::string binding, std::string target) {
  Verdict v;
  v.threshold = threshold;
  v.binding_constraint = std::move(binding);
  v.target_space = std::move(target);
  if (!m) return v;
  if (*m <= threshold - kThresholdTolerance) {
    v.status = VerdictStatus::admissible;
  } else if (std::abs(*m - threshold) < kThresholdTolerance) {
    v.status = VerdictStatus::borderline;
  } else {
    v.status = VerdictStatus::inadmissible;
  }
  return v;
}

/// lower <= m < upper; below the lower end the Lebesgue result is the one that applies.
Verdict judge_range(std::optional<double> m, double lower, double upper, std::string binding) {
  Verdict v = judge(m, upper, std::move(binding), "L^{r,q}");
  v.lower = lower;
  if (m && *m < lower - kThresholdTolerance) {
    v.status = VerdictStatus::inapplicable;
    v.binding_constraint = "m below the lower end; the L^r result applies";
  }
  return v;
}

Verdict violated(double threshold, std::string hypothesis, std::string target) {
  Verdict v;
  v.status = VerdictStatus::hypothesis_violated;
  v.threshold = threshold;
  v.binding_constraint = std::move(hypothesis);
  v.target_space = std::move(target);
  return v;
}

Verdict inapplicable(std::string why, std::string target) {
  Verdict v;
  v.status = VerdictStatus::inapplicable;
  v.threshold = std::nan("");
  v.binding_constraint = std::move(why);
  v.target_space = std::move(target);
  return v;
}

/// Worst of several operand verdicts; the binding one has the smallest margin.
Verdict combine(const std::vector<Verdict>& parts, const std::vector<double>& orders) {
  std::size_t bind = 0;
  double worst = kInf;
  for (std::size_t j = 0; j < parts.size(); ++j) {
    const double margin = parts[j].threshold - orders[j];
    if (margin < worst) {
      worst = margin;
      bind = j;
    }
  }
  return parts[bind];
}

double reciprocal_target(const Scenario& s, double ir) {
  if (s.r) {
    if (!(*s.r > 0.0)) throw ValidationError("bounds: target exponent r must be positive");
    if (std::abs(inv(*s.r) - ir) > 1e-12) throw ValidationError("bounds: inconsistent Hoelder exponents");
  }
  return ir;
}

double from_reciprocal(double ir) { return ir == 0.0 ? kInf : 1.0 / ir; }

std::string operand_key(const std::string& stem, std::size_t j) { return stem + "_" + std::to_string(j + 1); }

ThresholdReport linear_scenario(const Scenario& s) {
  ThresholdReport rep = linear_thresholds(s.n, s.rho, s.p, s.q1, s.m);
  reciprocal_target(s, inv(s.p) + inv(s.q1));
  rep.scenario = s.tag;
  rep.inputs = s;
  if (s.tag == "psido") {
    rep.primary = "psido";
  } else {
    rep.primary = s.p >= 2.0 ? "fio_sharp" : "fio_general";
    if (s.m && s.p >= 2.0 && rep.verdicts["fio_sharp"].status == VerdictStatus::inadmissible &&
        rep.verdicts["fio_lorentz"].status == VerdictStatus::admissible) {
      rep.primary = "fio_lorentz";
    }
  }
  return rep;
}

ThresholdReport bilinear_product(const Scenario& s) {
  const double rho1 = s.rho;
  const double rho2 = s.rho2.value_or(s.rho);
  check_common(s.n, rho2);
  const double ip = inv(s.p), iq1 = inv(s.q1), iq2 = inv(s.q2);
  const double ir2 = ip + iq1;
  ThresholdReport rep;
  rep.r = from_reciprocal(reciprocal_target(s, ir2 + iq2));
  rep.values["r2"] = from_reciprocal(ir2);
  const double t1 = m_bar_inv(s.n, rho1, ip, iq1);
  rep.values["m_bar_1"] = t1;
  rep.primary = "bilinear_product";

  if (iq1 > iq2 || iq1 > 1.0 - ip) {
    rep.verdicts["bilinear_product"] =
        violated(t1, iq1 > iq2 ? "q1 = max(q1, q2)" : "q1 >= p'", "L^r");
    rep.inapplicable.push_back("m_bar_2");
    return rep;
  }
  const double t2 = m_bar_inv(s.n, rho2, ir2, iq2);
  rep.values["m_bar_2"] = t2;
  std::optional<double> m1 = s.m1, m2 = s.m2;
  if (m1 && m2) {
    const Verdict v1 = judge(m1, t1, "m1 < m_bar(rho1, p, q1)", "L^r");
    const Verdict v2 = judge(m2, t2, "m2 < m_bar(rho2, r2, q2)", "L^r");
    rep.verdicts["bilinear_product"] = combine({v1, v2}, {*m1, *m2});
  } else {
    rep.verdicts["bilinear_product"] = judge({}, std::min(t1, t2), "m1 < m_bar(rho1, p, q1) and m2 < m_bar(rho2, r2, q2)", "L^r");
  }

  if (iq2 > 0.5 && ir2 <= 0.5) {
    if (iq2 >= 1.0) {
      rep.inapplicable.push_back("m_script_2");
      rep.verdicts["bilinear_product_lorentz"] = inapplicable("M undefined at q2 = 1", "L^{r,q}");
    } else {
      const double big = m_script_inv(s.n, rho2, ir2, iq2);
      rep.values["m_script_2"] = big;
      Verdict v = judge_range(m2, t2, big, "m_bar(rho2, r2, q2) <= m2 < M(rho2, r2, q2)");
      if (m1 && m2) {
        const Verdict v1 = judge(m1, t1, "m1 < m_bar(rho1, p, q1)", "L^{r,q}");
        if (!v1.admissible()) v = v1;
      }
      rep.verdicts["bilinear_product_lorentz"] = v;
    }
  } else {
    rep.inapplicable.push_back("m_script_2");
  }
  return rep;
}

ThresholdReport bilinear_linfty(const Scenario& s) {
  const double iq1 = inv(s.q1), iq2 = inv(s.q2);
  const double imax = std::min(iq1, iq2), imin = std::max(iq1, iq2);
  ThresholdReport rep;
  rep.r = from_reciprocal(reciprocal_target(s, iq1 + iq2));
  const double outer = m_bar_inv(s.n, s.rho, 0.0, imax);
  const double inner = m_bar_inv(s.n, s.rho, imax, imin);
  rep.values["m_bar_outer"] = outer;
  rep.values["m_bar_inner"] = inner;
  rep.values["threshold"] = outer + inner;
  rep.primary = "bilinear_Linfty";
  rep.verdicts["bilinear_Linfty"] =
      judge(s.m, outer + inner, "m < m_bar(rho, inf, q_max) + m_bar(rho, q_max, q_min)", "L^r");
  if (imin > 0.5 && imax <= 0.5) {
    if (imin >= 1.0) {
      rep.inapplicable.push_back("m_script");
      rep.verdicts["bilinear_Linfty_lorentz"] = inapplicable("M undefined at q_min = 1", "L^{r,q}");
    } else {
      const double big = outer + m_script_inv(s.n, s.rho, imax, imin);
      rep.values["m_script"] = big;
      rep.verdicts["bilinear_Linfty_lorentz"] =
          judge_range(s.m, outer + inner, big, "m < m_bar(rho, inf, q_max) + M(rho, q_max, q_min)");
    }
  } else {
    rep.inapplicable.push_back("m_script");
  }
  return rep;
}

ThresholdReport general_multilinear(const Scenario& s) {
  const std::vector<double> qs = s.qs.empty() ? std::vector<double>{s.q1, s.q2} : s.qs;
  if (qs.size() < 2) throw ValidationError("bounds: general_multilinear needs at least two operands");
  for (std::size_t j = 0; j < qs.size(); ++j) check_exponent(qs[j], operand_key("q", j));
  const double ip = inv(s.p);
  double ir = ip;
  for (double q : qs) ir += inv(q);

  ThresholdReport rep;
  rep.r = from_reciprocal(reciprocal_target(s, ir));
  rep.primary = "general_multilinear";
  const std::string target = "L^r";

  if (!s.orders.empty() && s.orders.size() != qs.size()) {
    throw ValidationError("bounds: general_multilinear needs one order per operand");
  }
  if (s.orders.empty() && ip != 0.0) {
    throw ValidationError("bounds: general_multilinear needs per-operand orders when p is finite");
  }

  // Per-operand exponent p_j = p sum(m) / m_j, i.e. 1/p_j = (1/p) m_j / sum(m).
  const double total = std::accumulate(s.orders.begin(), s.orders.end(), 0.0);
  std::vector<double> thresholds(qs.size());
  double aggregate = 0.0;
  for (std::size_t j = 0; j < qs.size(); ++j) {
    const double ipj = s.orders.empty() ? 0.0 : ip * s.orders[j] / total;
    thresholds[j] = m_bar_inv(s.n, 1.0, ipj, inv(qs[j]));
    rep.values[operand_key("m_bar", j)] = thresholds[j];
    aggregate += thresholds[j];
  }
  rep.values["aggregate"] = aggregate;

  if (s.rho != 1.0) {
    rep.verdicts["general_multilinear"] = violated(aggregate, "rho = 1", target);
    return rep;
  }
  if (ip == 0.0 && std::any_of(qs.begin(), qs.end(), [](double q) { return std::isinf(q); })) {
    rep.verdicts["general_multilinear"] = violated(aggregate, "q_j < inf when p = inf", target);
    return rep;
  }
  if (s.orders.empty()) {
    // a in L^inf S^m_1 lies in every product class with m_1 + .. + m_N = m, m_j < 0.
    rep.verdicts["general_multilinear"] =
        judge(s.m, aggregate, "m < -(n-1) sum_j |1/q_j - 1/2|", target);
    return rep;
  }
  if (std::any_of(s.orders.begin(), s.orders.end(), [](double m) { return !(m < 0.0); })) {
    rep.verdicts["general_multilinear"] = violated(aggregate, "m_j < 0", target);
    return rep;
  }
  const double smallest = *std::min_element(s.orders.begin(), s.orders.end());
  if (total / smallest < 2.0 * ip - 1e-12) {
    rep.verdicts["general_multilinear"] = violated(aggregate, "sum(m) / min(m) >= 2/p", target);
    return rep;
  }
  std::vector<Verdict> parts;
  for (std::size_t j = 0; j < qs.size(); ++j) {
    parts.push_back(judge(s.orders[j], thresholds[j],
                          "m_" + std::to_string(j + 1) + " < m_bar(1, p sum(m)/m_" + std::to_string(j + 1) + ", q_" +
                              std::to_string(j + 1) + ")",
                          target));
  }
  rep.verdicts["general_multilinear"] = combine(parts, s.orders);
  return rep;
}

ThresholdReport smooth_bilinear(const Scenario& s) {
  if (!(s.delta >= 0.0 && s.delta <= 1.0)) throw ValidationError("bounds: delta must lie in [0, 1]");
  const double iq1 = inv(s.q1), iq2 = inv(s.q2);
  ThresholdReport rep;
  rep.r = from_reciprocal(reciprocal_target(s, iq1 + iq2));
  const double b1 = (s.rho - s.n) * std::abs(iq1 - 0.5) + m_bar_inv(s.n, s.rho, iq1, iq2);
  const double b2 = (s.rho - s.n) * std::abs(iq2 - 0.5) + m_bar_inv(s.n, s.rho, iq2, iq1);
  const double thr = std::min(b1, b2);
  rep.values["branch_1"] = b1;
  rep.values["branch_2"] = b2;
  rep.values["threshold"] = thr;
  const std::string binding = b1 <= b2 ? "m < (rho-n)|1/q1-1/2| + m_bar(rho, q1, q2)"
                                       : "m < (rho-n)|1/q2-1/2| + m_bar(rho, q2, q1)";
  rep.primary = "smooth_bilinear";
  if (iq1 >= 1.0 || iq2 >= 1.0 || iq1 <= 0.0 || iq2 <= 0.0) {
    rep.verdicts["smooth_bilinear"] = violated(thr, "1 < q1, q2 < inf", "L^r");
  } else if (s.rho < 0.5) {
    rep.verdicts["smooth_bilinear"] = violated(thr, "1/2 <= rho", "L^r");
  } else {
    rep.verdicts["smooth_bilinear"] = judge(s.m, thr, binding, "L^r");
  }

  const double global = 0.5 * s.n * (s.rho - 1.0) + 0.5 * s.n * std::min(s.rho - s.delta, 0.0);
  if (iq1 == 0.5 && iq2 == 0.5) {
    rep.values["global_threshold"] = global;
    rep.verdicts["smooth_bilinear_global"] =
        judge(s.m, global, "m < n(rho-1)/2 + n min(rho-delta, 0)/2", "L^r");
    if (rep.verdicts["smooth_bilinear"].status == VerdictStatus::hypothesis_violated) {
      rep.primary = "smooth_bilinear_global";
    }
  } else {
    rep.inapplicable.push_back("global_threshold");
  }
  return rep;
}

ThresholdReport psido_rough(const Scenario& s) {
  const double ip = inv(s.p), iq1 = inv(s.q1), iq2 = inv(s.q2);
  const double imax = std::min(iq1, iq2), imin = std::max(iq1, iq2);
  ThresholdReport rep;
  rep.r = from_reciprocal(reciprocal_target(s, ip + iq1 + iq2));
  const double thr =
      s.n * (s.rho - 1.0) * (std::max({0.5, imax, ip}) + std::max({0.5, imin, ip + imax}));
  rep.values["threshold"] = thr;
  rep.primary = "bilinear_psido_rough";
  rep.verdicts[rep.primary] =
      imax > 1.0 - ip
          ? violated(thr, "q_max >= p'", "L^r")
          : judge(s.m, thr, "m < n(rho-1)(1/min(2,q_max,p) + 1/min(2,q_min,p q_max/(q_max+p)))", "L^r");
  return rep;
}

ThresholdReport psido_smooth(const Scenario& s) {
  if (!(s.delta >= 0.0 && s.delta <= 1.0)) throw ValidationError("bounds: delta must lie in [0, 1]");
  const double iq1 = inv(s.q1), iq2 = inv(s.q2);
  ThresholdReport rep;
  rep.r = from_reciprocal(reciprocal_target(s, iq1 + iq2));
  const double thr =
      s.n * (s.rho - 1.0) * (std::max(std::abs(0.5 - iq1), std::abs(0.5 - iq2)) + std::max({0.5, iq1, iq2})) +
      0.5 * s.n * std::min(s.rho - s.delta, 0.0);
  rep.values["threshold"] = thr;
  rep.primary = "bilinear_psido_smooth";
  // delta = 0 is covered through S_{rho,0} inside S_{rho,delta} for small delta > 0.
  if (!(s.rho > 0.0)) {
    rep.verdicts[rep.primary] = violated(thr, "0 < rho", "L^r");
  } else if (!(s.delta < 1.0)) {
    rep.verdicts[rep.primary] = violated(thr, "delta < 1", "L^r");
  } else if (iq1 + iq2 == 0.0) {
    rep.verdicts[rep.primary] = violated(thr, "r < inf", "L^r");
  } else {
    rep.verdicts[rep.primary] = judge(
        s.m, thr, "m < n(rho-1)[max(|1/2-1/q1|,|1/2-1/q2|) + 1/min(2,q1,q2)] + n min(rho-delta,0)/2", "L^r");
  }
  return rep;
}

ThresholdReport psido_interp(const Scenario& s) {
  if (!(s.delta >= 0.0 && s.delta <= 1.0)) throw ValidationError("bounds: delta must lie in [0, 1]");
  const double iq1 = inv(s.q1), iq2 = inv(s.q2);
  const double ir = iq1 + iq2;
  ThresholdReport rep;
  rep.r = from_reciprocal(reciprocal_target(s, ir));
  const double thr =
      s.n * (s.rho - 1.0) * (std::max({0.5, iq1, iq2, 1.0 - ir}) + 0.5 * std::max(ir - 1.0, 0.0));
  rep.values["threshold"] = thr;
  rep.primary = "bilinear_psido_interp";
  if (!(s.rho > 0.0)) {
    rep.verdicts[rep.primary] = violated(thr, "0 < rho", "L^r");
  } else if (s.delta > s.rho || !(s.delta < 1.0)) {
    rep.verdicts[rep.primary] = violated(thr, "delta <= rho and delta < 1", "L^r");
  } else if (ir == 0.0) {
    rep.verdicts[rep.primary] = violated(thr, "r < inf", "L^r");
  } else {
    rep.verdicts[rep.primary] =
        judge(s.m, thr, "m < n(rho-1)[max(1/2,1/q1,1/q2,1-1/r) + max(1/r-1,0)/2]", "L^r");
  }
  return rep;
}

}  // namespace

double conjugate_exponent(double p) {
  check_exponent(p, "p");
  return from_reciprocal(1.0 - inv(p));
}

int m_bar_branch(double p, double q) {
  check_exponent(p, "p");
  check_exponent(q, "q");
  const double ip = inv(p), iq = inv(q);
  if (ip > 0.5 || iq > 1.0 - ip) return 1;
  return iq <= 0.5 ? 2 : 3;
}

double m_bar(int n, double rho, double p, double q) {
  check_common(n, rho);
  check_exponent(p, "p");
  check_exponent(q, "q");
  return m_bar_inv(n, rho, inv(p), inv(q));
}

double m_script(int n, double rho, double p, double q) {
  check_common(n, rho);
  check_exponent(p, "p");
  if (!(q > 1.0 && q < 2.0)) throw ValidationError("bounds: M(rho, p, q) needs 1 < q < 2");
  return m_script_inv(n, rho, inv(p), inv(q));
}

double general_fio_threshold(int n, double rho, double p, double q) {
  check_common(n, rho);
  check_exponent(p, "p");
  check_exponent(q, "q");
  const double is = std::max({0.5, inv(p), inv(q)});
  return -0.5 * (n - 1) * (is + std::max(inv(p), 1.0 - is)) + n * (rho - 1.0) * is;
}

double l2_threshold(int n, double rho) {
  check_common(n, rho);
  return 0.5 * n * (rho - 1.0);
}

double psido_threshold(int n, double rho, double p, double q) {
  check_common(n, rho);
  check_exponent(p, "p");
  check_exponent(q, "q");
  return n * (rho - 1.0) * std::max({0.5, inv(p), inv(q)});
}

std::string status_name(VerdictStatus status) {
  switch (status) {
    case VerdictStatus::admissible: return "admissible";
    case VerdictStatus::borderline: return "borderline";
    case VerdictStatus::inadmissible: return "inadmissible";
    case VerdictStatus::hypothesis_violated: return "hypothesis_violated";
    case VerdictStatus::inapplicable: return "inapplicable";
    case VerdictStatus::not_evaluated: return "not_evaluated";
  }
  return "unknown";
}

const Verdict& ThresholdReport::primary_verdict() const {
  auto it = verdicts.find(primary);
  if (it == verdicts.end()) throw ValidationError("bounds: report has no primary verdict");
  return it->second;
}

const std::vector<std::string>& scenario_tags() {
  static const std::vector<std::string> tags{"fio",
                                             "psido",
                                             "bilinear_product",
                                             "bilinear_Linfty",
                                             "general_multilinear",
                                             "smooth_bilinear",
                                             "bilinear_psido_rough",
                                             "bilinear_psido_smooth",
                                             "bilinear_psido_interp"};
  return tags;
}

ThresholdReport linear_thresholds(int n, double rho, double p, double q, std::optional<double> m) {
  check_common(n, rho);
  check_exponent(p, "p");
  check_exponent(q, "q");
  ThresholdReport rep;
  rep.scenario = "fio";
  rep.inputs.tag = "fio";
  rep.inputs.n = n;
  rep.inputs.rho = rho;
  rep.inputs.p = p;
  rep.inputs.q1 = q;
  rep.inputs.m = m;
  rep.r = from_reciprocal(inv(p) + inv(q));

  const double bar = m_bar(n, rho, p, q);
  const double m1 = general_fio_threshold(n, rho, p, q);
  const double l2 = l2_threshold(n, rho);
  const double pdo = psido_threshold(n, rho, p, q);
  rep.values["m_bar"] = bar;
  rep.values["eq_m1"] = m1;
  rep.values["L2_threshold"] = l2;
  rep.values["psido_threshold"] = pdo;
  const bool lorentz = q > 1.0 && q < 2.0;
  if (lorentz) {
    rep.values["m_script"] = m_script(n, rho, p, q);
  } else {
    rep.inapplicable.push_back("m_script");
  }

  rep.verdicts["fio_general"] = judge(m, m1, "m < -(n-1)/2 (1/s + 1/min(p,s')) + n(rho-1)/s", "L^r");
  rep.verdicts["fio_sharp"] =
      p >= 2.0 ? judge(m, bar, "m < m_bar(rho, p, q)", "L^r") : violated(bar, "2 <= p", "L^r");
  if (!lorentz) {
    rep.verdicts["fio_lorentz"] = inapplicable("needs 1 < q < 2", "L^{r,q}");
  } else if (p < 2.0) {
    rep.verdicts["fio_lorentz"] = violated(rep.values["m_script"], "2 <= p", "L^{r,q}");
  } else {
    rep.verdicts["fio_lorentz"] = judge_range(m, bar, rep.values["m_script"], "m_bar(rho, p, q) <= m < M(rho, p, q)");
  }
  rep.verdicts["fio_l2"] = (q == 2.0 && p >= 2.0) ? judge(m, l2, "m < n(rho-1)/2", "L^r")
                                                  : violated(l2, "q = 2 and 2 <= p", "L^r");
  rep.verdicts["psido"] = judge(m, pdo, "m < n(rho-1)/min(2,p,q)", "L^r");
  rep.primary = p >= 2.0 ? "fio_sharp" : "fio_general";
  return rep;
}

ThresholdReport multilinear_admissibility(const Scenario& s) {
  const auto& tags = scenario_tags();
  if (std::find(tags.begin(), tags.end(), s.tag) == tags.end()) {
    throw ValidationError("bounds: unknown scenario '" + s.tag + "'");
  }
  check_common(s.n, s.rho);
  check_exponent(s.p, "p");
  check_exponent(s.q1, "q1");
  check_exponent(s.q2, "q2");
  if (s.tag == "fio" || s.tag == "psido") return linear_scenario(s);

  ThresholdReport rep;
  if (s.tag == "bilinear_product") {
    rep = bilinear_product(s);
  } else if (s.tag == "bilinear_Linfty") {
    rep = bilinear_linfty(s);
  } else if (s.tag == "general_multilinear") {
    rep = general_multilinear(s);
  } else if (s.tag == "smooth_bilinear") {
    rep = smooth_bilinear(s);
  } else if (s.tag == "bilinear_psido_rough") {
    rep = psido_rough(s);
  } else if (s.tag == "bilinear_psido_smooth") {
    rep = psido_smooth(s);
  } else {
    rep = psido_interp(s);
  }
  rep.scenario = s.tag;
  rep.inputs = s;
  return rep;
}

double parse_exponent(const std::string& text) {
  if (text == "inf" || text == "infinity" || text == "Inf") return kInf;
  double value = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) throw ValidationError("bounds: cannot parse exponent '" + text + "'");
  check_exponent(value, "'" + text + "'");
  return value;
}

std::string format_exponent(double p) {
  if (std::isinf(p)) return "inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, p);
  return std::string(buf, ptr);
}

}  // namespace fiolab
