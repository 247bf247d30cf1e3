#include "fiolab/report.hpp"

#include <cmath>

namespace fiolab {

namespace {

/// Non-finite values become null (JSON has no infinities).
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json numbers(const std::vector<double>& vs) {
  Json out = Json::array();
  for (double v : vs) out.push_back(number(v));
  return out;
}

Json optional_number(const std::optional<double>& v) { return v ? exponent_json(*v) : Json(nullptr); }

}  // namespace

Json exponent_json(double p) {
  if (std::isinf(p)) return p > 0 ? Json("inf") : Json("-inf");
  return number(p);
}

Json to_json(const LineFit& fit) {
  return Json{{"slope", number(fit.slope)},
              {"intercept", number(fit.intercept)},
              {"residual", number(fit.residual)},
              {"points", fit.points}};
}

Json to_json(const ClassTag& tag) {
  Json j{{"kind", tag.kind_name()}, {"p", exponent_json(tag.p)}};
  if (tag.kind == ClassTag::Kind::product_rough) {
    j["ms"] = numbers(tag.ms);
    j["rhos"] = numbers(tag.rhos);
  } else {
    j["m"] = number(tag.m);
    j["rho"] = number(tag.rho);
    if (tag.kind == ClassTag::Kind::hormander) j["delta"] = number(tag.delta);
  }
  return j;
}

Json to_json(const Verdict& v) {
  Json j{{"status", status_name(v.status)},
         {"admissible", v.admissible()},
         {"threshold", number(v.threshold)},
         {"binding_constraint", v.binding_constraint},
         {"target_space", v.target_space}};
  if (v.lower) j["lower"] = number(*v.lower);
  return j;
}

Json to_json(const ThresholdReport& r) {
  const Scenario& s = r.inputs;
  Json inputs{{"n", s.n}, {"rho", number(s.rho)}, {"p", exponent_json(s.p)}, {"q1", exponent_json(s.q1)}};
  if (s.tag != "fio" && s.tag != "psido") inputs["q2"] = exponent_json(s.q2);
  if (s.rho2) inputs["rho2"] = number(*s.rho2);
  if (s.delta != 0.0) inputs["delta"] = number(s.delta);
  if (!s.qs.empty()) {
    Json qs = Json::array();
    for (double q : s.qs) qs.push_back(exponent_json(q));
    inputs["qs"] = qs;
  }
  if (!s.orders.empty()) inputs["orders"] = numbers(s.orders);
  if (s.m) inputs["m"] = number(*s.m);
  if (s.m1) inputs["m1"] = number(*s.m1);
  if (s.m2) inputs["m2"] = number(*s.m2);

  Json values = Json::object();
  for (const auto& [k, v] : r.values) values[k] = exponent_json(v);
  for (const auto& k : r.inapplicable) values[k] = "inapplicable";
  Json verdicts = Json::object();
  for (const auto& [k, v] : r.verdicts) verdicts[k] = to_json(v);

  Json j{{"scenario", r.scenario}, {"inputs", inputs}, {"r", exponent_json(r.r)}, {"values", values},
         {"verdicts", verdicts},   {"primary", r.primary}};
  const auto it = r.verdicts.find(r.primary);
  if (it != r.verdicts.end()) {
    j["threshold"] = number(it->second.threshold);
    j["admissible"] = it->second.admissible();
  }
  return j;
}

Json to_json(const NormSweepRecord& rec) {
  Json levels = Json::array();
  for (std::size_t i = 0; i < rec.levels.size(); ++i) {
    levels.push_back(Json{{"j", rec.levels[i]}, {"norm", number(rec.per_level_norm[i])}});
  }
  return Json{{"inputs", Json{{"q", exponent_json(rec.q)}, {"r", exponent_json(rec.r)}, {"seed", rec.seed}}},
              {"method", method_name(rec.method)},
              {"estimate_kind", "lower bound"},
              {"levels", levels},
              {"sigma", number(rec.sigma)},
              {"fit", to_json(rec.fit)},
              {"prediction", number(rec.prediction)},
              {"prediction_source", rec.prediction_source},
              {"tolerance", number(rec.tolerance)},
              {"pass", rec.pass},
              {"verdict", rec.pass ? "within prediction + tol" : "exceeds prediction + tol"}};
}

Json to_json(const ExperimentReport& r) {
  const ExperimentConfig& c = r.config;
  Json inputs{{"amplitude", c.amplitude_expression.empty() ? c.amplitude : c.amplitude_expression},
              {"phase", c.phase_expression.empty() ? c.phase : c.phase_expression},
              {"dim", c.dim},
              {"points", c.points},
              {"halfwidth", number(c.halfwidth)},
              {"scenario", c.scenario},
              {"q", exponent_json(c.q)},
              {"r", optional_number(c.r)},
              {"p", optional_number(c.p)},
              {"j_min", c.sweep.j_min},
              {"j_max", c.sweep.j_max},
              {"bank", c.sweep.norm.bank_size},
              {"seed", c.sweep.norm.seed}};
  Json checks = Json::object();
  if (r.partition_error) checks["partition_error"] = number(*r.partition_error);
  if (r.phase) checks["phase"] = to_json(*r.phase);
  const Json sweep = to_json(r.sweep);
  return Json{{"inputs", inputs},
              {"thresholds", to_json(r.thresholds)},
              {"checks", checks},
              {"levels", sweep["levels"]},
              {"sigma", sweep["sigma"]},
              {"prediction", sweep["prediction"]},
              {"sweep", sweep},
              {"verdict", r.verdict}};
}

Json to_json(const SeminormEstimate& e) {
  Json per = Json::array();
  for (const auto& [alpha, v] : e.per_alpha) per.push_back(Json{{"alpha", alpha}, {"value", number(v)}});
  Json j{{"s", e.s},
         {"p", exponent_json(e.p)},
         {"total", number(e.total)},
         {"per_alpha", per},
         {"class_violation", e.class_violation},
         {"radii", numbers(e.radii)},
         {"directions", e.directions}};
  if (e.class_violation) j["violating_alpha"] = e.violating_alpha;
  return j;
}

Json to_json(const PhaseReport& r) {
  Json consts = Json::array();
  for (const auto& [ab, v] : r.phi_k_constants) {
    consts.push_back(Json{{"alpha", ab.first}, {"beta", ab.second}, {"value", number(v)}});
  }
  return Json{{"k", r.k},
              {"snd_constant", number(r.snd_constant)},
              {"homogeneity_error", number(r.homogeneity_error)},
              {"finite", r.finite},
              {"pass", r.pass},
              {"phi_k_constants", consts}};
}

Json to_json(const std::vector<LevelReport>& levels) {
  Json out = Json::array();
  for (const auto& l : levels) {
    Json iso = Json::array();
    for (const auto& [alpha, v] : l.chi.isotropic) iso.push_back(Json{{"alpha", alpha}, {"value", number(v)}});
    out.push_back(Json{{"j", l.j},
                       {"centers", l.centers},
                       {"min_separation", number(l.min_separation)},
                       {"covering_radius", number(l.covering_radius)},
                       {"chi_isotropic", iso},
                       {"chi_radial", numbers(l.chi.radial)},
                       {"support_measures", numbers(l.support_measures)}});
  }
  return out;
}

Json to_json(const KernelReport& r) {
  Json samples = Json::array();
  for (const auto& s : r.samples) samples.push_back(Json{{"radius", number(s.radius)}, {"max_abs", number(s.max_abs)}});
  return Json{{"samples", samples},
              {"fit", to_json(r.fit)},
              {"fitted_slope", number(r.fitted_slope)},
              {"constant", number(r.constant)},
              {"alpha", number(r.alpha)},
              {"excluded", r.excluded}};
}

Json to_json(const PeriodizationResult& r) {
  Json modes = Json::array();
  for (const auto& m : r.coefficients) modes.push_back(Json{{"k", m.k}, {"norm", number(m.norm)}});
  Json j{{"cube_side", number(r.cube_side)},
         {"support_radius", number(r.support_radius)},
         {"modes", r.modes},
         {"decay_order", r.decay_order},
         {"norm_exponent", exponent_json(r.norm_exponent)},
         {"use_eta", r.use_eta},
         {"coefficients", modes},
         {"shell_norms", numbers(r.shell_norms)},
         {"decay_constant", number(r.decay_constant)},
         {"reconstruction_error", number(r.reconstruction_error)}};
  j["decay_fit"] = r.decay_fit ? to_json(*r.decay_fit) : Json(nullptr);
  return j;
}

Json to_json(const NonstationaryReport& r) {
  return Json{{"k", r.k},
              {"lambdas", numbers(r.lambdas)},
              {"lhs", numbers(r.lhs)},
              {"rhs", number(r.rhs)},
              {"ratios", numbers(r.ratios)},
              {"min_gradient", number(r.min_gradient)},
              {"spread", number(r.spread)},
              {"finite", r.finite},
              {"stable", r.stable}};
}

Json to_json(const TTStarReport& r) {
  return Json{{"j", r.j},
              {"m", number(r.m)},
              {"distances", numbers(r.distances)},
              {"magnitudes", numbers(r.magnitudes)},
              {"fit", to_json(r.fit)},
              {"fitted_decay", number(r.fitted_decay)},
              {"predicted", number(r.predicted)},
              {"kernel_hermitian_error", number(r.kernel_hermitian_error)},
              {"excluded", r.excluded},
              {"pass", r.pass}};
}

std::string dump_report(const Json& report) { return report.dump(2) + "\n"; }

}  // namespace fiolab
