#include "fiolab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "fiolab/bounds.hpp"
#include "fiolab/dyadic.hpp"
#include "fiolab/expr.hpp"
#include "fiolab/multilinear.hpp"
#include "fiolab/normlab.hpp"
#include "fiolab/oscint.hpp"
#include "fiolab/parallel.hpp"
#include "fiolab/report.hpp"
#include "fiolab/symbols.hpp"

namespace fiolab::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------- config access

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

[[noreturn]] void bad(const std::string& path, const std::string& what) { throw ConfigError(path, what); }

void allow_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) bad(path, "must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool known = std::any_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; });
    if (!known) bad(join(path, it.key()), "is not a known field");
  }
}

const Json* find(const Json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const Json& block(const Json& cfg, const char* key) {
  static const Json empty = Json::object();
  const Json* b = find(cfg, key);
  if (!b) return empty;
  if (!b->is_object()) bad(key, "must be an object");
  return *b;
}

double number(const Json& obj, const std::string& path, const char* key, double def) {
  const Json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_number()) bad(join(path, key), "must be a number");
  const double x = v->get<double>();
  if (!std::isfinite(x)) bad(join(path, key), "must be finite");
  return x;
}

double positive(const Json& obj, const std::string& path, const char* key, double def) {
  const double x = number(obj, path, key, def);
  if (!(x > 0.0)) bad(join(path, key), "must be positive");
  return x;
}

long long integer(const Json& obj, const std::string& path, const char* key, long long def, long long lo,
                  long long hi) {
  const Json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_number_integer()) bad(join(path, key), "must be an integer");
  const long long x = v->get<long long>();
  if (x < lo || x > hi) {
    bad(join(path, key), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return x;
}

bool flag(const Json& obj, const std::string& path, const char* key, bool def) {
  const Json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_boolean()) bad(join(path, key), "must be true or false");
  return v->get<bool>();
}

std::string text(const Json& obj, const std::string& path, const char* key, const std::string& def) {
  const Json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_string()) bad(join(path, key), "must be a string");
  return v->get<std::string>();
}

/// Positive number or "inf".
double exponent_value(const Json& v, const std::string& path) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return kInf;
    bad(path, "must be a positive number or \"inf\"");
  }
  if (!v.is_number() || !(v.get<double>() > 0.0)) bad(path, "must be a positive number or \"inf\"");
  return v.get<double>();
}

std::optional<double> opt_exponent(const Json& obj, const std::string& path, const char* key) {
  const Json* v = find(obj, key);
  if (!v) return std::nullopt;
  return exponent_value(*v, join(path, key));
}

std::vector<double> number_list(const Json& obj, const std::string& path, const char* key) {
  const Json* v = find(obj, key);
  if (!v) return {};
  if (!v->is_array()) bad(join(path, key), "must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    const Json& e = (*v)[i];
    const std::string p = join(path, key) + "[" + std::to_string(i) + "]";
    if (!e.is_number() || !std::isfinite(e.get<double>())) bad(p, "must be a finite number");
    out.push_back(e.get<double>());
  }
  return out;
}

Vec point(const Json& obj, const std::string& path, const char* key, int dim) {
  const std::vector<double> v = number_list(obj, path, key);
  if (v.empty()) return Vec{0.0, 0.0};
  if (static_cast<int>(v.size()) != dim) bad(join(path, key), "must have " + std::to_string(dim) + " entries");
  return Vec{v[0], dim == 2 ? v[1] : 0.0};
}

// ---------------------------------------------------------------- domain blocks

UniformGrid read_grid(const Json& cfg) {
  const Json& g = block(cfg, "grid");
  allow_keys(g, "grid", {"dim", "points", "halfwidth"});
  const int dim = static_cast<int>(integer(g, "grid", "dim", 1, 1, 2));
  const int points = static_cast<int>(integer(g, "grid", "points", 512, 2, 1 << 20));
  const double halfwidth = positive(g, "grid", "halfwidth", 8.0);
  try {
    return make_grid(dim, points, halfwidth);
  } catch (const ValidationError& e) {
    bad("grid.points", e.what());
  }
}

Json grid_json(const UniformGrid& g) {
  return Json{{"dim", g.dim()}, {"points", g.points_per_dim()}, {"halfwidth", g.space_halfwidth()}};
}

ClassTag read_class(const Json& cfg, const std::string& path) {
  allow_keys(cfg, path, {"kind", "m", "rho", "delta", "p", "ms", "rhos"});
  const std::string kind = text(cfg, path, "kind", "hormander");
  const double m = number(cfg, path, "m", 0.0);
  const double rho = number(cfg, path, "rho", 1.0);
  const double p = opt_exponent(cfg, path, "p").value_or(kInf);
  try {
    if (kind == "hormander") return ClassTag::hormander(m, rho, number(cfg, path, "delta", 0.0));
    if (kind == "rough") return ClassTag::rough(p, m, rho);
    if (kind == "joint_rough") return ClassTag::joint_rough(p, m, rho);
    if (kind == "product_rough") {
      return ClassTag::product_rough(p, number_list(cfg, path, "ms"), number_list(cfg, path, "rhos"));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    bad(path, e.what());
  }
  bad(join(path, "kind"), "must be one of hormander, rough, product_rough, joint_rough");
}

/// Expression that may only use the listed variable families.
std::shared_ptr<const Expression> parse_expression(const std::string& source, const std::string& path, int dim,
                                                   bool space, int operands) {
  std::shared_ptr<const Expression> e;
  try {
    e = std::make_shared<const Expression>(Expression::parse(source));
  } catch (const ValidationError& err) {
    bad(path, err.what());
  }
  if (!space && e->uses_space()) bad(path, "may not use the space variables x1, x2");
  if (e->max_operand() > operands) bad(path, "uses more frequency operands than allowed");
  if (e->max_coordinate() > dim) bad(path, "uses a coordinate beyond dimension " + std::to_string(dim));
  return e;
}

struct AmplitudeChoice {
  AmplitudeDescriptor amplitude;
  std::string builtin;
  std::string expression;
  bool windowed = false;
};

AmplitudeChoice read_amplitude(const Json& cfg, int dim, int arity = 1) {
  const Json* v = find(cfg, "amplitude");
  AmplitudeChoice out;
  try {
    if (!v) {
      out.builtin = "one";
    } else if (v->is_string()) {
      out.builtin = v->get<std::string>();
    } else if (v->is_object()) {
      allow_keys(*v, "amplitude", {"builtin", "expr", "arity", "class", "freq_support_radius", "window"});
      const int forms = int(v->contains("builtin")) + int(v->contains("expr")) + int(v->contains("window"));
      if (forms != 1) bad("amplitude", "needs exactly one of builtin, expr, window");
      if (v->contains("builtin")) {
        out.builtin = text(*v, "amplitude", "builtin", "");
      } else if (v->contains("expr")) {
        out.expression = text(*v, "amplitude", "expr", "");
        const int a = static_cast<int>(integer(*v, "amplitude", "arity", arity, 1, 3));
        if (a != arity) bad("amplitude.arity", "must be " + std::to_string(arity) + " for this command");
        const ClassTag tag = v->contains("class") ? read_class((*v)["class"], "amplitude.class")
                                                  : ClassTag::hormander(0.0, 1.0, 0.0);
        std::optional<double> radius;
        if (v->contains("freq_support_radius")) radius = positive(*v, "amplitude", "freq_support_radius", 1.0);
        parse_expression(out.expression, "amplitude.expr", dim, true, arity);
        out.amplitude = amplitude_from_expression(out.expression, arity, dim, tag, radius);
        return out;
      } else {
        const Json& w = (*v)["window"];
        allow_keys(w, "amplitude.window", {"space", "radius", "beta"});
        const std::string src = text(w, "amplitude.window", "space", "");
        if (src.empty()) bad("amplitude.window.space", "is required");
        auto e = parse_expression(src, "amplitude.window.space", dim, true, 0);
        const double radius = positive(w, "amplitude.window", "radius", 4.0);
        const double beta = positive(w, "amplitude.window", "beta", 25.0);
        if (arity != 1) bad("amplitude.window", "windowed amplitudes are linear");
        auto psi = [e](const Vec& x) {
          std::array<cplx, Expression::kSlots> slots{};
          slots[0] = x[0];
          slots[1] = x[1];
          return e->evaluate(slots);
        };
        out.expression = src;
        out.windowed = true;
        out.amplitude = windowed_amplitude(psi, dim, radius, beta, "window(" + src + ")");
        return out;
      }
    } else {
      bad("amplitude", "must be a built-in name or an object");
    }
    if (arity != 1) bad("amplitude", "built-in amplitudes are linear; use expr with arity " + std::to_string(arity));
    out.amplitude = builtin_amplitude(out.builtin, dim);
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    bad("amplitude", e.what());
  }
  return out;
}

struct PhaseChoice {
  PhaseDescriptor phase;
  std::string builtin;
  std::string expression;
};

PhaseChoice read_phase_value(const Json* v, const std::string& path, int dim) {
  PhaseChoice out;
  try {
    if (!v) {
      out.builtin = "linear_phase";
    } else if (v->is_string()) {
      out.builtin = v->get<std::string>();
    } else if (v->is_object()) {
      allow_keys(*v, path, {"builtin", "expr", "homogeneous", "phi_k"});
      if (v->contains("builtin") == v->contains("expr")) bad(path, "needs exactly one of builtin, expr");
      if (v->contains("builtin")) {
        out.builtin = text(*v, path, "builtin", "");
      } else {
        out.expression = text(*v, path, "expr", "");
        parse_expression(out.expression, join(path, "expr"), dim, true, 1);
        const bool homogeneous = flag(*v, path, "homogeneous", true);
        const int k = static_cast<int>(integer(*v, path, "phi_k", 2, 1, 2));
        out.phase = phase_from_expression(out.expression, dim, homogeneous, k);
        return out;
      }
    } else {
      bad(path, "must be a built-in name or an object");
    }
    out.phase = builtin_phase(out.builtin, dim);
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    bad(path, e.what());
  }
  return out;
}

PhaseChoice read_phase(const Json& cfg, int dim) { return read_phase_value(find(cfg, "phase"), "phase", dim); }

// ---------------------------------------------------------------- artifacts

struct Artifact {
  std::string path;
  std::string content;
};

void check_writable(const std::string& path, const std::string& field) {
  if (path.empty()) bad(field, "must be a file path");
  const fs::path p(path);
  if (fs::is_directory(p)) bad(field, "names a directory");
  const fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
  if (!fs::is_directory(dir)) bad(field, "directory '" + dir.string() + "' does not exist");
}

/// Each file is written next to its target and renamed into place.
void commit(const std::vector<Artifact>& files) {
  for (const auto& f : files) {
    const std::string tmp = f.path + ".partial";
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      os << f.content;
      if (!os) throw Error("cannot write '" + f.path + "'");
    }
    std::error_code ec;
    fs::rename(tmp, f.path, ec);
    if (ec) throw Error("cannot write '" + f.path + "': " + ec.message());
  }
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string meta_path(const std::string& report) {
  fs::path p(report);
  p.replace_extension(".meta.json");
  return p.string();
}

std::optional<int> env_threads() {
  const char* env = std::getenv("FIOLAB_THREADS");
  if (!env) return std::nullopt;
  try {
    const int v = std::stoi(env);
    if (v > 0) return v;
  } catch (...) {
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- invocation

struct Invocation {
  std::string command;
  std::string config_path;
  Json config = Json::object();
  std::vector<std::string> inputs;
  std::string field_output;
  std::string report_path;
  std::uint64_t seed = 1;
  int threads = 0;
};

Json load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad("--config", "cannot open '" + path + "'");
  Json cfg;
  try {
    cfg = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    bad("", std::string("invalid JSON: ") + e.what());
  }
  allow_keys(cfg, "", {"description", "threads", "seed", "output", "grid", "amplitude", "phase", "check_class",
                       "verify_phase", "decompose", "apply", "kernel", "periodize", "nonstat", "sweep", "experiment"});
  return cfg;
}

/// The config as echoed in reports: run-environment fields are dropped so
/// reports compare equal across thread counts and output locations.
Json config_echo(const Json& cfg) {
  Json echo = cfg;
  echo.erase("threads");
  echo.erase("output");
  return echo;
}

Json report_head(const Invocation& inv) {
  Json head{{"command", inv.command}};
  if (!inv.config.empty()) head["config"] = config_echo(inv.config);
  return head;
}

void merge(Json& into, const Json& from) {
  for (auto it = from.begin(); it != from.end(); ++it) into[it.key()] = it.value();
}

/// Result of a command: the report and any extra artifacts.
struct Outcome {
  Json report;
  std::vector<Artifact> files;
};

// ---------------------------------------------------------------- commands

Outcome check_class(const Invocation& inv) {
  const Json& b = block(inv.config, "check_class");
  allow_keys(b, "check_class", {"s", "j_max", "directions"});
  const UniformGrid grid = read_grid(inv.config);
  const AmplitudeChoice a = read_amplitude(inv.config, grid.dim());
  const int s = static_cast<int>(integer(b, "check_class", "s", 2, 0, 6));
  XiSampling sampling;
  sampling.j_max = static_cast<int>(integer(b, "check_class", "j_max", 6, 0, 20));
  sampling.directions = static_cast<int>(integer(b, "check_class", "directions", 0, 0, 4096));

  const SeminormEstimate est = estimate_seminorm(a.amplitude, s, grid, sampling);
  Json r = report_head(inv);
  r["amplitude"] = a.amplitude.name;
  r["claimed"] = to_json(a.amplitude.claimed);
  r["seminorm"] = to_json(est);
  r["verdict"] = est.class_violation ? "class violation" : "consistent with the claimed class";
  return {r, {}};
}

Outcome verify_phase_cmd(const Invocation& inv) {
  const Json& b = block(inv.config, "verify_phase");
  allow_keys(b, "verify_phase", {"k", "x_halfwidth", "x_samples", "xi_min", "xi_max", "radial_samples",
                                 "angular_samples", "levels", "cone"});
  const int dim = static_cast<int>(integer(block(inv.config, "grid"), "grid", "dim", 1, 1, 2));
  const PhaseChoice phi = read_phase(inv.config, dim);
  const int k = static_cast<int>(integer(b, "verify_phase", "k", phi.phase.claimed_phi_k, 1, 2));
  PhaseBox box;
  box.x_halfwidth = positive(b, "verify_phase", "x_halfwidth", box.x_halfwidth);
  box.x_samples = static_cast<int>(integer(b, "verify_phase", "x_samples", box.x_samples, 1, 64));
  box.xi_min = positive(b, "verify_phase", "xi_min", box.xi_min);
  box.xi_max = positive(b, "verify_phase", "xi_max", box.xi_max);
  if (!(box.xi_max > box.xi_min)) bad("verify_phase.xi_max", "must exceed xi_min");
  box.radial_samples = static_cast<int>(integer(b, "verify_phase", "radial_samples", box.radial_samples, 1, 256));
  box.angular_samples = static_cast<int>(integer(b, "verify_phase", "angular_samples", box.angular_samples, 1, 4096));
  std::vector<int> levels;
  for (double j : number_list(b, "verify_phase", "levels")) {
    if (j != std::floor(j) || j < 1 || j > 12) bad("verify_phase.levels", "entries must be integers in [1, 12]");
    levels.push_back(static_cast<int>(j));
  }
  const auto cone = static_cast<std::size_t>(integer(b, "verify_phase", "cone", 0, 0, 1 << 16));
  for (int j : levels) {
    if (cone >= ConeNet(j, dim).size()) bad("verify_phase.cone", "exceeds the cone count at level " + std::to_string(j));
  }

  const PhaseReport rep = verify_phase(phi.phase, k, box);
  Json r = report_head(inv);
  r["phase"] = phi.phase.name;
  r["report"] = to_json(rep);
  if (!levels.empty()) {
    Json reduced = Json::array();
    std::vector<std::vector<double>> parallel;
    for (int j : levels) {
      const ConeNet net(j, dim);
      const ReducedPhaseReport red = reduce_phase(phi.phase, net, cone, box.x_halfwidth);
      Json est = Json::array();
      for (std::size_t i = 0; i < red.estimates.size(); ++i) {
        const PhaseEstimate& e = red.estimates[i];
        est.push_back(Json{{"order", e.order}, {"parallel", e.parallel}, {"perpendicular", e.perpendicular}});
        if (parallel.size() <= i) parallel.resize(i + 1);
        parallel[i].push_back(std::max(e.parallel, e.perpendicular));
      }
      const Vec c = net.center(cone);
      reduced.push_back(Json{{"j", j},
                             {"cone", cone},
                             {"center", Json::array({c[0], c[1]})},
                             {"estimates", est},
                             {"euler_error", red.euler_error},
                             {"pass", red.pass}});
    }
    // Largest ratio between levels of each reduced-phase constant.
    double spread = 1.0;
    for (const auto& vals : parallel) {
      const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
      if (*lo > 0.0) spread = std::max(spread, *hi / *lo);
    }
    r["reduced"] = reduced;
    r["level_spread"] = spread;
  }
  r["verdict"] = rep.pass ? "phase class and non-degeneracy confirmed" : "phase checks failed";
  return {r, {}};
}

Outcome decompose(const Invocation& inv) {
  const Json& b = block(inv.config, "decompose");
  allow_keys(b, "decompose", {"j_min", "j_max", "support", "partition_samples"});
  const int j_min = static_cast<int>(integer(b, "decompose", "j_min", 2, 1, 12));
  const int j_max = static_cast<int>(integer(b, "decompose", "j_max", 5, 1, 12));
  if (j_max < j_min) bad("decompose.j_max", "must be at least j_min");
  const bool support = flag(b, "decompose", "support", true);
  const auto samples = static_cast<std::size_t>(integer(b, "decompose", "partition_samples", 10000, 1, 10000000));

  const PartitionCheck part = check_partition(j_max, samples, inv.seed);
  const std::vector<LevelReport> levels = decomposition_report(j_min, j_max, support);
  Json r = report_head(inv);
  r["partition"] = Json{{"samples", part.samples},
                        {"radius", std::ldexp(1.0, j_max)},
                        {"lp_error", part.lp_error},
                        {"cone_error", part.cone_error}};
  r["levels"] = to_json(levels);
  return {r, {}};
}

SampledField read_field(const std::string& path, const UniformGrid& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad("--input", "cannot open '" + path + "'");
  try {
    if (fs::path(path).extension() == ".bin") {
      SampledField f = read_binary(in);
      if (!(f.grid == grid)) bad("grid", "does not match the grid stored in '" + path + "'");
      return f;
    }
    return read_csv(in, grid);
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    bad("--input", "'" + path + "': " + e.what());
  }
}

std::string field_text(const SampledField& f, const std::string& path) {
  std::ostringstream os;
  if (fs::path(path).extension() == ".bin") {
    write_binary(os, f);
  } else {
    write_csv(os, f);
  }
  return os.str();
}

Outcome apply(const Invocation& inv) {
  const Json& b = block(inv.config, "apply");
  allow_keys(b, "apply", {"mode", "acknowledge_tail", "operands", "phases"});
  const UniformGrid grid = read_grid(inv.config);
  const int operands = static_cast<int>(integer(b, "apply", "operands", 1, 1, 3));
  const AmplitudeChoice a = read_amplitude(inv.config, grid.dim(), operands);
  const bool ack = flag(b, "apply", "acknowledge_tail", false);
  if (static_cast<int>(inv.inputs.size()) != operands) {
    bad("--input", "expected " + std::to_string(operands) + " input file(s), got " + std::to_string(inv.inputs.size()));
  }
  check_writable(inv.field_output, "--output");
  std::vector<SampledField> fs;
  for (const auto& p : inv.inputs) fs.push_back(read_field(p, grid));

  Json r = report_head(inv);
  r["inputs"] = inv.inputs;
  r["output"] = inv.field_output;
  SampledField g;
  if (operands == 1) {
    OperatorSpec spec{a.amplitude, read_phase(inv.config, grid.dim()).phase, grid};
    spec.acknowledge_tail = ack;
    try {
      spec.mode = parse_mode(text(b, "apply", "mode", "auto"));
    } catch (const ValidationError& e) {
      bad("apply.mode", e.what());
    }
    if (find(b, "phases")) bad("apply.phases", "is only used with operands >= 2");
    const FioOperator op(spec);
    g = op.apply(fs[0]);
    r["mode"] = mode_name(op.mode());
    r["tail_estimate"] = exponent_json(op.tail_estimate());
  } else {
    MultilinearSpec spec;
    spec.amplitude = a.amplitude;
    spec.grid = grid;
    spec.acknowledge_tail = ack;
    const std::string mode = text(b, "apply", "mode", "iterated");
    if (mode != "direct" && mode != "iterated") bad("apply.mode", "must be direct or iterated");
    if (const Json* ph = find(b, "phases")) {
      if (!ph->is_array() || static_cast<int>(ph->size()) != operands) {
        bad("apply.phases", "must list one phase per operand");
      }
      for (std::size_t j = 0; j < ph->size(); ++j) {
        spec.phases.push_back(read_phase_value(&(*ph)[j], "apply.phases[" + std::to_string(j) + "]", grid.dim()).phase);
      }
    } else {
      const PhaseDescriptor phi = read_phase(inv.config, grid.dim()).phase;
      spec.phases.assign(static_cast<std::size_t>(operands), phi);
    }
    g = apply_multilinear(spec, fs, mode == "direct" ? MultilinearMode::direct : MultilinearMode::iterated);
    r["mode"] = mode;
  }
  Json norms = Json::array();
  for (const auto& f : fs) norms.push_back(lp_norm(f, 2.0));
  r["input_l2"] = norms;
  r["output_l2"] = lp_norm(g, 2.0);
  return {r, {{inv.field_output, field_text(g, inv.field_output)}}};
}

Outcome kernel(const Invocation& inv) {
  const Json& b = block(inv.config, "kernel");
  allow_keys(b, "kernel", {"psi", "cap", "x", "r_min", "r_max", "radii", "angles", "points", "alpha", "tolerance",
                           "field"});
  const int dim = static_cast<int>(integer(block(inv.config, "grid"), "grid", "dim", 2, 1, 2));
  KernelOptions o;
  o.r_min = positive(b, "kernel", "r_min", o.r_min);
  o.r_max = positive(b, "kernel", "r_max", o.r_max);
  if (!(o.r_max > o.r_min)) bad("kernel.r_max", "must exceed r_min");
  o.radii = static_cast<int>(integer(b, "kernel", "radii", o.radii, 2, 1024));
  o.angles = static_cast<int>(integer(b, "kernel", "angles", o.angles, 1, 4096));
  o.points = static_cast<int>(integer(b, "kernel", "points", o.points, 16, 4096));
  o.alpha = positive(b, "kernel", "alpha", o.alpha);
  const double tolerance = positive(b, "kernel", "tolerance", 0.15);
  const Vec x = point(b, "kernel", "x", dim);

  std::optional<UniformGrid> z_grid;
  std::string field_path;
  if (const Json* f = find(b, "field")) {
    allow_keys(*f, "kernel.field", {"output", "points", "halfwidth"});
    field_path = text(*f, "kernel.field", "output", "");
    check_writable(field_path, "kernel.field.output");
    try {
      z_grid = make_grid(dim, static_cast<int>(integer(*f, "kernel.field", "points", 64, 2, 4096)),
                         positive(*f, "kernel.field", "halfwidth", 32.0));
    } catch (const ValidationError& e) {
      bad("kernel.field.points", e.what());
    }
  }

  auto eta = [](const Vec& xi) { return LPPartition::psi0_sq(xi[0] * xi[0] + xi[1] * xi[1]); };
  KernelProblem problem;
  problem.dim = dim;
  problem.eta = eta;
  problem.eta_radius = 2.0;
  Json r = report_head(inv);
  if (find(b, "psi")) {
    const std::string src = text(b, "kernel", "psi", "");
    auto e = parse_expression(src, "kernel.psi", dim, false, 1);
    problem.psi = [e](const Vec& xi) {
      std::array<cplx, Expression::kSlots> slots{};
      slots[static_cast<std::size_t>(Expression::k_slot(0, 0))] = xi[0];
      slots[static_cast<std::size_t>(Expression::k_slot(0, 1))] = xi[1];
      return e->evaluate(slots).real();
    };
    r["psi"] = src;
  } else {
    const PhaseChoice phi = read_phase(inv.config, dim);
    const std::size_t caps_count = dim == 2 ? 8 : 2;
    const auto cap = static_cast<std::size_t>(integer(b, "kernel", "cap", 0, 0, 1 << 16));
    if (cap >= caps_count) bad("kernel.cap", "must be below " + std::to_string(caps_count));
    const auto caps = reduce_phase_low_frequency(phi.phase);
    const CapReport c = caps.at(cap);
    problem.psi = [ph = c.phase, x](const Vec& xi) { return ph.value(x, xi); };
    r["phase"] = phi.phase.name;
    r["cap"] = Json{{"index", cap},
                    {"center", Json::array({c.phase.center[0], c.phase.center[1]})},
                    {"radius", c.cap_radius},
                    {"gradient_sup", c.gradient_sup}};
  }
  const KernelReport rep = low_frequency_kernel(problem, o);
  merge(r, to_json(rep));
  const double predicted = -(dim + o.alpha);
  r["predicted_slope"] = predicted;
  r["tolerance"] = tolerance;
  r["pass"] = rep.fitted_slope <= predicted + tolerance;
  std::vector<Artifact> files;
  if (z_grid) {
    const SampledField k = low_frequency_kernel_field(problem, *z_grid, o.points);
    files.push_back({field_path, field_text(k, field_path)});
    r["field"] = field_path;
  }
  return {r, files};
}

SampledField gaussian_probe(const UniformGrid& g, double width) {
  return sample_space(g, [width](const Vec& x) { return cplx(std::exp(-(x[0] * x[0] + x[1] * x[1]) / (2 * width * width))); });
}

Outcome periodize(const Invocation& inv) {
  const Json& b = block(inv.config, "periodize");
  allow_keys(b, "periodize", {"modes", "decay_order", "cube_side", "quadrature_points", "use_eta", "verify",
                              "probe_width"});
  const UniformGrid grid = read_grid(inv.config);
  const AmplitudeChoice a = read_amplitude(inv.config, grid.dim());
  const PhaseChoice phi = read_phase(inv.config, grid.dim());
  PeriodizeOptions o;
  o.modes = static_cast<int>(integer(b, "periodize", "modes", o.modes, 1, 256));
  o.decay_order = static_cast<int>(integer(b, "periodize", "decay_order", 0, 0, 32));
  o.cube_side = number(b, "periodize", "cube_side", 0.0);
  if (o.cube_side < 0.0) bad("periodize.cube_side", "must be non-negative");
  o.quadrature_points = static_cast<int>(integer(b, "periodize", "quadrature_points", 0, 0, 1 << 14));
  o.use_eta = flag(b, "periodize", "use_eta", true);
  const bool verify = flag(b, "periodize", "verify", true);
  const double width = positive(b, "periodize", "probe_width", 1.5);
  if (!a.amplitude.freq_support_radius) bad("amplitude", "periodization needs a compact frequency support");

  const PeriodizationResult res = periodize_amplitude(a.amplitude, grid, o);
  Json r = report_head(inv);
  r["amplitude"] = a.amplitude.name;
  r["phase"] = phi.phase.name;
  merge(r, to_json(res));
  if (verify) {
    const SampledField f = gaussian_probe(grid, width);
    OperatorSpec spec{a.amplitude, phi.phase, grid};
    spec.mode = QuadratureMode::direct;
    r["operator_error"] = relative_l2_error(apply_periodized(res, phi.phase, f), apply_fio(spec, f));
  }
  return {r, {}};
}

Outcome nonstat(const Invocation& inv) {
  const Json& b = block(inv.config, "nonstat");
  allow_keys(b, "nonstat", {"example", "amplitude", "phase", "dim", "support_radius", "k", "lambdas", "rhs_points"});
  NonstationaryProblem problem;
  int k_default = 1;
  if (find(b, "example")) {
    if (find(b, "amplitude") || find(b, "phase")) bad("nonstat", "takes either example or amplitude and phase");
    const std::string name = text(b, "nonstat", "example", "");
    try {
      problem = nonstationary_example(name);
      k_default = nonstationary_example_order(name);
    } catch (const ValidationError& e) {
      bad("nonstat.example", e.what());
    }
  } else {
    const int dim = static_cast<int>(integer(b, "nonstat", "dim", 2, 1, 2));
    const std::string fa = text(b, "nonstat", "amplitude", "");
    const std::string fp = text(b, "nonstat", "phase", "");
    if (fa.empty() || fp.empty()) bad("nonstat", "needs example, or both amplitude and phase");
    auto ea = parse_expression(fa, "nonstat.amplitude", dim, false, 1);
    auto ep = parse_expression(fp, "nonstat.phase", dim, false, 1);
    auto value = [dim](std::shared_ptr<const Expression> e) {
      return [e, dim](const Vec& xi) {
        std::array<cplx, Expression::kSlots> slots{};
        for (int c = 0; c < dim; ++c) slots[static_cast<std::size_t>(Expression::k_slot(0, c))] = xi[static_cast<std::size_t>(c)];
        return e->evaluate(slots).real();
      };
    };
    auto jet = [dim](std::shared_ptr<const Expression> e) {
      return [e, dim](std::span<const Jet> xi) {
        std::vector<Jet> slots(Expression::kSlots, Jet(xi[0].layout(), cplx(0.0)));
        for (int c = 0; c < dim; ++c) slots[static_cast<std::size_t>(Expression::k_slot(0, c))] = xi[static_cast<std::size_t>(c)];
        return real(e->evaluate(std::span<const Jet>(slots)));
      };
    };
    problem.dim = dim;
    problem.amplitude = value(ea);
    problem.amplitude_jet = jet(ea);
    problem.phase = value(ep);
    problem.phase_jet = jet(ep);
    problem.support_radius = positive(b, "nonstat", "support_radius", 1.0);
  }
  const int k = static_cast<int>(integer(b, "nonstat", "k", k_default, 0, 8));
  std::vector<double> lambdas = number_list(b, "nonstat", "lambdas");
  for (double l : lambdas) {
    if (!(l > 0.0)) bad("nonstat.lambdas", "entries must be positive");
  }
  const int rhs_points = static_cast<int>(integer(b, "nonstat", "rhs_points", 256, 8, 1 << 14));

  const NonstationaryReport rep = verify_nonstationary_decay(problem, k, lambdas, rhs_points);
  Json r = report_head(inv);
  merge(r, to_json(rep));
  r["verdict"] = rep.stable ? "ratio spread within 4" : "ratio spread exceeds 4";
  return {r, {}};
}

Outcome thresholds(const Invocation& inv, const Scenario& s) {
  const ThresholdReport rep = multilinear_admissibility(s);
  Json r = report_head(inv);
  merge(r, to_json(rep));
  return {r, {}};
}

SweepOptions read_sweep_options(const Json& b, const std::string& path, std::uint64_t seed, const UniformGrid& grid) {
  SweepOptions o;
  o.j_min = static_cast<int>(integer(b, path, "j_min", o.j_min, 0, 20));
  o.j_max = static_cast<int>(integer(b, path, "j_max", o.j_max, 0, 20));
  if (o.j_max - o.j_min + 1 < 4) bad(join(path, "j_max"), "must be at least j_min + 3 (four levels)");
  if (std::ldexp(1.0, o.j_max + 1) > grid.freq_halfwidth()) {
    bad(join(path, "j_max"), "needs 2^(j_max+1) <= " + std::to_string(grid.freq_halfwidth()) +
                                 ", the frequency range of the grid");
  }
  o.norm.bank_size = static_cast<int>(integer(b, path, "bank", o.norm.bank_size, 0, 4096));
  o.norm.max_iterations = static_cast<int>(integer(b, path, "max_iterations", o.norm.max_iterations, 1, 10000));
  o.norm.relative_increment = positive(b, path, "relative_increment", o.norm.relative_increment);
  o.norm.seed = seed;
  o.tolerance = positive(b, path, "tolerance", o.tolerance);
  o.p = opt_exponent(b, path, "p");
  return o;
}

Outcome sweep(const Invocation& inv) {
  const Json& b = block(inv.config, "sweep");
  allow_keys(b, "sweep", {"q", "r", "p", "j_min", "j_max", "bank", "max_iterations", "relative_increment",
                          "tolerance", "csv"});
  const UniformGrid grid = read_grid(inv.config);
  const AmplitudeChoice a = read_amplitude(inv.config, grid.dim());
  const PhaseChoice phi = read_phase(inv.config, grid.dim());
  const SweepOptions o = read_sweep_options(b, "sweep", inv.seed, grid);
  const double q = opt_exponent(b, "sweep", "q").value_or(2.0);
  const double p = o.p.value_or(a.amplitude.claimed.space_exponent());
  const double r_exp = opt_exponent(b, "sweep", "r").value_or(1.0 / (1.0 / p + 1.0 / q));
  const std::string csv = text(b, "sweep", "csv", "");
  if (!csv.empty()) check_writable(csv, "sweep.csv");

  const NormSweepRecord rec = dyadic_norm_sweep(a.amplitude, phi.phase, grid, q, r_exp, o);
  const ClassTag& tag = a.amplitude.claimed;
  Json r = report_head(inv);
  const Json body = to_json(rec);
  Json inputs = body["inputs"];
  inputs["p"] = exponent_json(p);
  inputs["amplitude"] = a.amplitude.name;
  inputs["phase"] = phi.phase.name;
  inputs["grid"] = grid_json(grid);
  r["inputs"] = inputs;
  try {
    r["thresholds"] = to_json(linear_thresholds(grid.dim(), tag.rho, std::max(p, 1.0), std::max(q, 1.0), tag.total_order()));
  } catch (const ValidationError& e) {
    r["thresholds"] = Json{{"unavailable", e.what()}};
  }
  for (auto it = body.begin(); it != body.end(); ++it) {
    if (it.key() != "inputs") r[it.key()] = it.value();
  }
  std::vector<Artifact> files;
  if (!csv.empty()) {
    std::ostringstream os;
    write_sweep_csv(os, rec);
    files.push_back({csv, os.str()});
  }
  return {r, files};
}

Outcome experiment(const Invocation& inv) {
  const Json& b = block(inv.config, "experiment");
  allow_keys(b, "experiment", {"scenario", "q", "r", "p", "j_min", "j_max", "bank", "max_iterations",
                               "relative_increment", "tolerance", "check_partition", "check_phase"});
  const UniformGrid grid = read_grid(inv.config);
  ExperimentConfig c;
  c.dim = grid.dim();
  c.points = grid.points_per_dim();
  c.halfwidth = grid.space_halfwidth();
  const AmplitudeChoice a = read_amplitude(inv.config, grid.dim());
  if (a.windowed || a.amplitude.freq_support_radius) {
    bad("amplitude", "experiments take a built-in name or an expression without support radius");
  }
  if (!a.expression.empty()) {
    c.amplitude_expression = a.expression;
    c.claimed = a.amplitude.claimed;
  } else {
    c.amplitude = a.builtin;
  }
  const PhaseChoice phi = read_phase(inv.config, grid.dim());
  if (!phi.expression.empty()) {
    if (!phi.phase.homogeneous_degree_1 || phi.phase.claimed_phi_k != 2) {
      bad("phase", "experiment phases given as expressions must be homogeneous with phi_k 2");
    }
    c.phase_expression = phi.expression;
  } else {
    c.phase = phi.builtin;
  }
  c.scenario = text(b, "experiment", "scenario", "fio");
  const auto& tags = scenario_tags();
  if (std::find(tags.begin(), tags.end(), c.scenario) == tags.end()) {
    bad("experiment.scenario", "unknown scenario '" + c.scenario + "'");
  }
  c.q = opt_exponent(b, "experiment", "q").value_or(2.0);
  c.r = opt_exponent(b, "experiment", "r");
  c.sweep = read_sweep_options(b, "experiment", inv.seed, grid);
  c.p = c.sweep.p;
  c.check_partition = flag(b, "experiment", "check_partition", true);
  c.check_phase = flag(b, "experiment", "check_phase", true);

  const ExperimentReport rep = boundedness_experiment(c);
  Json r = report_head(inv);
  merge(r, to_json(rep));
  return {r, {}};
}

// ---------------------------------------------------------------- argument parsing

std::string usage() {
  std::string s = "usage: fiolab <command> [options]\n\ncommands:\n";
  for (const auto& c : commands()) s += "  " + c + "\n";
  s += "\nCompute commands take --config cfg.json [--output report.json];\n"
       "apply takes --input f.csv (once per operand) and --output g.csv [--report r.json];\n"
       "thresholds takes flags (fiolab thresholds --help).\n";
  return s;
}

/// Parses flags with CLI11; returns false when help was printed.
bool parse_flags(CLI::App& app, const std::vector<std::string>& args, std::ostream& out) {
  std::vector<std::string> rest(args.begin() + 1, args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return false;
  } catch (const CLI::ParseError& e) {
    throw ValidationError(std::string("usage: ") + e.what());
  }
  return true;
}

double flag_exponent(const std::string& value, const std::string& name) {
  try {
    return parse_exponent(value);
  } catch (const ValidationError& e) {
    throw ConfigError(name, e.what());
  }
}

std::vector<double> flag_list(const std::string& value, const std::string& name, bool exponents) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (exponents) {
      out.push_back(flag_exponent(item, name));
    } else {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ConfigError(name, "cannot parse '" + item + "'");
      }
    }
  }
  if (out.empty()) throw ConfigError(name, "must list at least one value");
  return out;
}

void write_error(std::ostream& err, const std::string& kind, const std::string& message, const std::string& field = "",
                 const std::string& command = "") {
  Json e{{"error", message}, {"kind", kind}};
  if (!field.empty()) e["field"] = field;
  if (!command.empty()) e["command"] = command;
  err << e.dump() << "\n";
}

int dispatch(const std::vector<std::string>& args, std::ostream& out) {
  Invocation inv;
  inv.command = args[0];
  CLI::App app("fiolab " + inv.command, "fiolab " + inv.command);
  Scenario s;
  std::string p, q, q1, q2, qs, r, orders;
  std::optional<double> m, m1, m2, rho2;

  if (inv.command == "thresholds") {
    app.add_option("--scenario", s.tag, "scenario tag");
    app.add_option("--n", s.n, "dimension");
    app.add_option("--rho", s.rho, "type rho");
    app.add_option("--rho2", rho2, "second type (smooth bilinear)");
    app.add_option("--delta", s.delta, "type delta");
    app.add_option("--p", p, "spatial exponent of the symbol class (inf allowed)");
    app.add_option("--q", q, "input exponent (linear scenarios)");
    app.add_option("--q1", q1, "first input exponent");
    app.add_option("--q2", q2, "second input exponent");
    app.add_option("--qs", qs, "comma separated input exponents (general_multilinear)");
    app.add_option("--r", r, "target exponent");
    app.add_option("--m", m, "order");
    app.add_option("--m1", m1, "first order");
    app.add_option("--m2", m2, "second order");
    app.add_option("--orders", orders, "comma separated orders (general_multilinear)");
    app.add_option("--output", inv.report_path, "report path (default: standard output)");
  } else {
    app.add_option("--config", inv.config_path, "config file (JSON)")->required();
    if (inv.command == "apply") {
      app.add_option("--input", inv.inputs, "input field, once per operand (.csv or .bin)")->required();
      app.add_option("--output", inv.field_output, "output field (.csv or .bin)")->required();
      app.add_option("--report", inv.report_path, "report path (default: config output, else standard output)");
    } else {
      app.add_option("--output", inv.report_path, "report path (default: config output, else standard output)");
    }
  }
  if (!parse_flags(app, args, out)) return kExitOk;

  if (inv.command == "thresholds") {
    if (!p.empty()) s.p = flag_exponent(p, "--p");
    if (!q.empty() && !q1.empty()) throw ConfigError("--q", "give --q or --q1, not both");
    if (!q.empty()) s.q1 = flag_exponent(q, "--q");
    if (!q1.empty()) s.q1 = flag_exponent(q1, "--q1");
    if (!q2.empty()) s.q2 = flag_exponent(q2, "--q2");
    if (!qs.empty()) s.qs = flag_list(qs, "--qs", true);
    if (!r.empty()) s.r = flag_exponent(r, "--r");
    if (!orders.empty()) s.orders = flag_list(orders, "--orders", false);
    s.m = m;
    s.m1 = m1;
    s.m2 = m2;
    s.rho2 = rho2;
  } else {
    inv.config = load_config(inv.config_path);
    if (inv.report_path.empty()) inv.report_path = text(inv.config, "", "output", "");
    inv.seed = static_cast<std::uint64_t>(integer(inv.config, "", "seed", 1, 0, std::numeric_limits<long long>::max()));
    inv.threads = static_cast<int>(integer(inv.config, "", "threads", 0, 0, 1024));
  }
  if (!inv.report_path.empty()) check_writable(inv.report_path, inv.command == "apply" ? "--report" : "--output");

  std::optional<ScopedThreads> scope;
  if (const auto env = env_threads()) {
    scope.emplace(*env);
  } else if (inv.threads > 0) {
    scope.emplace(inv.threads);
  }
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();

  Outcome result;
  const std::string& c = inv.command;
  if (c == "check-class") result = check_class(inv);
  else if (c == "verify-phase") result = verify_phase_cmd(inv);
  else if (c == "decompose") result = decompose(inv);
  else if (c == "apply") result = apply(inv);
  else if (c == "kernel") result = kernel(inv);
  else if (c == "periodize") result = periodize(inv);
  else if (c == "nonstat") result = nonstat(inv);
  else if (c == "thresholds") result = thresholds(inv, s);
  else if (c == "sweep") result = sweep(inv);
  else result = experiment(inv);

  const std::string text_report = dump_report(result.report);
  std::vector<Artifact> files = std::move(result.files);
  if (!inv.report_path.empty()) {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const Json meta{{"command", c},
                    {"config", inv.config_path},
                    {"report", inv.report_path},
                    {"started", started},
                    {"finished", utc_now()},
                    {"elapsed_seconds", elapsed},
                    {"threads", worker_threads()},
                    {"version", kVersion}};
    files.push_back({inv.report_path, text_report});
    files.push_back({meta_path(inv.report_path), dump_report(meta)});
  }
  commit(files);
  if (inv.report_path.empty()) out << text_report;
  return kExitOk;
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"check-class", "verify-phase", "decompose", "apply",  "kernel",
                                              "periodize",   "nonstat",      "thresholds", "sweep", "experiment"};
  return names;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    write_error(err, "validation", "missing command");
    err << usage();
    return kExitValidation;
  }
  if (args[0] == "--help" || args[0] == "-h" || args[0] == "help") {
    out << usage();
    return kExitOk;
  }
  if (args[0] == "--version") {
    out << "fiolab " << kVersion << "\n";
    return kExitOk;
  }
  const auto& names = commands();
  if (std::find(names.begin(), names.end(), args[0]) == names.end()) {
    write_error(err, "validation", "unknown command", "", args[0]);
    return kExitValidation;
  }
  try {
    return dispatch(args, out);
  } catch (const ConfigError& e) {
    write_error(err, "validation", e.what(), e.field(), args[0]);
    return kExitValidation;
  } catch (const ValidationError& e) {
    write_error(err, "validation", e.what(), "", args[0]);
    return kExitValidation;
  } catch (const std::exception& e) {
    write_error(err, "compute", e.what(), "", args[0]);
    return kExitCompute;
  }
}

}  // namespace fiolab::cli
