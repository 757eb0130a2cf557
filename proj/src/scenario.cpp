#include "gq/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "gq/prequantum.hpp"

namespace gq {

namespace {

using nlohmann::json;
constexpr double kPi = std::numbers::pi;

Error config(const std::string& what) { return Error(ErrorKind::Config, what); }

// ---------------------------------------------------------------------------
// observables

std::vector<double> number_row(const json& row, std::size_t len, const char* what) {
  if (!row.is_array() || row.size() != len) throw config(std::string(what) + " terms need " + std::to_string(len) + " numbers");
  std::vector<double> out;
  for (const auto& v : row) {
    if (!v.is_number()) throw config(std::string(what) + " terms must be numeric");
    out.push_back(v.get<double>());
  }
  return out;
}

int as_index(double v, const char* what) {
  if (v != std::floor(v)) throw config(std::string(what) + " exponents and modes must be integers");
  return static_cast<int>(v);
}

}  // namespace

ObservableSpec resolve_observable(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "x") return {Observable::coordinate(0), std::nullopt};
    if (s == "y") return {Observable::coordinate(1), std::nullopt};
    if (s == "z" || s == "height") return {Observable::coordinate(2), std::nullopt};
    throw config("unknown observable preset '" + s + "'");
  }
  if (!j.is_object() || !j.contains("preset") || !j["preset"].is_string())
    throw config("observable must be a preset name or an object with a 'preset' field");
  const std::string p = j["preset"].get<std::string>();
  if (p == "height") return {Observable::coordinate(2), std::nullopt};
  if (p == "coordinate") {
    const int axis = j.value("axis", -1);
    if (axis < 0 || axis > 2) throw config("coordinate preset needs axis 0, 1 or 2");
    return {Observable::coordinate(axis), std::nullopt};
  }
  if (p == "linear") {
    const auto v = number_row(j.value("vector", json()), 3, "linear");
    return {Observable::linear(Vec3(v[0], v[1], v[2])), std::nullopt};
  }
  if (p == "constant") {
    if (!j.contains("value") || !j["value"].is_number()) throw config("constant preset needs a numeric value");
    return {Observable::constant(j["value"].get<double>()), std::nullopt};
  }
  if (p == "trig") {
    if (!j.contains("terms") || !j["terms"].is_array()) throw config("trig preset needs terms [[m, n, a, b], ...]");
    std::vector<TrigTerm> terms;
    for (const auto& row : j["terms"]) {
      const auto v = number_row(row, 4, "trig");
      terms.push_back({as_index(v[0], "trig"), as_index(v[1], "trig"), v[2], v[3]});
    }
    TrigPolynomial t(std::move(terms));
    return {t.observable(), t};
  }
  if (p == "polynomial") {
    if (!j.contains("terms") || !j["terms"].is_array()) throw config("polynomial preset needs terms [[a, b, c, coef], ...]");
    std::vector<Monomial> terms;
    for (const auto& row : j["terms"]) {
      const auto v = number_row(row, 4, "polynomial");
      const int a = as_index(v[0], "polynomial"), b = as_index(v[1], "polynomial"), c = as_index(v[2], "polynomial");
      if (a < 0 || b < 0 || c < 0) throw config("polynomial exponents must be non-negative");
      terms.push_back({a, b, c, v[3]});
    }
    return {Polynomial3(std::move(terms)).observable(), std::nullopt};
  }
  throw config("unknown observable preset '" + p + "'");
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"bpu",        "bracket", "bs_census", "dynamical",  "flow",
                                              "level",      "prequantum", "projective", "surjectivity", "toeplitz"};
  return names;
}

namespace {

std::vector<int> positive_list(const json& j, const char* key) {
  if (!j.is_array()) throw config(std::string(key) + " must be an array of integers");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<long long>() <= 0) throw config(std::string(key) + " entries must be positive integers");
    out.push_back(v.get<int>());
  }
  return out;
}

double positive_number(const json& j, const char* key) {
  if (!j.is_number() || !(j.get<double>() > 0.0)) throw config(std::string(key) + " must be a positive number");
  return j.get<double>();
}

int positive_int(const json& j, const char* key) {
  if (!j.is_number_integer() || j.get<long long>() <= 0) throw config(std::string(key) + " must be a positive integer");
  return j.get<int>();
}

}  // namespace

Scenario parse_scenario(const json& j) {
  if (!j.is_object()) throw config("scenario must be a JSON object");
  static const std::set<std::string> known{"name",      "model",     "levels",     "grids", "loops",
                                           "tau",       "instances", "seed",       "flow_time",
                                           "flow_steps", "observables", "suites",  "tolerances"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw config("unknown scenario key '" + key + "'");

  Scenario s;
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw config("name must be a string");
    s.name = j["name"].get<std::string>();
  }
  if (j.contains("model")) {
    if (!j["model"].is_string()) throw config("model must be a string");
    s.model = j["model"].get<std::string>();
    if (s.model != "sphere" && s.model != "torus") throw config("model must be 'sphere' or 'torus'");
  }
  if (j.contains("levels")) s.levels = positive_list(j["levels"], "levels");
  if (j.contains("grids")) s.grids = positive_list(j["grids"], "grids");
  if (j.contains("loops")) s.loops = positive_list(j["loops"], "loops");
  if (j.contains("tau")) s.tau = positive_number(j["tau"], "tau");
  if (j.contains("instances")) s.instances = positive_int(j["instances"], "instances");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<long long>() < 0) throw config("seed must be a non-negative integer");
    s.seed = j["seed"].get<unsigned long long>();
  }
  if (j.contains("flow_time")) {
    if (!j["flow_time"].is_number()) throw config("flow_time must be a number");
    s.flow_time = j["flow_time"].get<double>();
  }
  if (j.contains("flow_steps")) s.flow_steps = positive_int(j["flow_steps"], "flow_steps");
  if (j.contains("observables")) {
    if (!j["observables"].is_object()) throw config("observables must be an object of named presets");
    for (const auto& [key, def] : j["observables"].items()) {
      resolve_observable(def);
      s.observables[key] = def;
    }
  }
  if (j.contains("suites")) {
    if (!j["suites"].is_array()) throw config("suites must be an array of names");
    for (const auto& v : j["suites"]) {
      if (!v.is_string()) throw config("suite names must be strings");
      const std::string name = v.get<std::string>();
      const auto& all = suite_names();
      if (std::find(all.begin(), all.end(), name) == all.end()) throw config("unknown suite '" + name + "'");
      if (std::find(s.suites.begin(), s.suites.end(), name) == s.suites.end()) s.suites.push_back(name);
    }
  }
  if (j.contains("tolerances")) {
    if (!j["tolerances"].is_object()) throw config("tolerances must be an object");
    for (const auto& [key, v] : j["tolerances"].items()) {
      if (!v.is_number()) throw config("tolerance '" + key + "' must be a number");
      s.tolerances[key] = v.get<double>();
    }
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config("cannot read scenario file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw config(path.string() + ": " + e.what());
  }
  return parse_scenario(j);
}

bool Report::ok() const {
  return errors.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

namespace {

// ---------------------------------------------------------------------------
// suite plumbing

struct SuiteOutput {
  std::vector<Check> checks;
  std::vector<NamedTable> tables;
  json extras = json::object();
};

class Context {
 public:
  Context(const Scenario& s, const std::string& suite, SuiteOutput& out) : s_(s), suite_(suite), out_(out) {
    // FNV-1a of the suite name keeps streams independent of suite order.
    unsigned long long h = 1469598103934665603ull;
    for (char c : suite) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
    rng_.seed(s.seed ^ h);
  }

  const Scenario& scenario() const { return s_; }
  std::mt19937_64& rng() { return rng_; }

  double tolerance(const std::string& key, double fallback) const {
    const auto it = s_.tolerances.find(suite_ + "." + key);
    return it != s_.tolerances.end() ? it->second : fallback;
  }

  /// Upper-bounded check; the tolerance is scaled by --tol-scale.
  void at_most(const std::string& key, const std::string& anchor, double measured, double tol) {
    const double t = tolerance(key, tol) * s_.tol_scale;
    out_.checks.push_back({suite_ + "." + key, anchor, measured, t, Bound::AtMost, measured <= t});
  }
  /// Lower-bounded check (orders, overlaps); not scaled.
  void at_least(const std::string& key, const std::string& anchor, double measured, double tol) {
    const double t = tolerance(key, tol);
    out_.checks.push_back({suite_ + "." + key, anchor, measured, t, Bound::AtLeast, measured >= t});
  }

  void table(const std::string& name, CsvTable t) { out_.tables.push_back({suite_ + "_" + name, std::move(t)}); }
  json& extras() { return out_.extras; }

  std::vector<int> levels(std::vector<int> fallback) const { return s_.levels.empty() ? fallback : s_.levels; }
  int level(int fallback) const { return s_.levels.empty() ? fallback : s_.levels.front(); }
  std::vector<int> loops(std::vector<int> fallback) const { return s_.loops.empty() ? fallback : s_.loops; }
  std::vector<int> grids(std::vector<int> fallback) const { return s_.grids.empty() ? fallback : s_.grids; }

  std::optional<ObservableSpec> observable(const std::string& name) const {
    const auto it = s_.observables.find(name);
    if (it == s_.observables.end()) return std::nullopt;
    return resolve_observable(it->second);
  }

 private:
  const Scenario& s_;
  std::string suite_;
  SuiteOutput& out_;
  std::mt19937_64 rng_;
};

std::string pad(int k) {
  std::ostringstream os;
  os << 'k' << (k < 10 ? "0" : "") << k;
  return os.str();
}

/// Least-squares decay order of err against resolution, ignoring round-off floors.
std::optional<double> decay_order(const std::vector<int>& res, const std::vector<double>& err, double floor = 1e-13) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < res.size(); ++i)
    if (err[i] > floor) {
      x.push_back(std::log(static_cast<double>(res[i])));
      y.push_back(std::log(err[i]));
    }
  if (x.size() < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return -sxy / sxx;
}

ModuliTangent random_tangent(std::mt19937_64& rng, const ModuliPoint& pt, int modes = 4) {
  std::normal_distribution<double> g;
  auto trig = [&] {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(pt.size());
    for (int m = 1; m <= modes; ++m) {
      const double a = g(rng) / m, b = g(rng) / m;
      for (Eigen::Index i = 0; i < pt.size(); ++i) {
        const double s = 2 * kPi * m * static_cast<double>(i) / static_cast<double>(pt.size());
        v(i) += a * std::cos(s) + b * std::sin(s);
      }
    }
    return v;
  };
  return pt.project({trig(), trig()});
}

double relative(const ModuliTangent& a, const ModuliTangent& b) {
  return (a - b).max_abs() / std::max(1e-300, std::max(a.max_abs(), b.max_abs()));
}

// ---------------------------------------------------------------------------
// suites

void projective_suite(Context& c) {
  auto& rng = c.rng();
  const int pairs = 25 * c.scenario().instances;
  double bracket = 0.0, slack = 0.0, geodesic = 0.0;
  for (int t = 0; t < pairs; ++t) {
    const int d = 2 + t % 5;
    const HermitianOp F = HermitianOp::random(rng, d), K = HermitianOp::random(rng, d);
    const SectionRay p = SectionRay::random(rng, d), q = SectionRay::random(rng, d);
    bracket = std::max(bracket, std::abs(symbol_brackets(F, K, p).poisson - symbol_value(commutator_observable(F, K), p)));
    for (int r = 0; r < 10; ++r) {
      const auto u = uncertainty_relation(F, K, SectionRay::random(rng, d));
      slack = std::max(slack, (u.lower_bound - u.var_f * u.var_k) / std::max(1.0, u.lower_bound));
    }
    const auto tr = transition_probability(p, q);
    geodesic = std::max(geodesic, std::abs(tr.prob - tr.geodesic_check));
  }
  c.at_most("bracket_symbol", "symbol bracket of a commutator", bracket, 1e-10);
  c.at_most("uncertainty_slack", "uncertainty relation on rays", std::max(slack, 0.0), 1e-10);
  c.at_most("geodesic_probability", "transition probability from geodesic length", geodesic, 1e-8);
}

void prequantum_suite(Context& c) {
  auto& rng = c.rng();
  const int k = c.level(1);
  const std::vector<int> grids = c.grids({64, 128, 256});
  const auto batch = smooth_batch(k, 6, static_cast<unsigned>(rng()));
  const auto given_f = c.observable("f"), given_g = c.observable("g");
  const bool fixed = given_f && given_g && given_f->trig && given_g->trig;
  const int pairs = fixed ? 1 : c.scenario().instances;

  CsvTable tab{{"grid", "pair", "commutator", "adjointness"}, {}};
  double comm_fine = 0.0, adj_fine = 0.0, chern = 0.0;
  double comm_order = std::numeric_limits<double>::infinity(), adj_order = comm_order;
  bool any_order = false;
  for (int pair = 0; pair < pairs; ++pair) {
    const TrigPolynomial f = fixed ? *given_f->trig : TrigPolynomial::random(rng, 1, 3);
    const TrigPolynomial g = fixed ? *given_g->trig : TrigPolynomial::random(rng, 1, 3);
    const Observable mixed = f.observable() + g.observable();
    std::vector<double> comm, adj;
    for (int n : grids) {
      const PrequantumBundle b(k, n);
      chern = std::max(chern, std::abs(b.chern_number() - k));
      const Observable fg = f.bracket(g).observable();
      // Relative to the size of Q_{f,g} on the same batch.
      const KostantOperator qfg(fg, b);
      double scale = 0.0;
      for (const SmoothSection& sec : batch) {
        const DiscretizedSection s = sec.on(b);
        scale = std::max(scale, q_norm(b, qfg.apply(s)) / q_norm(b, s));
      }
      comm.push_back(commutator_residual(f.observable(), g.observable(), fg, b, batch) / std::max(scale, 1e-300));
      adj.push_back(hermiticity_defect(mixed, b, batch));
      tab.rows.push_back({double(n), double(pair), comm.back(), adj.back()});
    }
    comm_fine = std::max(comm_fine, comm.back());
    adj_fine = std::max(adj_fine, adj.back());
    if (const auto o = decay_order(grids, comm, 1e-11)) comm_order = std::min(comm_order, *o), any_order = true;
    if (const auto o = decay_order(grids, adj, 1e-11)) adj_order = std::min(adj_order, *o), any_order = true;
  }
  c.at_most("chern_defect", "curvature of the prequantum connection", chern, 1e-9);
  c.at_most("commutator_residual", "prequantum bracket homomorphism", comm_fine, 0.05);
  c.at_most("adjointness_residual", "skew-adjointness of prequantum operators", adj_fine, 0.1);
  if (grids.size() >= 2 && any_order) {
    c.at_least("commutator_order", "prequantum bracket homomorphism", comm_order, 1.8);
    c.at_least("adjointness_order", "skew-adjointness of prequantum operators", adj_order, 1.8);
  }
  c.table("residuals", std::move(tab));
}

void bs_census_suite(Context& c) {
  const bool sphere = c.scenario().model == "sphere";
  const LagrangianFibration fib = sphere ? LagrangianFibration::sphere_height() : LagrangianFibration::torus_momentum();
  const int n = c.loops({256}).front();
  CsvTable tab{{"level", "index", "base", "residual"}, {}};
  for (int k : c.levels(sphere ? std::vector<int>{2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12} : std::vector<int>{1, 2, 3, 4, 5})) {
    const BsCensus cen = bs_fibers(fib, k, n);
    const int expected = sphere ? k - 1 : k;
    const int first = sphere ? 1 : 0;
    double res = 0.0, base = 0.0;
    for (int i = 0; i < cen.smooth(); ++i) {
      res = std::max(res, cen.residuals[i]);
      base = std::max(base, std::abs(cen.base[i] - double(first + i) / k));
      tab.rows.push_back({double(k), double(first + i), cen.base[i], cen.residuals[i]});
    }
    const std::string key = pad(k) + ".";
    c.at_most(key + "count_defect", "Bohr-Sommerfeld fiber census", std::abs(cen.smooth() - expected), 0.0);
    c.at_most(key + "holonomy_residual", "Bohr-Sommerfeld fiber census", res, 1e-8);
    c.at_most(key + "base_defect", "Bohr-Sommerfeld fiber census", base, 1e-10);
    if (sphere)
      c.at_most(key + "dimension_defect", "fiber count against holomorphic dimension", std::abs(cen.total() - (k + 1)), 0.0);
  }
  c.table("fibers", std::move(tab));
}

void toeplitz_suite(Context& c) {
  const Observable f = c.observable("f") ? c.observable("f")->observable : Observable::coordinate(2);
  const Observable g = c.observable("g") ? c.observable("g")->observable : Observable::coordinate(0);
  std::vector<int> levels = c.levels({4, 8, 16, 32, 64});
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const Calibration cal = calibrate(f, g);
  const std::vector<double> res =
      levels.size() >= 2 ? asymptotic_residual(f, g, levels, cal)
                         : std::vector<double>{asymptotic_residual(f, g, {levels[0], levels[0] + 1}, cal).front()};
  CsvTable tab{{"k", "residual", "slope"}, {}};
  const double slope = levels.size() >= 2 ? loglog_slope(levels, res) : std::nan("");
  for (std::size_t i = 0; i < levels.size(); ++i) tab.rows.push_back({double(levels[i]), res[i], slope});
  c.at_most("residual", "Toeplitz bracket correspondence", res.back(), 1.0);
  if (levels.size() >= 2) c.at_most("slope", "Toeplitz bracket correspondence", slope, -0.8);

  auto& rng = c.rng();
  std::normal_distribution<double> gauss;
  double spread = 0.0;
  for (int k : levels) {
    if (k > 32) continue;
    const HolomorphicModel hm(k);
    std::vector<double> lam;
    for (int i = 0; i < 200; ++i) lam.push_back(rawnsley_lambda(Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized(), hm));
    double mean = 0, var = 0;
    for (double l : lam) mean += l / lam.size();
    for (double l : lam) var += (l - mean) * (l - mean) / lam.size();
    spread = std::max(spread, std::sqrt(var) / mean);
  }
  c.at_most("lambda_spread", "Rawnsley function on projective space", spread, 1e-6);
  c.table("residuals", std::move(tab));
}

ModuliOptions options(const Context& c) {
  ModuliOptions opt;
  opt.tau = c.scenario().tau;
  return opt;
}

void bracket_suite(Context& c) {
  const int k = std::max(2, c.level(3));
  const std::vector<int> loops = c.loops({64, 128, 256, 512});
  const auto given_f = c.observable("f"), given_g = c.observable("g");
  CsvTable tab{{"N", "instance", "error", "pointwise"}, {}};
  double fine = 0.0, pointwise = 0.0, order = std::numeric_limits<double>::infinity();
  bool any_order = false;
  for (int inst = 0; inst < c.scenario().instances; ++inst) {
    const auto seed = c.rng()();
    std::vector<double> err;
    for (int n : loops) {
      std::mt19937_64 r(seed);
      const ModuliPoint pt = random_sphere_point(r, k, n, options(c));
      const Observable f = given_f ? given_f->observable : Polynomial3::random(r, 3).observable();
      const Observable g = given_g ? given_g->observable : Polynomial3::random(r, 3).observable();
      const BracketCheck b = bracket_check(f, g, pt);
      err.push_back(std::abs(b.lhs - b.rhs));
      pointwise = std::max(pointwise, b.pointwise_residual);
      tab.rows.push_back({double(n), double(inst), err.back(), b.pointwise_residual});
    }
    fine = std::max(fine, err.back());
    if (const auto o = decay_order(loops, err)) order = std::min(order, *o), any_order = true;
  }
  c.at_most("error", "bracket of induced functions", fine, 1e-6);
  c.at_most("pointwise_residual", "restricted bracket identity", pointwise, 1e-8);
  if (loops.size() >= 2 && any_order) c.at_least("order", "bracket of induced functions", order, 1.8);
  c.table("convergence", std::move(tab));
}

void dynamical_suite(Context& c) {
  const int k = std::max(2, c.level(3));
  const int n = c.loops({512}).back();
  const auto given_f = c.observable("f");
  double worst = 0.0;
  for (int inst = 0; inst < c.scenario().instances; ++inst) {
    const ModuliPoint pt = random_sphere_point(c.rng(), k, n, options(c));
    const Observable f = given_f ? given_f->observable : Polynomial3::random(c.rng(), 3).observable();
    worst = std::max(worst, relative(hamiltonian_field(f, pt), dynamical_field(f, pt) * (2.0 * pt.tau())));
  }
  c.at_most("relative_error", "dynamical correspondence", worst, 1e-6);
}

void flow_suite(Context& c) {
  const int k = std::max(2, c.level(3));
  const int n = c.loops({128}).front();
  const Observable f = c.observable("f") ? c.observable("f")->observable : Observable::coordinate(0);
  const LagrangianLoop loop = LagrangianLoop::latitude(PhaseModel::sphere(k), 1.0 - 2.0 / k, n);
  const ModuliPoint pt = ModuliPoint::normalized(loop, HalfWeight::uniform(n, 1.0), 2.0, options(c));
  const ModuliPoint moved = isodrastic_flow(f, pt, c.scenario().flow_time, c.scenario().flow_steps);
  const double hol =
      std::abs(std::remainder(k * (holonomy_class(moved.loop()).action - holonomy_class(pt.loop()).action), 1.0));
  c.at_most("holonomy_drift", "isodrastic deformations keep the BS condition", hol, 1e-6);
  c.at_most("volume_drift", "isodrastic deformations keep the volume", std::abs(moved.volume() - pt.volume()), 1e-6);
  c.at_most("induced_drift", "induced function is conserved by its own flow",
            std::abs(induced_function(f, moved) - induced_function(f, pt)), 1e-6);
}

void level_suite(Context& c) {
  const int n = c.loops({128}).front();
  const ModuliPoint pt(LagrangianLoop::torus_fiber(PhaseModel::torus(1), 0.0, n), random_half_weight(c.rng(), n, 2.0),
                       options(c));
  const auto given_f = c.observable("f"), given_g = c.observable("g");
  const Observable f = given_f ? given_f->observable : TrigPolynomial::random(c.rng()).observable();
  const Observable g = given_g ? given_g->observable : TrigPolynomial::random(c.rng()).observable();
  CsvTable tab{{"k", "bracket_k", "bracket_1", "ratio"}, {}};
  double worst = 0.0;
  for (int k : c.levels({2, 4, 8})) {
    const LevelRescale r = level_rescale(f, g, pt, k);
    const double ratio = r.bracket_k / r.bracket_1;
    worst = std::max(worst, std::abs(ratio - 1.0 / k));
    tab.rows.push_back({double(k), r.bracket_k, r.bracket_1, ratio});
  }
  c.at_most("ratio_error", "level rescaling of the moduli bracket", worst, 1e-6);
  c.table("ratios", std::move(tab));
}

void surjectivity_suite(Context& c) {
  const int k = std::max(2, c.level(3));
  const int n = c.loops({512}).back();
  double worst = 0.0;
  for (int inst = 0; inst < c.scenario().instances; ++inst) {
    const ModuliPoint pt = random_sphere_point(c.rng(), k, n, options(c));
    const ModuliTangent target = random_tangent(c.rng(), pt);
    worst = std::max(worst, relative(dynamical_field(surjectivity_witness(target, pt), pt), target));
  }
  c.at_most("relative_error", "every tangent vector is a dynamical field", worst, 1e-4);
}

void bpu_suite(Context& c) {
  const int n = c.loops({256}).front();
  CsvTable tab{{"level", "fiber", "base", "monomial", "overlap", "critical_residual", "eigen_residual"}, {}};
  json fibers = json::object();
  for (int k : c.levels({3, 4, 5, 6, 7, 8, 9, 10, 11, 12})) {
    if (k < 2) throw Error(ErrorKind::Level, "bpu suite needs levels >= 2");
    const auto imgs = fiber_images(k, n);
    double overlap = 0.0, crit = 0.0, eig = 0.0, mismatch = 0.0;
    for (const auto& img : imgs) {
      overlap = std::max(overlap, 1.0 - img.overlap);
      crit = std::max(crit, img.critical_residual);
      eig = std::max(eig, img.eigen_residual);
      mismatch += img.monomial != img.index;
      tab.rows.push_back({double(k), double(img.index), img.base, double(img.monomial), img.overlap,
                          img.critical_residual, img.eigen_residual});
    }
    fibers[pad(k)] = to_json(imgs);
    const std::string key = pad(k) + ".";
    c.at_most(key + "overlap_defect", "BS fibers map to monomial rays", overlap, 1e-8);
    c.at_most(key + "critical_residual", "BS fibers are critical points", crit, 1e-8);
    c.at_most(key + "eigen_residual", "critical points map to eigenstates", eig, 1e-8);
    c.at_most(key + "monomial_mismatch", "BS fibers map to monomial rays", mismatch, 0.0);
  }
  c.extras()["bpu_fibers"] = fibers;
  c.table("fibers", std::move(tab));
}

using SuiteFn = void (*)(Context&);

SuiteFn suite_function(const std::string& name) {
  static const std::map<std::string, SuiteFn> table{
      {"bpu", bpu_suite},           {"bracket", bracket_suite},       {"bs_census", bs_census_suite},
      {"dynamical", dynamical_suite}, {"flow", flow_suite},           {"level", level_suite},
      {"prequantum", prequantum_suite}, {"projective", projective_suite}, {"surjectivity", surjectivity_suite},
      {"toeplitz", toeplitz_suite}};
  return table.at(name);
}

}  // namespace

Report run_scenario(const Scenario& s) {
  const std::vector<std::string>& suites = s.suites;
  std::vector<SuiteOutput> outs(suites.size());
  std::vector<std::string> errs(suites.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < suites.size();) {
      try {
        Context ctx(s, suites[i], outs[i]);
        suite_function(suites[i])(ctx);
      } catch (const std::exception& e) {
        errs[i] = suites[i] + ": " + e.what();
      }
    }
  };
  const int jobs = std::clamp<int>(s.jobs, 1, std::max<int>(1, static_cast<int>(suites.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  Report r;
  r.scenario = s.name;
  r.seed = s.seed;
  r.tol_scale = s.tol_scale;
  for (std::size_t i = 0; i < suites.size(); ++i) {
    for (auto& c : outs[i].checks) r.checks.push_back(std::move(c));
    for (auto& t : outs[i].tables) r.tables.push_back(std::move(t));
    for (auto& [key, v] : outs[i].extras.items()) r.extras[key] = v;
    if (!errs[i].empty()) r.errors.push_back(errs[i]);
  }
  std::sort(r.checks.begin(), r.checks.end(), [](const Check& a, const Check& b) { return a.name < b.name; });
  std::sort(r.tables.begin(), r.tables.end(), [](const NamedTable& a, const NamedTable& b) { return a.name < b.name; });
  std::sort(r.errors.begin(), r.errors.end());
  return r;
}

json to_json(const Report& r) {
  json checks = json::array();
  for (const Check& c : r.checks)
    checks.push_back({{"name", c.name},
                      {"anchor", c.anchor},
                      {"measured", c.measured},
                      {"tolerance", c.tolerance},
                      {"bound", c.bound == Bound::AtMost ? "max" : "min"},
                      {"pass", c.pass}});
  json tables = json::array();
  for (const NamedTable& t : r.tables) tables.push_back(t.name + ".csv");
  json out{{"scenario", r.scenario}, {"seed", r.seed},     {"tol_scale", r.tol_scale}, {"passed", r.ok()},
           {"checks", checks},       {"tables", tables},   {"errors", r.errors}};
  for (const auto& [key, v] : r.extras.items()) out[key] = v;
  return out;
}

std::vector<std::filesystem::path> write_report(const Report& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const auto report = dir / "report.json";
  std::ofstream(report) << to_json(r).dump(2) << '\n';
  written.push_back(report);
  for (const NamedTable& t : r.tables) {
    const auto path = dir / (t.name + ".csv");
    std::ofstream os(path);
    write_csv(os, t.table);
    written.push_back(path);
  }
  return written;
}

Scenario with_parameter(const Scenario& s, const std::string& parameter, double value) {
  Scenario out = s;
  auto as_positive_int = [&] {
    if (!(value > 0) || value != std::floor(value)) throw config(parameter + " values must be positive integers");
    return static_cast<int>(value);
  };
  if (parameter == "k") out.levels = {as_positive_int()};
  else if (parameter == "N") out.loops = {as_positive_int()};
  else if (parameter == "grid") out.grids = {as_positive_int()};
  else if (parameter == "tau") {
    if (!(value > 0)) throw config("tau values must be positive");
    out.tau = value;
  } else
    throw config("unknown sweep parameter '" + parameter + "' (expected k, N, grid or tau)");
  return out;
}

CsvTable sweep(const Scenario& s, const std::string& parameter, const std::vector<double>& values) {
  std::vector<Scenario> runs;
  for (double v : values) runs.push_back(with_parameter(s, parameter, v));
  std::vector<Report> reports;
  for (const Scenario& r : runs) reports.push_back(run_scenario(r));

  std::set<std::string> names;
  for (const Report& r : reports)
    for (const Check& c : r.checks) names.insert(c.name);
  CsvTable t{{parameter, "passed", "failed"}, {}};
  t.header.insert(t.header.end(), names.begin(), names.end());
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::map<std::string, double> measured;
    double passed = 0, failed = static_cast<double>(reports[i].errors.size());
    for (const Check& c : reports[i].checks) {
      measured[c.name] = c.measured;
      (c.pass ? passed : failed) += 1;
    }
    std::vector<double> row{values[i], passed, failed};
    for (const auto& n : names) row.push_back(measured.count(n) ? measured[n] : std::nan(""));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace gq
