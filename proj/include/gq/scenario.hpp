#ifndef GQ_SCENARIO_HPP
#define GQ_SCENARIO_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gq/io.hpp"

namespace gq {

/// Named observable preset together with its trigonometric form when it has one.
struct ObservableSpec {
  Observable observable;
  std::optional<TrigPolynomial> trig;
};

/// Accepts "x", "y", "z", "height" or an object {"preset": ...}; throws Config otherwise.
ObservableSpec resolve_observable(const nlohmann::json& j);

struct Scenario {
  std::string name = "scenario";
  std::string model = "sphere";      // sphere | torus
  std::vector<int> levels;           // empty: suite default
  std::vector<int> grids;            // prequantum grid sizes
  std::vector<int> loops;            // loop resolutions N
  double tau = 0.5;
  int instances = 4;
  unsigned long long seed = 1;
  double flow_time = 0.5;
  int flow_steps = 1000;
  std::map<std::string, nlohmann::json> observables;
  std::vector<std::string> suites;
  std::map<std::string, double> tolerances;  // overrides by check key
  double tol_scale = 1.0;
  int jobs = 1;
};

const std::vector<std::string>& suite_names();

/// Throws Config on unknown keys, unknown suites, non-positive resolutions or
/// unresolvable observables.
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);

enum class Bound { AtMost, AtLeast };

struct Check {
  std::string name;
  std::string anchor;
  double measured;
  double tolerance;
  Bound bound;
  bool pass;
};

struct NamedTable {
  std::string name;
  CsvTable table;
};

struct Report {
  std::string scenario;
  unsigned long long seed = 0;
  double tol_scale = 1.0;
  std::vector<Check> checks;       // sorted by name
  std::vector<NamedTable> tables;  // sorted by name
  std::vector<std::string> errors; // suite failures, sorted
  nlohmann::json extras = nlohmann::json::object();
  bool ok() const;
};

/// Runs the selected suites, up to `jobs` at a time; the merged report does not
/// depend on the job count.
Report run_scenario(const Scenario& s);

nlohmann::json to_json(const Report& r);
/// report.json plus one CSV per table; returns the written paths.
std::vector<std::filesystem::path> write_report(const Report& r, const std::filesystem::path& dir);

/// Scenario with one parameter (k, N, grid or tau) pinned to a single value.
Scenario with_parameter(const Scenario& s, const std::string& parameter, double value);

/// One row per value: value, passed, failed, then the measured value of every check.
CsvTable sweep(const Scenario& s, const std::string& parameter, const std::vector<double>& values);

}  // namespace gq

#endif
