#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "gq/scenario.hpp"

using namespace gq;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

const fs::path kScenarios = GQ_SCENARIO_DIR;

const Check& find(const Report& r, const std::string& name) {
  for (const Check& c : r.checks)
    if (c.name == name) return c;
  FAIL("missing check " << name);
  throw std::logic_error("unreachable");
}

const CsvTable& table(const Report& r, const std::string& name) {
  for (const NamedTable& t : r.tables)
    if (t.name == name) return t.table;
  FAIL("missing table " << name);
  throw std::logic_error("unreachable");
}

std::size_t column(const CsvTable& t, const std::string& name) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  REQUIRE(it != t.header.end());
  return static_cast<std::size_t>(it - t.header.begin());
}

ErrorKind parse_kind(const json& j) {
  try {
    parse_scenario(j);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Domain;
}

fs::path temp_dir(const std::string& tag) {
  const fs::path d = fs::temp_directory_path() / ("gqlab-test-" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run_tool(const std::string& args) {
  const int status = std::system((std::string(GQ_TOOL) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("scenario parsing") {
  const Scenario s = load_scenario(kScenarios / "sphere-k3.json");
  CHECK(s.name == "sphere-k3");
  CHECK(s.levels == std::vector<int>{3});
  CHECK(s.suites == std::vector<std::string>{"bs_census", "bpu"});

  CHECK(parse_kind(json{{"colour", 1}}) == ErrorKind::Config);
  CHECK(parse_kind(json{{"suites", {"nope"}}}) == ErrorKind::Config);
  CHECK(parse_kind(json{{"loops", {64, -1}}}) == ErrorKind::Config);
  CHECK(parse_kind(json{{"levels", {0}}}) == ErrorKind::Config);
  CHECK(parse_kind(json{{"model", "klein"}}) == ErrorKind::Config);
  CHECK(parse_kind(json{{"observables", {{"f", "w"}}}}) == ErrorKind::Config);
  CHECK(parse_kind(json{{"observables", {{"f", {{"preset", "trig"}, {"terms", {{1, 0.5, 1, 0}}}}}}}}) ==
        ErrorKind::Config);
  CHECK(parse_kind(json::array()) == ErrorKind::Config);
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), Error);
}

TEST_CASE("observable presets") {
  const Vec3 x(0.36, 0.48, 0.8);
  CHECK(resolve_observable("height").observable(x) == 0.8);
  CHECK(resolve_observable(json{{"preset", "coordinate"}, {"axis", 1}}).observable(x) == 0.48);
  CHECK(resolve_observable(json{{"preset", "linear"}, {"vector", {1, 2, 3}}}).observable(x) ==
        doctest::Approx(0.36 + 0.96 + 2.4));
  CHECK(resolve_observable(json{{"preset", "constant"}, {"value", -2.5}}).observable(x) == -2.5);
  const ObservableSpec poly = resolve_observable(json{{"preset", "polynomial"}, {"terms", {{2, 0, 1, 3.0}}}});
  CHECK(poly.observable(x) == doctest::Approx(3.0 * 0.36 * 0.36 * 0.8));
  CHECK_FALSE(poly.trig);

  const ObservableSpec t = resolve_observable(json{{"preset", "trig"}, {"terms", {{1, 0, 0.0, 2.0}}}});
  REQUIRE(t.trig);
  CHECK(t.observable(Vec3(0.125, 0.3, 0.0)) == doctest::Approx(2.0 * std::sin(2 * kPi * 0.125)));
  CHECK_THROWS_AS(resolve_observable(json{{"preset", "coordinate"}, {"axis", 3}}), Error);
}

TEST_CASE("empty suite list") {
  const Report r = run_scenario(parse_scenario(json{{"suites", json::array()}}));
  CHECK(r.checks.empty());
  CHECK(r.tables.empty());
  CHECK(r.ok());
}

TEST_CASE("bundled sphere-k3 scenario") {
  const Report r = run_scenario(load_scenario(kScenarios / "sphere-k3.json"));
  CHECK(r.ok());
  const CsvTable& fibers = table(r, "bs_census_fibers");
  REQUIRE(fibers.rows.size() == 2);
  const std::size_t base = column(fibers, "base");
  CHECK(fibers.rows[0][base] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(fibers.rows[1][base] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  const json& img = r.extras.at("bpu_fibers").at("k03");
  REQUIRE(img.size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(img[i]["monomial"].get<int>() == i + 1);
    CHECK(img[i]["overlap"].get<double>() >= 1.0 - 1e-8);
    CHECK(img[i]["eigen_residual"].get<double>() <= 1e-8);
  }
  for (const Check& c : r.checks) CHECK_FALSE(c.anchor.empty());
}

TEST_CASE("bundled bracket-sweep scenario records the decay order") {
  const Report r = run_scenario(load_scenario(kScenarios / "bracket-sweep.json"));
  CHECK(r.ok());
  CHECK(find(r, "bracket.order").measured >= 2.0);
  CHECK(find(r, "bracket.error").measured <= 1e-6);
}

TEST_CASE("reports are deterministic and independent of the job count") {
  Scenario s = parse_scenario(json{{"seed", 42}, {"instances", 2}, {"suites", {"projective", "level", "surjectivity"}},
                                   {"loops", {128}}});
  const std::string a = to_json(run_scenario(s)).dump();
  s.jobs = 3;
  const std::string b = to_json(run_scenario(s)).dump();
  CHECK(a == b);
  s.seed = 43;
  CHECK(to_json(run_scenario(s)).dump() != a);

  // Check names are sorted.
  const Report r = run_scenario(s);
  for (std::size_t i = 1; i < r.checks.size(); ++i) CHECK(r.checks[i - 1].name < r.checks[i].name);
}

TEST_CASE("tolerance scale and overrides") {
  Scenario s = parse_scenario(json{{"suites", {"projective"}}, {"instances", 1}});
  s.tol_scale = 0.0;
  const Report strict = run_scenario(s);
  CHECK_FALSE(find(strict, "projective.bracket_symbol").pass);

  const Scenario o = parse_scenario(
      json{{"suites", {"projective"}}, {"instances", 1}, {"tolerances", {{"projective.geodesic_probability", 0.5}}}});
  CHECK(find(run_scenario(o), "projective.geodesic_probability").tolerance == 0.5);
}

TEST_CASE("sweep over toeplitz levels") {
  const Scenario s = load_scenario(kScenarios / "toeplitz-levels.json");
  const std::vector<double> ks{4, 8, 16, 32};
  const CsvTable t = sweep(s, "k", ks);
  REQUIRE(t.rows.size() == 4);
  const std::size_t col = column(t, "toeplitz.residual");
  for (std::size_t i = 0; i < 4; ++i) {
    const double k = ks[i];
    CHECK(t.rows[i][0] == k);
    // Closed form of the calibrated residual for the height against x.
    CHECK(t.rows[i][col] == doctest::Approx(8 * kPi * k / ((k + 2) * (k + 2))).epsilon(1e-8));
    if (i > 0) CHECK(t.rows[i][col] < t.rows[i - 1][col]);
  }
}

TEST_CASE("sweep over loop resolution") {
  const Scenario s = load_scenario(kScenarios / "bracket-sweep.json");
  const CsvTable t = sweep(s, "N", {64, 128, 256});
  REQUIRE(t.rows.size() == 3);
  const std::size_t col = column(t, "bracket.error");
  CHECK(std::log2(t.rows[0][col] / t.rows[1][col]) >= 2.0);
  CHECK(std::log2(t.rows[1][col] / t.rows[2][col]) >= 2.0);

  // A single value reproduces the plain run.
  const CsvTable one = sweep(s, "N", {128});
  const Report r = run_scenario(with_parameter(s, "N", 128));
  REQUIRE(one.rows.size() == 1);
  CHECK(one.rows[0][column(one, "bracket.error")] == find(r, "bracket.error").measured);
  CHECK(one.rows[0][column(one, "bracket.error")] == t.rows[1][col]);

  CHECK_THROWS_AS(sweep(s, "spin", {1}), Error);
  CHECK_THROWS_AS(with_parameter(s, "k", 2.5), Error);
  CHECK(with_parameter(s, "tau", 0.25).tau == 0.25);
}

TEST_CASE("report files") {
  const fs::path dir = temp_dir("files");
  const auto written = write_report(run_scenario(load_scenario(kScenarios / "sphere-k3.json")), dir);
  CHECK(written.size() == 3);
  std::ifstream in(dir / "report.json");
  const json j = json::parse(in);
  CHECK(j["passed"].get<bool>());
  CHECK(j["scenario"] == "sphere-k3");
  for (const auto& c : j["checks"]) {
    CHECK(c.contains("anchor"));
    CHECK(c.contains("measured"));
    CHECK(c.contains("tolerance"));
    CHECK(c.contains("pass"));
  }
  std::ifstream csv(dir / "bs_census_fibers.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "level,index,base,residual");
}

TEST_CASE("command line exit codes") {
  const fs::path dir = temp_dir("cli");
  CHECK(run_tool("run " + (kScenarios / "sphere-k3.json").string() + " --out " + (dir / "a").string()) == 0);
  CHECK(fs::exists(dir / "a" / "report.json"));

  std::ofstream(dir / "broken.json") << "{ \"suites\": [";
  CHECK(run_tool("run " + (dir / "broken.json").string()) == 2);
  std::ofstream(dir / "unknown.json") << R"({"suites": ["warp"]})";
  CHECK(run_tool("run " + (dir / "unknown.json").string()) == 2);
  CHECK(run_tool("frobnicate") == 2);

  std::ofstream(dir / "strict.json") << R"({"suites": ["projective"], "instances": 1})";
  CHECK(run_tool("run " + (dir / "strict.json").string() + " --out " + (dir / "b").string()) == 0);
  CHECK(run_tool("run " + (dir / "strict.json").string() + " --tol-scale 1e-30 --out " + (dir / "c").string()) == 1);

  std::ofstream(dir / "empty.json") << R"({"suites": []})";
  CHECK(run_tool("run " + (dir / "empty.json").string() + " --out " + (dir / "d").string()) == 0);

  const std::string sweep_args = "sweep k 4,8 " + (kScenarios / "toeplitz-levels.json").string() + " --out " + (dir / "e").string();
  CHECK(run_tool(sweep_args) == 0);
  std::ifstream csv(dir / "e" / "sweep.csv");
  std::string line;
  int rows = -1;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 2);
  CHECK(run_tool("sweep spin 1 " + (kScenarios / "toeplitz-levels.json").string()) == 2);
  CHECK(run_tool("sweep k 4,x " + (kScenarios / "toeplitz-levels.json").string()) == 2);

  // Same seed, byte-identical report.
  const std::string seeded = "run " + (dir / "strict.json").string() + " --seed 9 --out ";
  REQUIRE(run_tool(seeded + (dir / "f1").string()) == 0);
  REQUIRE(run_tool(seeded + (dir / "f2").string() + " --jobs 2") == 0);
  std::ifstream a(dir / "f1" / "report.json"), b(dir / "f2" / "report.json");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
}
