// gqlab: scenario runner.
//   gqlab run <file> [--out DIR] [--seed INT] [--tol-scale FLOAT] [--jobs INT]
//   gqlab sweep <param> <v1,v2,...> <file> [same options]
// Exit codes: 0 all checks pass, 1 a check failed, 2 usage, parse or config error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "gq/scenario.hpp"

namespace {

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw gq::Error(gq::ErrorKind::Config, "bad sweep value '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw gq::Error(gq::ErrorKind::Config, "empty sweep value list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometric quantization laboratory: runs verification scenarios"};
  app.require_subcommand(1);

  std::string out_dir = "gqlab-out";
  std::optional<unsigned long long> seed;
  double tol_scale = 1.0;
  int jobs = 1;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "override the scenario seed");
    sub->add_option("--tol-scale", tol_scale, "multiplies every upper-bound tolerance")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--jobs", jobs, "suites run concurrently")->check(CLI::PositiveNumber)->capture_default_str();
  };

  std::string file, parameter, values;
  CLI::App* run = app.add_subcommand("run", "run a scenario and write report.json plus CSV tables");
  run->add_option("file", file, "scenario JSON")->required();
  common(run);

  CLI::App* sw = app.add_subcommand("sweep", "re-run a scenario per parameter value and write sweep.csv");
  sw->add_option("parameter", parameter, "k, N, grid or tau")->required();
  sw->add_option("values", values, "comma-separated values")->required();
  sw->add_option("file", file, "scenario JSON")->required();
  common(sw);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    gq::Scenario s = gq::load_scenario(file);
    if (seed) s.seed = *seed;
    s.tol_scale = tol_scale;
    s.jobs = jobs;

    if (*run) {
      const gq::Report r = gq::run_scenario(s);
      gq::write_report(r, out_dir);
      for (const auto& c : r.checks)
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " measured=" << gq::format_number(c.measured)
                  << (c.bound == gq::Bound::AtMost ? " <= " : " >= ") << gq::format_number(c.tolerance) << '\n';
      for (const auto& e : r.errors) std::cout << "ERROR " << e << '\n';
      std::cout << r.checks.size() << " checks, " << (r.ok() ? "all passed" : "failures present") << '\n';
      return r.ok() ? 0 : 1;
    }

    const std::vector<double> vals = parse_values(values);
    const gq::CsvTable t = gq::sweep(s, parameter, vals);
    std::filesystem::create_directories(out_dir);
    std::ofstream os(std::filesystem::path(out_dir) / "sweep.csv");
    gq::write_csv(os, t);
    gq::write_csv(std::cout, t);
    return 0;
  } catch (const gq::Error& e) {
    std::cerr << "gqlab: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "gqlab: " << e.what() << '\n';
    return 2;
  }
}
