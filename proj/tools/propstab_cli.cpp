// Command-line front end: certify, simulate, export-nyquist, threshold, impervious.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "propstab/analyzer.hpp"
#include "propstab/error.hpp"
#include "propstab/graph.hpp"
#include "propstab/io.hpp"
#include "propstab/simulator.hpp"

namespace {

using propstab::io::json;
namespace io = propstab::io;

constexpr const char* kRefutationNote =
    "simulation can only refute propagation stability; confirmation rests with the frequency-domain certificate";

std::vector<propstab::Vertex> parse_region(const std::string& text, std::size_t N) {
  std::vector<propstab::Vertex> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    long long id = 0;
    try {
      id = std::stoll(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || id < 1 || static_cast<std::size_t>(id) > N) {
      throw propstab::Error(propstab::ErrorCode::InvalidVertex, "bad region entry '" + item + "'");
    }
    out.push_back(static_cast<propstab::Vertex>(id - 1));
  }
  return out;
}

void write_csv(const std::string& path, const propstab::SimulationResult& result) {
  std::ofstream out(path);
  if (!out) throw propstab::Error(propstab::ErrorCode::InvalidArgument, "cannot write " + path);
  out << "t";
  for (std::size_t v = 0; v < result.vertices; ++v) {
    for (std::size_t c = 0; c < result.channels; ++c) {
      out << ",y" << v + 1;
      if (result.channels > 1) out << "_" << c + 1;
    }
  }
  out << "\n";
  for (std::size_t k = 0; k < result.samples(); ++k) {
    out << io::format_double(result.time(k));
    for (Eigen::Index r = 0; r < result.outputs.rows(); ++r) {
      out << "," << io::format_double(result.outputs(r, static_cast<Eigen::Index>(k)));
    }
    out << "\n";
  }
}

int run_certify(const std::string& path, const std::string& method) {
  auto spec = io::parse_network_file(path);
  if (method == "grid") spec.analysis.gain.method = propstab::GainMethod::Grid;
  else if (method == "bisect") spec.analysis.gain.method = propstab::GainMethod::Bisect;
  const auto report = propstab::certify(spec.model, spec.analysis);
  json out = io::report_to_json(report);
  out["seed"] = spec.simulation.seed;
  std::cout << out.dump(2) << "\n";
  return io::exit_code(report.status);
}

struct SimulateArgs {
  std::string path;
  int source = 0;
  double horizon = 0.0;
  double dt = 0.0;
  double rel_tol = -1.0;
  bool check_cutsets = false;
  bool check_paths = false;
  std::string out_csv;
};

int run_simulate(const SimulateArgs& args) {
  auto spec = io::parse_network_file(args.path);
  if (!spec.disturbance) {
    throw propstab::Error(propstab::ErrorCode::SchemaError, "simulate needs a 'disturbance' entry in the network file");
  }
  const std::size_t N = spec.model.size();
  propstab::Vertex source = 0;
  if (args.source > 0) {
    if (static_cast<std::size_t>(args.source) > N) {
      throw propstab::Error(propstab::ErrorCode::InvalidVertex, "--source outside 1.." + std::to_string(N));
    }
    source = static_cast<propstab::Vertex>(args.source - 1);
  } else if (spec.model.source()) {
    source = *spec.model.source();
  } else {
    throw propstab::Error(propstab::ErrorCode::SchemaError, "no source given (use --source or the 'source' field)");
  }
  const double horizon = args.horizon > 0.0 ? args.horizon : spec.simulation.horizon;
  const double dt = args.dt > 0.0 ? args.dt : spec.simulation.dt;
  const double rel_tol = args.rel_tol >= 0.0 ? args.rel_tol : spec.simulation.rel_tol;

  const auto result = propstab::simulate(spec.model, source, *spec.disturbance, horizon, dt);
  json out;
  out["source"] = source + 1;
  out["horizon"] = result.horizon;
  out["dt"] = result.dt;
  out["samples"] = result.samples();
  out["rel_tol"] = rel_tol;
  out["seed"] = spec.simulation.seed;
  out["energies"] = result.energies;

  const auto profile = propstab::distance_energy_profile(result, rel_tol);
  json unreachable = json::array();
  for (auto v : profile.unreachable) unreachable.push_back(v + 1);
  out["distance_profile"] = {{"energy_by_distance", profile.energy_by_distance},
                             {"unreachable", unreachable},
                             {"non_increasing", profile.non_increasing}};

  if (args.check_cutsets) {
    const auto cutsets = propstab::enumerate_separating_cutsets(spec.model.graph(), source);
    const auto horizons = propstab::default_horizons(result);
    const auto violations = propstab::check_majorization(result, cutsets, rel_tol, horizons);
    json vs = json::array();
    for (const auto& v : violations) {
      json cut = json::array();
      for (auto c : cutsets[v.cutset].cut) cut.push_back(c + 1);
      vs.push_back(json{{"cutset", cut},
                        {"far_vertex", v.far_vertex + 1},
                        {"horizon", v.horizon},
                        {"far_energy", v.far_energy},
                        {"cut_energy", v.cut_energy}});
    }
    json hs = json::array();
    for (auto h : horizons) hs.push_back(result.time(h));
    out["cutsets"] = {{"checked", cutsets.size()}, {"horizons", hs}, {"violations", vs}};
  }
  if (args.check_paths) {
    json ps = json::array();
    bool all = true;
    for (const auto& p : propstab::check_paths(result, rel_tol)) {
      ps.push_back(json{{"vertex", p.vertex + 1}, {"monotone_path", p.monotone}});
      all = all && p.monotone;
    }
    out["paths"] = {{"vertices", ps}, {"all_monotone", all}};
  }
  out["note"] = kRefutationNote;
  if (!args.out_csv.empty()) write_csv(args.out_csv, result);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_export_nyquist(const std::string& path, std::size_t points) {
  const auto spec = io::parse_network_file(path);
  const auto& ss = spec.model.subsystem();
  if (!ss.is_siso()) {
    throw propstab::Error(propstab::ErrorCode::NotSISO, "Nyquist export needs a SISO subsystem");
  }
  const double degree = propstab::max_weighted_in_degree(spec.model.graph());
  double rho = propstab::spectral_radius(ss.A());
  if (rho <= 0.0) rho = 1.0;
  const double span = spec.analysis.gain.grid_span;
  const auto grid = propstab::FrequencyGrid::log_spaced(rho / span, rho * span, points);

  std::cout << "# threshold=";
  if (degree > 0.0) std::cout << io::format_double(-1.0 / (2.0 * spec.model.alpha() * degree));
  else std::cout << "-inf";
  std::cout << "\n# alpha=" << io::format_double(spec.model.alpha())
            << "\n# max_weighted_in_degree=" << io::format_double(degree) << "\n";
  std::cout << "omega,re,im\n";
  for (double w : grid.points) {
    propstab::CMatrix t;
    try {
      t = propstab::eval_transfer(ss, propstab::Complex(0.0, w));
    } catch (const propstab::Error&) {
      continue;  // exactly on an imaginary-axis pole
    }
    std::cout << io::format_double(w) << "," << io::format_double(t(0, 0).real()) << ","
              << io::format_double(t(0, 0).imag()) << "\n";
  }
  return 0;
}

int run_threshold(const std::string& path) {
  const auto spec = io::parse_network_file(path);
  const auto t = propstab::planar_damping_threshold(spec.model);
  json out{{"d", t.d},
           {"d_star", t.d_star},
           {"pass", t.pass},
           {"alpha", spec.model.alpha()},
           {"max_weighted_in_degree", propstab::max_weighted_in_degree(spec.model.graph())}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_impervious(const std::string& path, const std::string& region_text) {
  const auto spec = io::parse_network_file(path);
  const auto region = parse_region(region_text, spec.model.size());
  const auto report = propstab::certify_impervious(spec.model, region, spec.analysis);
  std::cout << io::impervious_to_json(report).dump(2) << "\n";
  return report.pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Disturbance-propagation stability certificates for LTI synchronization networks"};
  app.require_subcommand(1);

  std::string path;
  std::string method;
  auto* certify = app.add_subcommand("certify", "Certify propagation stability; prints a JSON report");
  certify->add_option("spec", path, "Network description (JSON)")->required();
  certify->add_option("--method", method, "Sup-gain method")->check(CLI::IsMember({"bisect", "grid"}));

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a single-source disturbance and check energies");
  simulate->add_option("spec", sim.path, "Network description (JSON)")->required();
  simulate->add_option("--source", sim.source, "Source vertex (1-based)");
  simulate->add_option("--horizon", sim.horizon, "Simulation horizon T");
  simulate->add_option("--dt", sim.dt, "Sample step");
  simulate->add_option("--rel-tol", sim.rel_tol, "Relative tolerance of the majorization checks");
  simulate->add_flag("--check-cutsets", sim.check_cutsets, "Check every enumerated separating cutset");
  simulate->add_flag("--check-paths", sim.check_paths, "Check the monotone-path form");
  simulate->add_option("--out-csv", sim.out_csv, "Write trajectories to this CSV file");

  std::size_t points = 500;
  auto* nyquist = app.add_subcommand("export-nyquist", "CSV of the subsystem frequency response");
  nyquist->add_option("spec", path, "Network description (JSON)")->required();
  nyquist->add_option("--points", points, "Number of log-spaced frequencies")->check(CLI::Range(2, 10000000));

  auto* threshold = app.add_subcommand("threshold", "Damping threshold for the planar subsystem template");
  threshold->add_option("spec", path, "Network description (JSON)")->required();

  std::string region;
  auto* impervious = app.add_subcommand("impervious", "Certify propagation imperviousness of a region");
  impervious->add_option("spec", path, "Network description (JSON)")->required();
  impervious->add_option("--region", region, "Comma-separated 1-based vertex ids")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*certify) return run_certify(path, method);
    if (*simulate) return run_simulate(sim);
    if (*nyquist) return run_export_nyquist(path, points);
    if (*threshold) return run_threshold(path);
    if (*impervious) return run_impervious(path, region);
  } catch (const propstab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
