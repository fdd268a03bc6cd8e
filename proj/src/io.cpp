#include "propstab/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include "propstab/error.hpp"

namespace propstab::io {

namespace {

[[noreturn]] void schema_error(const std::string& msg) { throw Error(ErrorCode::SchemaError, msg); }

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) schema_error(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) schema_error("unknown field '" + key + "' in " + where);
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error("missing field '" + std::string(key) + "' in " + where);
  return *it;
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) schema_error("field '" + field + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) schema_error("field '" + field + "' must be finite");
  return v;
}

std::size_t vertex_id(const json& j, const std::string& field, std::size_t N) {
  if (!j.is_number_integer()) schema_error("field '" + field + "' must be an integer vertex id");
  const auto id = j.get<long long>();
  if (id < 1 || static_cast<std::size_t>(id) > N) {
    schema_error("field '" + field + "' = " + std::to_string(id) + " outside 1.." + std::to_string(N));
  }
  return static_cast<std::size_t>(id - 1);
}

/// Scalar or per-channel array.
Vector channel_vector(const json& j, const std::string& field) {
  if (j.is_number()) return Vector::Constant(1, number(j, field));
  if (!j.is_array() || j.empty()) schema_error("field '" + field + "' must be a number or non-empty array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = number(j[k], field);
  return v;
}

json vector_to_json(const Vector& v) {
  if (v.size() == 1) return v(0);
  json arr = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) arr.push_back(v(k));
  return arr;
}

std::string method_name(GainMethod m) { return m == GainMethod::Bisect ? "bisect" : "grid"; }

json complex_to_json(Complex z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

std::string status_name(LoopStatus s) {
  switch (s) {
    case LoopStatus::Pass: return "pass";
    case LoopStatus::Fail: return "fail";
    case LoopStatus::Exempt: return "exempt";
    case LoopStatus::Unstable: return "unstable_loop";
  }
  return "unknown";
}

json vertex_gains_to_json(const std::vector<VertexGain>& vertices) {
  json arr = json::array();
  for (const auto& vg : vertices) {
    json v{{"vertex", vg.vertex + 1}, {"k", vg.gain}, {"status", status_name(vg.status)}};
    if (vg.status == LoopStatus::Pass || vg.status == LoopStatus::Fail) {
      v["sup_gain"] = vg.sup.value;
      v["omega"] = vg.sup.omega;
      v["boundary"] = vg.boundary;
    }
    arr.push_back(std::move(v));
  }
  return arr;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) schema_error("matrix '" + field + "' must be a non-empty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) schema_error("matrix '" + field + "' rows must be non-empty arrays");
  const std::size_t cols = j[0].size();
  Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array()) schema_error("matrix '" + field + "' rows must be arrays");
    if (j[r].size() != cols) {
      throw Error(ErrorCode::DimensionMismatch, "matrix '" + field + "' is ragged at row " + std::to_string(r + 1));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], field);
    }
  }
  return M;
}

DisturbanceSignal disturbance_from_json(const json& j) {
  if (!j.is_object()) schema_error("disturbance must be an object");
  const json& kind = require(j, "kind", "disturbance");
  if (!kind.is_string()) schema_error("disturbance kind must be a string");
  const std::string k = kind.get<std::string>();
  if (k == "tone") {
    reject_unknown(j, "disturbance", {"kind", "amplitude", "omega", "phase"});
    Vector amp = channel_vector(require(j, "amplitude", "disturbance"), "amplitude");
    Vector phase = j.contains("phase") ? channel_vector(j["phase"], "phase") : Vector::Zero(amp.size());
    if (phase.size() == 1 && amp.size() > 1) phase = Vector::Constant(amp.size(), phase(0));
    return DisturbanceSignal(Tone{amp, number(require(j, "omega", "disturbance"), "omega"), phase});
  }
  if (k == "pulse") {
    reject_unknown(j, "disturbance", {"kind", "amplitude", "start", "width"});
    return DisturbanceSignal(Pulse{channel_vector(require(j, "amplitude", "disturbance"), "amplitude"),
                                   j.contains("start") ? number(j["start"], "start") : 0.0,
                                   number(require(j, "width", "disturbance"), "width")});
  }
  if (k == "chirp") {
    reject_unknown(j, "disturbance", {"kind", "amplitude", "omega0", "omega1", "duration"});
    return DisturbanceSignal(Chirp{channel_vector(require(j, "amplitude", "disturbance"), "amplitude"),
                                   number(require(j, "omega0", "disturbance"), "omega0"),
                                   number(require(j, "omega1", "disturbance"), "omega1"),
                                   number(require(j, "duration", "disturbance"), "duration")});
  }
  if (k == "samples") {
    reject_unknown(j, "disturbance", {"kind", "dt", "values"});
    // values: one row per sample, one entry per channel
    Matrix per_sample = matrix_from_json(require(j, "values", "disturbance"), "values");
    return DisturbanceSignal(Samples{per_sample.transpose(), number(require(j, "dt", "disturbance"), "dt")});
  }
  schema_error("unknown disturbance kind '" + k + "'");
}

json disturbance_to_json(const DisturbanceSignal& w) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Tone>) {
          return json{{"kind", "tone"}, {"amplitude", vector_to_json(v.amplitude)}, {"omega", v.omega},
                      {"phase", vector_to_json(v.phase)}};
        } else if constexpr (std::is_same_v<T, Pulse>) {
          return json{{"kind", "pulse"}, {"amplitude", vector_to_json(v.amplitude)}, {"start", v.start},
                      {"width", v.width}};
        } else if constexpr (std::is_same_v<T, Chirp>) {
          return json{{"kind", "chirp"},          {"amplitude", vector_to_json(v.amplitude)},
                      {"omega0", v.omega0},       {"omega1", v.omega1},
                      {"duration", v.duration}};
        } else {
          return json{{"kind", "samples"}, {"dt", v.dt}, {"values", matrix_to_json(v.values.transpose())}};
        }
      },
      w.kind());
}

namespace {

void parse_options(const json& j, AnalysisOptions& analysis, SimulationOptions& simulation) {
  reject_unknown(j, "options", {"certification_tol", "grid_points", "grid_span", "method", "bisect_tol",
                                "refine_tol", "dt", "horizon", "rel_tol", "seed"});
  if (j.contains("certification_tol")) analysis.certification_tol = number(j["certification_tol"], "certification_tol");
  if (j.contains("grid_points")) {
    if (!j["grid_points"].is_number_unsigned() || j["grid_points"].get<std::size_t>() < 2) {
      schema_error("field 'grid_points' must be an integer >= 2");
    }
    analysis.gain.grid_points = j["grid_points"].get<std::size_t>();
  }
  if (j.contains("grid_span")) analysis.gain.grid_span = number(j["grid_span"], "grid_span");
  if (j.contains("bisect_tol")) analysis.gain.bisect_tol = number(j["bisect_tol"], "bisect_tol");
  if (j.contains("refine_tol")) analysis.gain.refine_tol = number(j["refine_tol"], "refine_tol");
  if (j.contains("method")) {
    const auto& m = j["method"];
    if (m == "bisect") analysis.gain.method = GainMethod::Bisect;
    else if (m == "grid") analysis.gain.method = GainMethod::Grid;
    else schema_error("field 'method' must be \"bisect\" or \"grid\"");
  }
  if (j.contains("dt")) simulation.dt = number(j["dt"], "dt");
  if (j.contains("horizon")) simulation.horizon = number(j["horizon"], "horizon");
  if (j.contains("rel_tol")) simulation.rel_tol = number(j["rel_tol"], "rel_tol");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) schema_error("field 'seed' must be a nonnegative integer");
    simulation.seed = j["seed"].get<std::uint64_t>();
  }
  if (!(analysis.gain.grid_span > 1.0)) schema_error("field 'grid_span' must exceed 1");
  if (!(simulation.dt > 0.0) || !(simulation.horizon > 0.0)) schema_error("dt and horizon must be positive");
  if (!(analysis.certification_tol >= 0.0) || !(simulation.rel_tol >= 0.0)) {
    schema_error("tolerances must be nonnegative");
  }
}

}  // namespace

NetworkSpec parse_network(const json& doc) {
  reject_unknown(doc, "network", {"version", "subsystem", "alpha", "vertices", "edges", "source", "disturbance",
                                  "options"});
  const json& version = require(doc, "version", "network");
  if (!version.is_number_integer() || version.get<int>() != kFormatVersion) {
    schema_error("unsupported version (expected " + std::to_string(kFormatVersion) + ")");
  }

  const json& sub = require(doc, "subsystem", "network");
  std::optional<double> planar_d;
  std::optional<StateSpace> subsystem;
  if (sub.is_object() && sub.contains("template")) {
    reject_unknown(sub, "subsystem", {"template", "d"});
    if (sub["template"] != "planar") schema_error("only the \"planar\" subsystem template is known");
    const double d = number(require(sub, "d", "subsystem"), "d");
    if (!(d > 0.0)) schema_error("planar damping d must be positive");
    planar_d = d;
    subsystem = planar_subsystem(d);
  } else {
    reject_unknown(sub, "subsystem", {"A", "B", "C"});
    subsystem = StateSpace(matrix_from_json(require(sub, "A", "subsystem"), "A"),
                           matrix_from_json(require(sub, "B", "subsystem"), "B"),
                           matrix_from_json(require(sub, "C", "subsystem"), "C"));
    if (!subsystem->is_square()) {
      throw Error(ErrorCode::DimensionMismatch, "subsystem C must have as many rows as B has columns");
    }
  }

  const double alpha = number(require(doc, "alpha", "network"), "alpha");
  if (!(alpha > 0.0)) schema_error("alpha must be positive");

  const json& nv = require(doc, "vertices", "network");
  if (!nv.is_number_integer() || nv.get<long long>() < 1) schema_error("vertices must be a positive integer");
  const auto N = static_cast<std::size_t>(nv.get<long long>());

  std::vector<Edge> edges;
  const json& ej = require(doc, "edges", "network");
  if (!ej.is_array()) schema_error("edges must be an array");
  for (const auto& e : ej) {
    reject_unknown(e, "edge", {"from", "to", "weight"});
    edges.push_back({vertex_id(require(e, "from", "edge"), "from", N), vertex_id(require(e, "to", "edge"), "to", N),
                     number(require(e, "weight", "edge"), "weight")});
  }

  std::optional<Vertex> source;
  if (doc.contains("source")) source = vertex_id(doc["source"], "source", N);

  NetworkSpec spec{NetworkModel(WeightedDigraph(N, std::move(edges)), alpha, *subsystem, source), planar_d,
                   std::nullopt, {}, {}};
  if (doc.contains("disturbance")) {
    spec.disturbance = disturbance_from_json(doc["disturbance"]);
    if (spec.disturbance->channels() != spec.model.subsystem().inputs()) {
      throw Error(ErrorCode::DimensionMismatch, "disturbance channel count differs from subsystem inputs");
    }
  }
  if (doc.contains("options")) parse_options(doc["options"], spec.analysis, spec.simulation);
  return spec;
}

NetworkSpec parse_network_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    schema_error(std::string("malformed JSON: ") + e.what());
  }
  return parse_network(doc);
}

NetworkSpec parse_network_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SchemaError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_network_text(ss.str());
}

json options_to_json(const AnalysisOptions& analysis, const SimulationOptions& simulation) {
  return json{{"certification_tol", analysis.certification_tol},
              {"grid_points", analysis.gain.grid_points},
              {"grid_span", analysis.gain.grid_span},
              {"method", method_name(analysis.gain.method)},
              {"bisect_tol", analysis.gain.bisect_tol},
              {"refine_tol", analysis.gain.refine_tol},
              {"dt", simulation.dt},
              {"horizon", simulation.horizon},
              {"rel_tol", simulation.rel_tol},
              {"seed", simulation.seed}};
}

json serialize_network(const NetworkSpec& spec) {
  const NetworkModel& net = spec.model;
  json doc;
  doc["version"] = kFormatVersion;
  if (spec.planar_d) {
    doc["subsystem"] = json{{"template", "planar"}, {"d", *spec.planar_d}};
  } else {
    doc["subsystem"] = json{{"A", matrix_to_json(net.subsystem().A())},
                            {"B", matrix_to_json(net.subsystem().B())},
                            {"C", matrix_to_json(net.subsystem().C())}};
  }
  doc["alpha"] = net.alpha();
  doc["vertices"] = net.size();
  json edges = json::array();
  for (const auto& e : net.graph().edges()) {
    edges.push_back(json{{"from", e.from + 1}, {"to", e.to + 1}, {"weight", e.weight}});
  }
  doc["edges"] = std::move(edges);
  if (net.source()) doc["source"] = *net.source() + 1;
  if (spec.disturbance) doc["disturbance"] = disturbance_to_json(*spec.disturbance);
  doc["options"] = options_to_json(spec.analysis, spec.simulation);
  return doc;
}

json manifold_to_json(const ManifoldReport& report) {
  json modes = json::array();
  for (const auto& m : report.modes) {
    modes.push_back(json{{"lambda", complex_to_json(m.lambda)},
                         {"hurwitz", m.hurwitz},
                         {"spectral_abscissa", m.spectral_abscissa}});
  }
  json out{{"stable", report.stable},
           {"laplacian_diagonalizable", report.laplacian_diagonalizable},
           {"method", report.used_full_matrix ? "full_matrix" : "modal"},
           {"modes", std::move(modes)}};
  out["full_matrix_stable"] = report.full_matrix_stable ? json(*report.full_matrix_stable) : json(nullptr);
  return out;
}

json report_to_json(const StabilityReport& report) {
  json out{{"status", to_string(report.status)},
           {"manifold", manifold_to_json(report.manifold)},
           {"vertices", vertex_gains_to_json(report.vertices)},
           {"causes", report.causes},
           {"tolerances",
            {{"certification_tol", report.options.certification_tol},
             {"bisect_tol", report.options.gain.bisect_tol},
             {"refine_tol", report.options.gain.refine_tol},
             {"grid_points", report.options.gain.grid_points},
             {"grid_span", report.options.gain.grid_span},
             {"method", method_name(report.options.gain.method)},
             {"pole_classification_tol", kPoleClassificationTol}}}};
  if (report.counterexample) {
    const auto& c = *report.counterexample;
    out["counterexample"] = json{{"vertex", c.vertex + 1},
                                 {"omega", c.omega},
                                 {"sup_gain", c.gain},
                                 {"source", c.source + 1},
                                 {"cutset", json::array({c.source + 1})}};
  } else {
    out["counterexample"] = nullptr;
  }
  return out;
}

json impervious_to_json(const ImperviousReport& report) {
  json region = json::array();
  for (Vertex v : report.region) region.push_back(v + 1);
  return json{{"impervious", report.pass},
              {"region", std::move(region)},
              {"manifold", manifold_to_json(report.manifold)},
              {"vertices", vertex_gains_to_json(report.vertices)},
              {"causes", report.causes},
              {"tolerances", {{"certification_tol", report.options.certification_tol},
                              {"bisect_tol", report.options.gain.bisect_tol}}}};
}

int exit_code(CertificateStatus status) {
  switch (status) {
    case CertificateStatus::CertifiedStable: return 0;
    case CertificateStatus::CertifiedUnstable: return 2;
    case CertificateStatus::Undecided: return 3;
  }
  return 1;
}

}  // namespace propstab::io
