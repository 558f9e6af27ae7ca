// io.hpp — configuration parsing, graph description files, and deterministic
// serialization (CSV for spectra/curves, JSON for states and reports).
//
// Numbers are serialized as shortest round-trip decimals; identical inputs
// and seeds give byte-identical outputs. Timestamps go to a ".meta.json"
// sidecar, never into the primary files.

#pragma once

#include <json.hpp>

#include <charconv>
#include <ctime>
#include <fstream>
#include <sstream>
#include <string>

#include "specgap/common.hpp"
#include "specgap/eigenbasis.hpp"
#include "specgap/mass_curve.hpp"
#include "specgap/metric_graph.hpp"
#include "specgap/nehari.hpp"
#include "specgap/ode_oracle.hpp"
#include "specgap/torus.hpp"

namespace specgap {

using json = nlohmann::ordered_json;

inline constexpr const char* kStateSchema = "specgap/state/1";
inline constexpr const char* kOracleSchema = "specgap/oracle/1";
inline constexpr const char* kManifestSchema = "specgap/validate/1";

// ---------------------------------------------------------------------------
// Shortest round-trip decimal for CSV cells.

inline std::string double_to_string(double x) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Mass conventions. Internally mass = ||u||_H^2 / 2; the CLI converts.

enum class MassConvention { l2_squared, l2, half_l2_squared };

inline MassConvention parse_mass_convention(const std::string& s) {
  if (s == "l2-squared") return MassConvention::l2_squared;
  if (s == "l2") return MassConvention::l2;
  if (s == "half-l2-squared") return MassConvention::half_l2_squared;
  fail(ErrorKind::config, "unknown mass convention '" + s +
                              "' (expected l2-squared | l2 | half-l2-squared)");
}

inline const char* mass_convention_name(MassConvention m) {
  switch (m) {
    case MassConvention::l2_squared: return "l2-squared";
    case MassConvention::l2: return "l2";
    case MassConvention::half_l2_squared: return "half-l2-squared";
  }
  return "?";
}

inline double mass_to_user(double internal, MassConvention m) {
  switch (m) {
    case MassConvention::l2_squared: return 2.0 * internal;
    case MassConvention::l2: return std::sqrt(2.0 * internal);
    case MassConvention::half_l2_squared: return internal;
  }
  return internal;
}

inline double mass_from_user(double user, MassConvention m) {
  switch (m) {
    case MassConvention::l2_squared: return user / 2.0;
    case MassConvention::l2: return user * user / 2.0;
    case MassConvention::half_l2_squared: return user;
  }
  return user;
}

// ---------------------------------------------------------------------------
// JSON parsing with line/column diagnostics.

inline json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    fail(ErrorKind::config, origin + ":" + std::to_string(line) + ":" +
                                std::to_string(col) + ": " + e.what());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::config, "cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json_file(const std::string& path) {
  return parse_json_text(read_text_file(path), path);
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::config, "cannot write file: " + path);
  out << text;
}

// Timestamp sidecar; the primary outputs stay byte-stable.
inline void write_meta_sidecar(const std::string& path) {
  json meta;
  meta["tool"] = "specgap";
  meta["generated_unix"] = static_cast<std::int64_t>(std::time(nullptr));
  write_text_file(path + ".meta.json", meta.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Graph description file:
// {
//   "vertices": 3,
//   "edges": [[0, 1, 3.141592653589793], [1, 2, 1.0]],
//   "conditions": {"0": "dirichlet", "1": "kirchhoff", "2": {"delta": 0.5}}
// }
// Omitted vertices default to kirchhoff. "delta(0.5)" is accepted as a string.

inline VertexCondition parse_vertex_condition(const json& j) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "kirchhoff") return VertexCondition::kirchhoff();
    if (s == "dirichlet") return VertexCondition::dirichlet();
    if (s.rfind("delta(", 0) == 0 && s.back() == ')') {
      double a = 0.0;
      auto body = s.substr(6, s.size() - 7);
      auto res = std::from_chars(body.data(), body.data() + body.size(), a);
      require(res.ec == std::errc(), ErrorKind::config,
              "bad delta condition: " + s);
      return VertexCondition::delta(a);
    }
    fail(ErrorKind::config, "unknown vertex condition: " + s);
  }
  if (j.is_object() && j.contains("delta"))
    return VertexCondition::delta(j["delta"].get<double>());
  fail(ErrorKind::config, "vertex condition must be a string or {\"delta\": a}");
}

inline MetricGraph graph_from_json(const json& j) {
  MetricGraph g;
  require(j.contains("vertices") && j.contains("edges"), ErrorKind::config,
          "graph file needs 'vertices' and 'edges'");
  g.vertex_count = j["vertices"].get<int>();
  for (const auto& e : j["edges"]) {
    require(e.is_array() && e.size() == 3, ErrorKind::config,
            "each edge must be [tail, head, length]");
    g.edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
  }
  g.conditions.assign(g.vertex_count, VertexCondition::kirchhoff());
  if (j.contains("conditions")) {
    for (auto it = j["conditions"].begin(); it != j["conditions"].end(); ++it) {
      int v = std::stoi(it.key());
      require(v >= 0 && v < g.vertex_count, ErrorKind::config,
              "condition for unknown vertex " + it.key());
      g.conditions[v] = parse_vertex_condition(it.value());
    }
  }
  g.validate();
  return g;
}

inline MetricGraph load_graph_file(const std::string& path) {
  return graph_from_json(parse_json_file(path));
}

// ---------------------------------------------------------------------------
// Problem configuration.

struct ProblemConfig {
  Backend backend = Backend::graph;
  std::string graph_file;
  std::optional<MetricGraph> inline_graph;
  int nodes_per_edge = 64;  // elements per edge
  int element_order = 4;
  int ell_max = 4;          // torus / square-navier mode range
  double p = 4.0;
  double constant_weight = 1.0;
  std::string weight_file;  // optional sampled weight on the quadrature grid
  int truncation = 0;       // 0 => 4 (n+1)
  int spectrum_modes = 120;
  SolverConfig solver;
  int sweep_samples = 33;
  MassConvention mass_convention = MassConvention::l2_squared;

  void validate() const {
    require(p > 2.0, ErrorKind::config, "config: p must satisfy p > 2");
    require(truncation == 0 || truncation >= 2, ErrorKind::config,
            "config: truncation must be >= 2");
    require(nodes_per_edge >= 3, ErrorKind::config,
            "config: nodes_per_edge must be >= 3");
  }
};

inline ProblemConfig config_from_json(const json& j) {
  ProblemConfig c;
  std::string backend = j.value("backend", "graph");
  if (backend == "graph")
    c.backend = Backend::graph;
  else if (backend == "torus")
    c.backend = Backend::torus;
  else if (backend == "square-navier")
    c.backend = Backend::square_navier;
  else
    fail(ErrorKind::config, "unknown backend: " + backend);

  c.graph_file = j.value("graph_file", "");
  if (j.contains("graph")) c.inline_graph = graph_from_json(j["graph"]);
  c.nodes_per_edge = j.value("nodes_per_edge", 64);
  c.element_order = j.value("element_order", 4);
  c.ell_max = j.value("ell_max", 4);
  if (j.contains("nonlinearity")) {
    const auto& nj = j["nonlinearity"];
    c.p = nj.value("p", 4.0);
    c.constant_weight = nj.value("weight", 1.0);
    c.weight_file = nj.value("weight_file", "");
  }
  c.truncation = j.value("truncation", 0);
  c.spectrum_modes = j.value("spectrum_modes", 120);
  if (j.contains("solver")) {
    const auto& sj = j["solver"];
    c.solver.inner_tol = sj.value("inner_tol", c.solver.inner_tol);
    c.solver.outer_tol = sj.value("outer_tol", c.solver.outer_tol);
    c.solver.residual_tol = sj.value("residual_tol", c.solver.residual_tol);
    c.solver.max_inner_iter = sj.value("max_inner_iter", c.solver.max_inner_iter);
    c.solver.max_outer_iter = sj.value("max_outer_iter", c.solver.max_outer_iter);
    c.solver.restarts = sj.value("restarts", c.solver.restarts);
    c.solver.trust_radius = sj.value("trust_radius", c.solver.trust_radius);
    c.solver.polish = sj.value("polish", c.solver.polish);
  }
  c.solver.seed = j.value("seed", std::uint64_t{12345});
  if (j.contains("sweep")) c.sweep_samples = j["sweep"].value("samples", 33);
  c.mass_convention =
      parse_mass_convention(j.value("mass_convention", "l2-squared"));
  c.validate();
  return c;
}

inline ProblemConfig load_config(const std::string& path) {
  return config_from_json(parse_json_file(path));
}

// ---------------------------------------------------------------------------
// Backend construction. `min_modes` is the number of eigenpairs the caller
// needs; the returned basis is truncated at a cluster boundary >= min_modes.

inline EigenBasisPtr truncate_to_cluster(const EigenBasisPtr& basis, int want) {
  int N = basis->size();
  require(want >= 1, ErrorKind::config, "truncate_to_cluster: want >= 1");
  if (want >= N) return basis;
  int K = want;
  while (K < N && basis->eigenvalues[K] - basis->eigenvalues[K - 1] <=
                      merge_tolerance(basis->eigenvalues[K - 1]))
    ++K;
  if (K >= N) return basis;
  auto cut = std::make_shared<EigenBasis>();
  cut->backend = basis->backend;
  cut->eigenvalues = basis->eigenvalues.head(K);
  cut->modes = basis->modes.leftCols(K);
  cut->quad_weights = basis->quad_weights;
  cut->measure = basis->measure;
  cut->node_x = basis->node_x;
  cut->node_y = basis->node_y;
  cut->node_edge = basis->node_edge;
  return cut;
}

struct Problem {
  ProblemConfig config;
  EigenBasisPtr basis;
  PowerNonlinearity nl;
  std::shared_ptr<GraphBasis> graph;  // set for the graph backend
};

inline Problem build_problem(const ProblemConfig& cfg, int min_modes) {
  Problem prob;
  prob.config = cfg;
  if (cfg.backend == Backend::graph) {
    MetricGraph g;
    if (cfg.inline_graph)
      g = *cfg.inline_graph;
    else {
      require(!cfg.graph_file.empty(), ErrorKind::config,
              "graph backend needs 'graph_file' or inline 'graph'");
      g = load_graph_file(cfg.graph_file);
    }
    auto pair = assemble(g, cfg.nodes_per_edge, cfg.element_order);
    int count = std::min(pair.dof_count / 2, min_modes + 8);
    require(count >= min_modes, ErrorKind::config,
            "mesh too coarse for the requested truncation; raise nodes_per_edge");
    auto gb = graph_eigenbasis(pair, count);
    prob.graph = std::make_shared<GraphBasis>(std::move(gb));
    prob.basis = truncate_to_cluster(prob.graph->basis, min_modes);
  } else if (cfg.backend == Backend::torus) {
    auto tb = torus_eigenbasis(cfg.ell_max, min_modes + 8);
    prob.basis = truncate_to_cluster(tb.basis, min_modes);
  } else {
    auto tb = square_navier_eigenbasis(cfg.ell_max, min_modes + 8);
    prob.basis = truncate_to_cluster(tb.basis, min_modes);
  }

  if (!cfg.weight_file.empty()) {
    json w = parse_json_file(cfg.weight_file);
    require(w.is_array() &&
                static_cast<int>(w.size()) == prob.basis->quad_size(),
            ErrorKind::config,
            "weight_file must be an array matching the quadrature grid size " +
                std::to_string(prob.basis->quad_size()));
    Vector r(prob.basis->quad_size());
    for (int i = 0; i < r.size(); ++i) r[i] = w[i].get<double>();
    prob.nl = PowerNonlinearity(cfg.p, *prob.basis, r);
  } else {
    prob.nl = PowerNonlinearity(cfg.p, *prob.basis, cfg.constant_weight);
  }
  return prob;
}

// Default truncation: N = 4 (n+1), overridden by config, never below n+2.
inline int default_truncation(const ProblemConfig& cfg, int n) {
  int N = cfg.truncation > 0 ? cfg.truncation : 4 * (n + 1);
  return std::max(N, n + 2);
}

// ---------------------------------------------------------------------------
// Writers.

inline std::string spectrum_csv(const EigenBasis& basis) {
  std::string out = "index,eigenvalue,multiplicity_cluster,gap_to_next\n";
  int i = 0;
  const int N = basis.size();
  while (i < N) {
    int j = i + 1;
    while (j < N && basis.eigenvalues[j] - basis.eigenvalues[j - 1] <=
                        merge_tolerance(basis.eigenvalues[j - 1]))
      ++j;
    double gap = j < N ? basis.eigenvalues[j] - basis.eigenvalues[j - 1] : 0.0;
    for (int k = i; k < j; ++k) {
      out += std::to_string(k + 1) + "," + double_to_string(basis.eigenvalues[k]) +
             "," + std::to_string(j - i) + "," +
             (j < N ? double_to_string(gap) : std::string("")) + "\n";
    }
    i = j;
  }
  return out;
}

inline std::string curve_csv(const MassCurve& curve, MassConvention mc) {
  std::string out = "lambda,action,mass,residual,sign_changing\n";
  for (const auto& s : curve.samples) {
    out += double_to_string(s.lambda) + "," + double_to_string(s.action) + "," +
           double_to_string(mass_to_user(s.mass, mc)) + "," +
           double_to_string(s.residual) + "," + (s.sign_changing ? "1" : "0") +
           "\n";
  }
  return out;
}

inline json state_to_json(const GroundState& gs, const ProblemConfig& cfg) {
  json j;
  j["schema"] = kStateSchema;
  j["backend"] = backend_name(gs.u.basis->backend);
  j["lambda"] = gs.lambda;
  j["n"] = gs.n;
  j["action"] = gs.action;
  j["mass"] = mass_to_user(gs.mass, cfg.mass_convention);
  j["mass_convention"] = mass_convention_name(cfg.mass_convention);
  j["residual"] = gs.residual;
  j["sign_changing"] = gs.sign_changing;
  j["truncation"] = gs.u.basis->size();
  j["coefficients"] = std::vector<double>(gs.u.c.data(), gs.u.c.data() + gs.u.c.size());
  Vector grid = gs.u.grid_values();
  j["grid_samples"] = std::vector<double>(grid.data(), grid.data() + grid.size());
  return j;
}

// Reload a state against a compatibly-built basis.
inline GroundState state_from_json(const json& j, const EigenBasisPtr& basis,
                                   const PowerNonlinearity& nl,
                                   MassConvention mc) {
  require(j.value("schema", "") == kStateSchema, ErrorKind::config,
          "state file has wrong schema");
  GroundState gs;
  auto coeffs = j["coefficients"].get<std::vector<double>>();
  require(static_cast<int>(coeffs.size()) == basis->size(), ErrorKind::config,
          "state coefficients do not match the basis truncation");
  Vector c(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) c[i] = coeffs[i];
  gs.u = CoefficientVector(basis, std::move(c));
  gs.lambda = j["lambda"].get<double>();
  gs.n = j["n"].get<int>();
  gs.action = j["action"].get<double>();
  gs.mass = mass_from_user(j["mass"].get<double>(), mc);
  gs.residual = j["residual"].get<double>();
  gs.sign_changing = j["sign_changing"].get<bool>();
  (void)nl;
  return gs;
}

inline json oracle_report_json(const PeriodResult& pr,
                               const std::vector<std::pair<std::string, CheckStatus>>& checks) {
  json j;
  j["schema"] = kOracleSchema;
  j["lambda"] = pr.lambda;
  j["M"] = pr.M;
  j["m"] = pr.m;
  j["tau"] = pr.tau;
  j["H"] = pr.H;
  j["quad_error"] = pr.quad_error;
  json cj;
  for (const auto& [name, status] : checks) cj[name] = check_status_name(status);
  j["checks"] = cj;
  return j;
}

// ---------------------------------------------------------------------------
// Minimal structural JSON-schema validation (type / required / properties /
// items / enum), enough for the schemas shipped under schemas/.

inline bool validate_against_schema(const json& doc, const json& schema,
                                    std::string* why = nullptr) {
  auto note = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (schema.contains("type")) {
    std::string t = schema["type"].get<std::string>();
    bool ok = (t == "object" && doc.is_object()) ||
              (t == "array" && doc.is_array()) ||
              (t == "string" && doc.is_string()) ||
              (t == "number" && doc.is_number()) ||
              (t == "integer" && doc.is_number_integer()) ||
              (t == "boolean" && doc.is_boolean());
    if (!ok) return note("expected type " + t);
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& v : schema["enum"]) ok = ok || v == doc;
    if (!ok) return note("value not in enum");
  }
  if (schema.contains("required"))
    for (const auto& k : schema["required"])
      if (!doc.contains(k.get<std::string>()))
        return note("missing required key " + k.get<std::string>());
  if (schema.contains("properties") && doc.is_object()) {
    for (auto it = schema["properties"].begin(); it != schema["properties"].end();
         ++it) {
      if (doc.contains(it.key()) &&
          !validate_against_schema(doc[it.key()], it.value(), why))
        return false;
    }
  }
  if (schema.contains("items") && doc.is_array()) {
    for (const auto& el : doc)
      if (!validate_against_schema(el, schema["items"], why)) return false;
  }
  return true;
}

}  // namespace specgap
