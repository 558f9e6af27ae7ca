// validate.hpp — named invariant checks behind the `validate` CLI command.
// Each check exercises one module-level property on the configured problem;
// the command writes the results as a pass/fail manifest.

#pragma once

#include <string>
#include <vector>

#include "specgap/common.hpp"
#include "specgap/eigenbasis.hpp"
#include "specgap/io.hpp"
#include "specgap/mass_curve.hpp"
#include "specgap/metric_graph.hpp"
#include "specgap/nehari.hpp"
#include "specgap/ode_oracle.hpp"
#include "specgap/torus.hpp"

namespace specgap {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline CoefficientVector random_state(const EigenBasisPtr& basis,
                                      std::mt19937_64& rng, int active = 0) {
  int N = basis->size();
  int m = active > 0 ? std::min(active, N) : N;
  Vector c = Vector::Zero(N);
  c.head(m) = random_unit_vector(m, rng);
  return CoefficientVector(basis, std::move(c));
}

inline void push(std::vector<CheckResult>& out, const std::string& name, bool ok,
                 const std::string& detail) {
  out.push_back({name, ok, detail});
}

}  // namespace detail

inline std::vector<CheckResult> run_validation(const Problem& prob) {
  std::vector<CheckResult> out;
  const EigenBasisPtr& basis = prob.basis;
  const PowerNonlinearity& nl = prob.nl;
  std::mt19937_64 rng(prob.config.solver.seed);

  // --- eigenbasis-core ---
  {
    double res = basis->orthonormality_residual();
    detail::push(out, "eigenbasis/orthonormality", res <= 1e-8,
                 "residual " + double_to_string(res));
  }
  {
    auto u = detail::random_state(basis, rng);
    double q1 = q_lambda(u, 0.7);
    CoefficientVector tu(basis, 3.0 * u.c);
    double q3 = q_lambda(tu, 0.7);
    bool ok = std::abs(q3 - 9.0 * q1) <= 1e-10 * (1.0 + std::abs(q3));
    detail::push(out, "eigenbasis/q-quadratic", ok, "");
  }
  {
    auto u = detail::random_state(basis, rng, 8);
    double i0 = nonlinear_energy(u, nl);
    detail::push(out, "eigenbasis/I-positive", i0 > 0.0,
                 "I(u) = " + double_to_string(i0));
    double iprime_u = nl.p * i0;  // p-homogeneous: I'(u)[u] = p I(u)
    detail::push(out, "eigenbasis/nehari-inequality", i0 < 0.5 * iprime_u, "");
  }
  {
    // central finite differences of the action against the gradient
    auto u = detail::random_state(basis, rng, std::min(8, basis->size()));
    double lambda = 0.37;
    Vector g = action_gradient_c(u, lambda, nl);
    double h = 1e-6 * std::max(1.0, u.norm_e());
    double worst = 0.0;
    for (int k = 0; k < std::min<int>(8, basis->size()); ++k) {
      CoefficientVector up(basis, u.c), um(basis, u.c);
      up.c[k] += h;
      um.c[k] -= h;
      double fd = (action(up, lambda, nl) - action(um, lambda, nl)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - g[k]) / (1.0 + std::abs(g[k])));
    }
    detail::push(out, "eigenbasis/gradient-fd", worst <= 1e-5,
                 "max rel err " + double_to_string(worst));
  }

  // --- backend-specific spectra ---
  if (prob.config.backend == Backend::graph && prob.graph) {
    const auto& gb = *prob.graph;
    int nmodes = std::min(10, basis->size());
    double worst = 0.0;
    for (int m = 0; m < nmodes; ++m) {
      Vector nodal = gb.nodal.col(m);
      for (int v = 0; v < gb.fem->graph.vertex_count; ++v) {
        if (gb.fem->graph.conditions[v].kind == VertexCondition::Kind::dirichlet)
          continue;
        double flux = gb.vertex_flux(nodal, v);
        double scale = std::sqrt(std::max(1.0, basis->eigenvalues[m])) *
                       basis->modes.col(m).cwiseAbs().maxCoeff();
        worst = std::max(worst, std::abs(flux) / (scale + 1e-12));
      }
    }
    detail::push(out, "graph/kirchhoff-flux", worst <= 1e-3,
                 "max scaled flux " + double_to_string(worst));

    double K = basis->eigenvalues[basis->size() - 1] * 0.9;
    int count = 0;
    for (int i = 0; i < basis->size(); ++i)
      if (basis->eigenvalues[i] <= K) ++count;
    if (count >= 50) {
      double ratio = weyl_ratio(*basis, K, gb.fem->graph.total_length());
      detail::push(out, "graph/weyl-ratio", std::abs(ratio - 1.0) <= 0.05,
                   "ratio " + double_to_string(ratio));
    } else {
      detail::push(out, "graph/weyl-ratio", true,
                   "n/a (fewer than 50 eigenvalues below the test level)");
    }
  }

  if (prob.config.backend == Backend::torus) {
    bool ok = true;
    std::string why;
    // eigenvalues and multiplicities against direct lattice enumeration
    int i = 0;
    std::int64_t j = 0;
    while (i < basis->size() && ok) {
      std::int64_t r = r2(j);
      if (r > 0) {
        if (i + r > basis->size()) break;  // truncated cluster tail
        for (std::int64_t t = 0; t < r; ++t)
          if (basis->eigenvalues[i + t] != double(j) * double(j)) {
            ok = false;
            why = "eigenvalue mismatch at j = " + std::to_string(j);
          }
        i += static_cast<int>(r);
      }
      ++j;
    }
    detail::push(out, "torus/spectrum-exact", ok, why);

    bool supok = true;
    for (int m = 0; m < basis->size(); ++m)
      supok = supok &&
              basis->modes.col(m).cwiseAbs().maxCoeff() <= torus_c_inf() + 1e-12;
    detail::push(out, "torus/mode-sup-bound", supok, "");

    bool chain = true;
    for (int ell = 2; ell <= prob.config.ell_max; ++ell) {
      auto rec = gap_chain_record(ell);
      chain = chain && rec.lambda_lower <= rec.lambda_probe &&
              rec.lambda_upper - rec.lambda_probe == rec.gap_length;
    }
    detail::push(out, "torus/gap-chain", chain, "");

    auto rec = gap_chain_record(2);
    auto d1 = tail_sum_d(rec.lambda_upper, rec.lambda_probe, 2000);
    auto d2 = tail_sum_d(rec.lambda_upper, rec.lambda_probe, 4000);
    bool overlap = d2.value >= d1.value && d2.value <= d1.value + d1.tail_bound;
    detail::push(out, "torus/tail-enclosure", overlap,
                 "d in [" + double_to_string(d1.value) + ", " +
                     double_to_string(d1.upper()) + "]");
  }

  // --- solver spot check on the first usable gap ---
  try {
    auto scan = find_gaps(*basis, 0.0);
    const SpectralGap* pick = nullptr;
    for (const auto& g : scan.gaps)
      if (g.index >= 1 && g.index + 2 < basis->size() && g.length() > 1e-3) {
        pick = &g;
        break;
      }
    if (pick) {
      double lambda = 0.5 * (pick->lower + pick->upper);
      SolverConfig cfg = prob.config.solver;
      cfg.restarts = std::min(cfg.restarts, 2);
      GroundState gs = outer_minimize(basis, lambda, pick->index, nl, cfg);
      detail::push(out, "solver/residual", !gs.residual_above_tol,
                   "residual " + double_to_string(gs.residual));
      detail::push(out, "solver/action-positive", gs.action > 0.0,
                   "c = " + double_to_string(gs.action));
      detail::push(out, "solver/mass-positive", gs.mass > 0.0, "");
      detail::push(out, "solver/np-membership",
                   verify_np_membership(gs.u, lambda, gs.n, nl, 1e-5), "");
      detail::push(out, "solver/half-space-dominance",
                   half_space_dominance_check(gs.u, lambda, gs.n, nl, 300,
                                              cfg.seed + 7),
                   "");
      double ceiling = action_upper_bound(nl.p, nl.c_I, *pick, lambda);
      detail::push(out, "solver/action-ceiling", gs.action <= ceiling,
                   double_to_string(gs.action) + " <= " + double_to_string(ceiling));
      auto pos = positive_eigenfunction_index(*basis);
      if (pos && lambda > basis->eigenvalues[*pos - 1])
        detail::push(out, "solver/sign-changing", gs.sign_changing, "");
    }
  } catch (const Error& e) {
    detail::push(out, "solver/spot-check", false, e.what());
  }

  // --- ode-oracle (backend-independent golden identities) ---
  {
    auto nlp = OdeNonlinearity::power(4.0);
    auto pr = period(0.0, nlp, 1.0);
    auto tr = shoot(0.0, nlp, 1.0, 20000);
    bool agree =
        std::abs(pr.tau - tr.measured_period) <= 1e-6 * pr.tau &&
        std::abs(pr.tau - 7.4162987092) <= 1e-3;
    detail::push(out, "oracle/two-method-period", agree,
                 "tau " + double_to_string(pr.tau) + " vs " +
                     double_to_string(tr.measured_period));
    detail::push(out, "oracle/odd-symmetry",
                 std::abs(m_of_M(0.0, nlp, 1.0) - 1.0) <= 1e-10, "");
    detail::push(out, "oracle/energy-drift", tr.energy_drift <= 1e-8,
                 double_to_string(tr.energy_drift));
    detail::push(out, "oracle/l2-window",
                 l2_window_bound_check(0.0, nlp, 1.0, 20000) == CheckStatus::pass,
                 "");
  }

  return out;
}

inline json manifest_json(const std::vector<CheckResult>& checks) {
  json j;
  j["schema"] = kManifestSchema;
  bool all = true;
  json arr = json::array();
  for (const auto& c : checks) {
    json cj;
    cj["name"] = c.name;
    cj["pass"] = c.pass;
    cj["detail"] = c.detail;
    arr.push_back(cj);
    all = all && c.pass;
  }
  j["checks"] = arr;
  j["all_pass"] = all;
  return j;
}

}  // namespace specgap
