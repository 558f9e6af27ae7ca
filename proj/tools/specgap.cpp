// specgap — normalized ground states in spectral gaps.
//
// Subcommands:
//   spectrum   eigenvalue/gap table (CSV)
//   solve      one Nehari-Pankov ground state at a given lambda (JSON)
//   sweep      (lambda, action, mass) curve across one gap (CSV)
//   normalize  locate a state of prescribed mass on a gap (JSON + trace)
//   oracle     phase-plane ODE oracle report for one (lambda, M) (JSON)
//   validate   run the invariant suite for the configured problem (JSON)
//
// Exit codes: 0 ok; 2 config error; 3 solver failure; 4 residual above
// tolerance (state still written); 5 normalize target outside range.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "specgap/io.hpp"
#include "specgap/validate.hpp"

using namespace specgap;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string mass_convention;
};

ProblemConfig load(const CommonArgs& args) {
  require(!args.config_path.empty(), ErrorKind::config,
          "--config is required for this command");
  ProblemConfig cfg = load_config(args.config_path);
  if (args.seed_set) cfg.solver.seed = args.seed;
  if (!args.mass_convention.empty())
    cfg.mass_convention = parse_mass_convention(args.mass_convention);
  return cfg;
}

void emit(const std::string& path, const std::string& text) {
  write_text_file(path, text);
  write_meta_sidecar(path);
  std::cout << "wrote " << path << "\n";
}

// Resolve the gap with spectral index n on the built basis.
SpectralGap gap_for_index(const EigenBasis& basis, int n) {
  require(n >= 0 && n < basis.size(), ErrorKind::config,
          "gap index out of range for the computed spectrum");
  double upper = basis.eigenvalues[n];
  double lower = n >= 1 ? basis.eigenvalues[n - 1] : 0.0;
  require(upper - lower > merge_tolerance(lower), ErrorKind::config,
          "no spectral gap at index " + std::to_string(n) +
              " (consecutive eigenvalues coincide)");
  return {n, lower, upper};
}

int cmd_spectrum(const CommonArgs& args) {
  ProblemConfig cfg = load(args);
  Problem prob = build_problem(cfg, cfg.spectrum_modes);
  emit(args.out_path.empty() ? "spectrum.csv" : args.out_path,
       spectrum_csv(*prob.basis));
  return 0;
}

int cmd_solve(const CommonArgs& args, double lambda, int n) {
  ProblemConfig cfg = load(args);
  Problem prob = build_problem(cfg, default_truncation(cfg, n));
  SpectralGap gap = gap_for_index(*prob.basis, n);
  require(lambda > gap.lower && lambda < gap.upper, ErrorKind::config,
          "lambda is outside the gap (" + double_to_string(gap.lower) + ", " +
              double_to_string(gap.upper) + ")");
  GroundState gs = outer_minimize(prob.basis, lambda, n, prob.nl, cfg.solver);
  emit(args.out_path.empty() ? "state.json" : args.out_path,
       state_to_json(gs, cfg).dump(2) + "\n");
  if (gs.residual_above_tol) {
    std::cerr << "warning: residual " << gs.residual
              << " above tolerance " << cfg.solver.residual_tol << "\n";
    return 4;
  }
  return 0;
}

int cmd_sweep(const CommonArgs& args, int n, int samples) {
  ProblemConfig cfg = load(args);
  Problem prob = build_problem(cfg, default_truncation(cfg, n));
  SpectralGap gap = gap_for_index(*prob.basis, n);
  MassCurve curve = sweep(prob.basis, gap, n, prob.nl, cfg.solver,
                          samples > 0 ? samples : cfg.sweep_samples);
  for (const auto& hole : curve.holes)
    std::cerr << "warning: hole at lambda = " << hole.first << ": "
              << hole.second << "\n";
  emit(args.out_path.empty() ? "curve.csv" : args.out_path,
       curve_csv(curve, cfg.mass_convention));
  return 0;
}

int cmd_normalize(const CommonArgs& args, int n, double user_mass, int samples) {
  ProblemConfig cfg = load(args);
  Problem prob = build_problem(cfg, default_truncation(cfg, n));
  SpectralGap gap = gap_for_index(*prob.basis, n);
  MassCurve curve = sweep(prob.basis, gap, n, prob.nl, cfg.solver,
                          samples > 0 ? samples : cfg.sweep_samples);
  double target = mass_from_user(user_mass, cfg.mass_convention);
  MassRange range = mass_range(curve);
  if (target < range.mass_min || target > range.mass_max) {
    std::cerr << "target mass " << user_mass << " outside the achieved interval ["
              << mass_to_user(range.mass_min, cfg.mass_convention) << ", "
              << mass_to_user(range.mass_max, cfg.mass_convention) << "] ("
              << mass_convention_name(cfg.mass_convention) << ")\n";
    return 5;
  }
  NormalizedResult res = find_normalized(prob.basis, gap, n, prob.nl, cfg.solver,
                                         curve, target);
  json j = state_to_json(res.state, cfg);
  json trace = json::array();
  for (const auto& [lam, mass] : res.trace) {
    json t;
    t["lambda"] = lam;
    t["mass"] = mass_to_user(mass, cfg.mass_convention);
    trace.push_back(t);
  }
  j["bisection_trace"] = trace;
  j["resolves"] = res.resolves;
  emit(args.out_path.empty() ? "state.json" : args.out_path, j.dump(2) + "\n");
  return 0;
}

int cmd_oracle(const CommonArgs& args, double lambda, double amplitude) {
  ProblemConfig cfg = load(args);
  auto nl = OdeNonlinearity::power(cfg.p);
  PeriodResult pr = period(lambda, nl, amplitude);
  ShootResult tr = shoot(lambda, nl, amplitude);

  std::vector<std::pair<std::string, CheckStatus>> checks;
  bool agree = std::abs(pr.tau - tr.measured_period) <= 1e-6 * pr.tau;
  checks.push_back({"two_method_period_agreement",
                    agree ? CheckStatus::pass : CheckStatus::fail});
  checks.push_back({"amplitude_consistency",
                    std::abs(-tr.min_value - pr.m) <= 1e-8 * (1.0 + pr.m)
                        ? CheckStatus::pass
                        : CheckStatus::fail});
  checks.push_back({"energy_drift_1e-8", tr.energy_drift <= 1e-8
                                             ? CheckStatus::pass
                                             : CheckStatus::fail});
  checks.push_back({"odd_symmetry_m_equals_M",
                    nl.odd ? (std::abs(pr.m - pr.M) <= 1e-10 * pr.M
                                  ? CheckStatus::pass
                                  : CheckStatus::fail)
                           : CheckStatus::not_applicable});
  checks.push_back({"l2_window_bound", l2_window_bound_check(lambda, nl, amplitude)});
  checks.push_back({"kappa_comparison", kappa_comparison_check(lambda, nl, amplitude)});

  emit(args.out_path.empty() ? "oracle.json" : args.out_path,
       oracle_report_json(pr, checks).dump(2) + "\n");
  for (const auto& [name, st] : checks)
    if (st == CheckStatus::fail) return 3;
  return 0;
}

int cmd_validate(const CommonArgs& args) {
  ProblemConfig cfg = load(args);
  Problem prob = build_problem(cfg, cfg.spectrum_modes);
  auto checks = run_validation(prob);
  json manifest = manifest_json(checks);
  emit(args.out_path.empty() ? "manifest.json" : args.out_path,
       manifest.dump(2) + "\n");
  for (const auto& c : checks)
    std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name
              << (c.detail.empty() ? "" : "  (" + c.detail + ")") << "\n";
  return manifest["all_pass"].get<bool>() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"specgap: normalized ground states in spectral gaps"};
  app.require_subcommand(1);

  CommonArgs args;
  double lambda = 0.0, mass = 0.0, amplitude = 1.0;
  int gap_index = 1, samples = 0;

  auto add_common = [&](CLI::App* sub, bool needs_config = true) {
    auto* opt = sub->add_option("--config", args.config_path, "problem config (JSON)");
    if (needs_config) opt->required();
    sub->add_option("--out", args.out_path, "output path");
    sub->add_option("--seed", args.seed, "override the config seed")
        ->each([&](const std::string&) { args.seed_set = true; });
    sub->add_option("--mass-convention", args.mass_convention,
                    "l2-squared | l2 | half-l2-squared");
  };

  auto* sp = app.add_subcommand("spectrum", "eigenvalue and gap table");
  add_common(sp);

  auto* so = app.add_subcommand("solve", "one ground state at a given lambda");
  add_common(so);
  so->add_option("--lambda", lambda, "frequency parameter")->required();
  so->add_option("--gap", gap_index, "spectral gap index n")->required();

  auto* sw = app.add_subcommand("sweep", "mass curve across one gap");
  add_common(sw);
  sw->add_option("--gap", gap_index, "spectral gap index n")->required();
  sw->add_option("--samples", samples, "sample count (default from config)");

  auto* no = app.add_subcommand("normalize", "state of prescribed mass");
  add_common(no);
  no->add_option("--gap", gap_index, "spectral gap index n")->required();
  no->add_option("--mass", mass, "target mass (in the configured convention)")
      ->required();
  no->add_option("--samples", samples, "sample count (default from config)");

  auto* orc = app.add_subcommand("oracle", "phase-plane ODE oracle report");
  add_common(orc);
  orc->add_option("--lambda", lambda, "frequency parameter (>= 0)")->required();
  orc->add_option("--amplitude", amplitude, "maximum amplitude M")->required();

  auto* va = app.add_subcommand("validate", "run the invariant suite");
  add_common(va);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sp->parsed()) return cmd_spectrum(args);
    if (so->parsed()) return cmd_solve(args, lambda, gap_index);
    if (sw->parsed()) return cmd_sweep(args, gap_index, samples);
    if (no->parsed()) return cmd_normalize(args, gap_index, mass, samples);
    if (orc->parsed()) return cmd_oracle(args, lambda, amplitude);
    if (va->parsed()) return cmd_validate(args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::config: return 2;
      case ErrorKind::solver: return 3;
      case ErrorKind::tolerance: return 4;
      case ErrorKind::out_of_range: return 5;
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
