// mass_curve.hpp — sweeping lambda across one spectral gap, the sampled
// (lambda, c_lambda, mass) curve, the discrete shadows of the one-sided
// derivative bounds, and prescribed-mass retrieval by bisection on the curve.
//
// Mass is stored internally as ||u||_H^2 / 2 throughout; unit conversions
// live at the CLI boundary.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "specgap/common.hpp"
#include "specgap/eigenbasis.hpp"
#include "specgap/nehari.hpp"

namespace specgap {

struct CurveSample {
  double lambda = 0.0;
  double action = 0.0;
  double mass = 0.0;
  double residual = 0.0;
  bool sign_changing = false;
  bool branch_switch = false;  // flagged on anomalous mass jumps
  GroundState state;
};

struct MassCurve {
  SpectralGap gap;
  int n = 0;
  std::vector<CurveSample> samples;  // strictly increasing lambda
  // failed sample positions (lambda, diagnostic); never silently dropped
  std::vector<std::pair<double, std::string>> holes;
};

namespace detail {

// Chebyshev points of the first kind on (lower, upper): endpoint-free and
// clustered at both ends (the right end is where c_lambda flattens).
inline std::vector<double> chebyshev_lambdas(const SpectralGap& gap, int m) {
  double mid = 0.5 * (gap.lower + gap.upper);
  double half = 0.5 * (gap.upper - gap.lower);
  double margin = 2e-6 * gap.length();
  std::vector<double> xs(m);
  for (int i = 0; i < m; ++i) {
    double lam = mid - half * std::cos(M_PI * (2.0 * i + 1.0) / (2.0 * m));
    xs[i] = std::clamp(lam, gap.lower + margin, gap.upper - margin);
  }
  return xs;
}

inline CurveSample make_sample(GroundState&& gs) {
  CurveSample s;
  s.lambda = gs.lambda;
  s.action = gs.action;
  s.mass = gs.mass;
  s.residual = gs.residual;
  s.sign_changing = gs.sign_changing;
  s.state = std::move(gs);
  return s;
}

inline Vector tail_direction(const GroundState& gs) {
  int tail = gs.u.basis->size() - gs.n;
  return gs.u.c.tail(tail);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sweep: cold multistart solves in parallel, then warm-started refinement
// passes in both directions keeping the lower action at every sample.

inline MassCurve sweep(const EigenBasisPtr& basis, const SpectralGap& gap, int n,
                       const PowerNonlinearity& nl, const SolverConfig& cfg,
                       int sample_count) {
  require(sample_count >= 8, ErrorKind::config, "sweep: need >= 8 samples");
  auto lambdas = detail::chebyshev_lambdas(gap, sample_count);

  MassCurve curve;
  curve.gap = gap;
  curve.n = n;

  std::vector<CurveSample> cold(sample_count);
  std::vector<std::string> failures(sample_count);
  parallel_for(sample_count, [&](std::int64_t i) {
    try {
      SolverConfig c = cfg;
      c.seed = cfg.seed + 1000 * static_cast<std::uint64_t>(i);
      cold[i] = detail::make_sample(outer_minimize(basis, lambdas[i], n, nl, c));
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });
  for (int i = 0; i < sample_count; ++i) {
    if (failures[i].empty())
      curve.samples.push_back(std::move(cold[i]));
    else
      curve.holes.push_back({lambdas[i], failures[i]});
  }
  require(!curve.samples.empty(), ErrorKind::solver,
          "sweep: every sample failed; first diagnostic: " +
              (curve.holes.empty() ? std::string("?") : curve.holes[0].second));

  // warm refinement, left to right then right to left
  int kept = static_cast<int>(curve.samples.size());
  auto warm_pass = [&](bool forward) {
    for (int k = 1; k < kept; ++k) {
      int i = forward ? k : kept - 1 - k;
      int j = forward ? i - 1 : i + 1;
      Vector dir = detail::tail_direction(curve.samples[j].state);
      try {
        GroundState gs =
            outer_minimize(basis, curve.samples[i].lambda, n, nl, cfg, &dir);
        if (gs.action < curve.samples[i].action)
          curve.samples[i] = detail::make_sample(std::move(gs));
      } catch (const Error&) {
        // keep the cold solve for this sample
      }
    }
  };
  warm_pass(true);
  warm_pass(false);

  // branch-switch flags from anomalous mass jumps
  double mmin = curve.samples[0].mass, mmax = mmin;
  for (const auto& s : curve.samples) {
    mmin = std::min(mmin, s.mass);
    mmax = std::max(mmax, s.mass);
  }
  double jump_scale = 0.3 * (mmax - mmin) + 1e-12;
  for (int i = 1; i < static_cast<int>(curve.samples.size()); ++i)
    if (std::abs(curve.samples[i].mass - curve.samples[i - 1].mass) > jump_scale) {
      curve.samples[i].branch_switch = true;
      curve.samples[i - 1].branch_switch = true;
    }
  return curve;
}

// ---------------------------------------------------------------------------
// Discrete shadow of the one-sided derivative bounds: both difference
// quotients around sample i must dominate mass_i up to the slack.

inline bool derivative_bounds_check(const MassCurve& curve, int i,
                                    double slack_factor = 0.05) {
  require(i > 0 && i + 1 < static_cast<int>(curve.samples.size()),
          ErrorKind::config, "derivative_bounds_check: interior index required");
  const auto& a = curve.samples[i - 1];
  const auto& b = curve.samples[i];
  const auto& c = curve.samples[i + 1];
  double slack = slack_factor * b.mass;
  double backward = (a.action - b.action) / (b.lambda - a.lambda);
  double forward = (b.action - c.action) / (c.lambda - b.lambda);
  return backward >= b.mass - slack && forward >= b.mass - slack;
}

// ---------------------------------------------------------------------------
// Sampled mass extrema and the lower estimate of g_n from forward quotients.

struct MassRange {
  double mass_min = 0.0;
  double mass_max = 0.0;
  std::optional<double> g_n_estimate;  // lower estimate of g_n only
};

inline MassRange mass_range(const MassCurve& curve) {
  require(!curve.samples.empty(), ErrorKind::config, "mass_range: empty curve");
  MassRange r;
  r.mass_min = r.mass_max = curve.samples[0].mass;
  for (const auto& s : curve.samples) {
    r.mass_min = std::min(r.mass_min, s.mass);
    r.mass_max = std::max(r.mass_max, s.mass);
  }
  for (std::size_t i = 0; i + 1 < curve.samples.size(); ++i) {
    double q = (curve.samples[i].action - curve.samples[i + 1].action) /
               (curve.samples[i + 1].lambda - curve.samples[i].lambda);
    if (!r.g_n_estimate || q > *r.g_n_estimate) r.g_n_estimate = q;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Prescribed-mass retrieval. `target` is ||u||_H^2 / 2; the bracketing
// segment of smallest lambda-width is bisected, re-solving from both warm
// starts and keeping the lower action at every step.

struct NormalizedResult {
  GroundState state;
  std::vector<std::pair<double, double>> trace;  // (lambda, mass) per re-solve
  int resolves = 0;
};

inline NormalizedResult find_normalized(const EigenBasisPtr& basis,
                                        const SpectralGap& gap, int n,
                                        const PowerNonlinearity& nl,
                                        const SolverConfig& cfg,
                                        const MassCurve& curve, double target,
                                        int max_resolves = 40,
                                        double rel_tol = 1e-6) {
  require(!curve.samples.empty(), ErrorKind::config, "find_normalized: empty curve");
  MassRange range = mass_range(curve);
  require(target >= range.mass_min && target <= range.mass_max,
          ErrorKind::out_of_range,
          "find_normalized: target mass " + std::to_string(target) +
              " outside the achieved interval [" + std::to_string(range.mass_min) +
              ", " + std::to_string(range.mass_max) + "]");

  // nearest sample may already satisfy the tolerance
  for (const auto& s : curve.samples)
    if (std::abs(s.mass - target) <= rel_tol * target) {
      NormalizedResult res;
      res.state = s.state;
      res.trace.push_back({s.lambda, s.mass});
      return res;
    }

  // bracketing segment of smallest lambda-width
  int seg = -1;
  double best_width = 0.0;
  for (std::size_t i = 0; i + 1 < curve.samples.size(); ++i) {
    double fa = curve.samples[i].mass - target;
    double fb = curve.samples[i + 1].mass - target;
    if (fa == 0.0 || fb == 0.0 || (fa < 0.0) != (fb < 0.0)) {
      double w = curve.samples[i + 1].lambda - curve.samples[i].lambda;
      if (seg < 0 || w < best_width) {
        seg = static_cast<int>(i);
        best_width = w;
      }
    }
  }
  require(seg >= 0, ErrorKind::out_of_range,
          "find_normalized: no bracketing segment despite target in range "
          "(non-monotone sampling too coarse)");

  double la = curve.samples[seg].lambda, lb = curve.samples[seg + 1].lambda;
  double fa = curve.samples[seg].mass - target;
  GroundState sa = curve.samples[seg].state;
  GroundState sb = curve.samples[seg + 1].state;

  NormalizedResult res;
  double jump_guard = 4.0 * std::abs(curve.samples[seg].mass -
                                     curve.samples[seg + 1].mass) +
                      1e-9 * target;
  for (int it = 0; it < max_resolves; ++it) {
    double lm = 0.5 * (la + lb);
    Vector da = detail::tail_direction(sa);
    Vector db = detail::tail_direction(sb);
    GroundState ga = outer_minimize(basis, lm, n, nl, cfg, &da);
    GroundState gb = outer_minimize(basis, lm, n, nl, cfg, &db);
    GroundState gm = ga.action <= gb.action ? std::move(ga) : std::move(gb);
    res.resolves += 1;
    res.trace.push_back({lm, gm.mass});

    double fm = gm.mass - target;
    if (std::abs(fm) <= rel_tol * target) {
      res.state = std::move(gm);
      return res;
    }
    require(std::abs(fm) <= jump_guard + std::abs(fa) + 1e-6 * target,
            ErrorKind::solver,
            "find_normalized: mass jumped across the bracket "
            "(possible ground-state branch switch)");
    if ((fm < 0.0) == (fa < 0.0)) {
      la = lm;
      fa = fm;
      sa = std::move(gm);
    } else {
      lb = lm;
      sb = std::move(gm);
    }
  }
  fail(ErrorKind::solver,
       "find_normalized: bisection did not reach the target within " +
           std::to_string(max_resolves) + " re-solves");
}

}  // namespace specgap
