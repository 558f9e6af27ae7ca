// ode_oracle.hpp — phase-plane oracle for -u'' = lambda u + f(u) on an
// interval. Solutions are periodic orbits in the potential well
// V_lambda(u) = F(u) + (lambda/2) u^2; this module computes the conjugate
// amplitude m_{lambda,M}, the period tau_{lambda,M} by turning-point
// regularized quadrature, a symplectic time-domain integration as an
// independent cross-check, and the amplitude machinery (gtilde, kappa
// comparisons, L^2 window bounds) used to validate variational solutions.
//
// Everything here assumes lambda >= 0; negative lambda is rejected.

#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <vector>

#include "specgap/common.hpp"
#include "specgap/eigenbasis.hpp"

namespace specgap {

struct OdeNonlinearity {
  std::function<double(double)> f;
  std::function<double(double)> F;  // antiderivative with F(0) = 0
  double kappa0 = 1.0;              // (f2) constants, user-supplied for non-odd f
  double s0 = 1.0;
  bool odd = false;

  static OdeNonlinearity power(double p) {
    OdeNonlinearity nl;
    nl.f = [p](double s) { return std::pow(std::abs(s), p - 2.0) * s; };
    nl.F = [p](double s) { return std::pow(std::abs(s), p) / p; };
    nl.kappa0 = 1.0;
    nl.s0 = 1.0;
    nl.odd = true;
    return nl;
  }

  // Calibration input only: f == 0 violates (f1) but turns the oracle into a
  // harmonic oscillator with known period 2 pi / sqrt(lambda).
  static OdeNonlinearity zero() {
    OdeNonlinearity nl;
    nl.f = [](double) { return 0.0; };
    nl.F = [](double) { return 0.0; };
    nl.odd = true;
    return nl;
  }

  static OdeNonlinearity from_callable(std::function<double(double)> f,
                                       std::function<double(double)> F = nullptr,
                                       double kappa0 = 1.0, double s0 = 1.0) {
    OdeNonlinearity nl;
    nl.f = std::move(f);
    if (F) {
      nl.F = std::move(F);
    } else {
      auto fc = nl.f;
      nl.F = [fc](double u) {
        if (u == 0.0) return 0.0;
        double err = 0.0;
        return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
            fc, 0.0, u, 12, 1e-13, &err);
      };
    }
    nl.kappa0 = kappa0;
    nl.s0 = s0;
    return nl;
  }
};

// V_lambda(u) = F(u) + (lambda/2) |u|^2
inline double potential(double lambda, const OdeNonlinearity& nl, double u) {
  require(lambda >= 0.0, ErrorKind::config, "potential: lambda must be >= 0");
  return nl.F(u) + 0.5 * lambda * u * u;
}

// Unique m > 0 with V_lambda(-m) = V_lambda(M), to ~1e-14 relative.
inline double m_of_M(double lambda, const OdeNonlinearity& nl, double M) {
  require(M > 0.0, ErrorKind::config, "m_of_M: M must be positive");
  require(lambda >= 0.0, ErrorKind::config, "m_of_M: lambda must be >= 0");
  const double target = potential(lambda, nl, M);
  auto g = [&](double m) { return potential(lambda, nl, -m) - target; };
  double hi = M;
  int guard = 0;
  while (g(hi) < 0.0) {
    hi *= 2.0;
    require(++guard < 80, ErrorKind::solver,
            "m_of_M: bracket expansion failed (F not coercive; (f1) violated)");
  }
  return bisect(g, 0.0, hi, 120);
}

struct PeriodResult {
  double lambda = 0.0;
  double M = 0.0;      // maximum amplitude
  double m = 0.0;      // -minimum amplitude, m_{lambda, M}
  double tau = 0.0;    // period
  double H = 0.0;      // ODE energy V_lambda(M)
  double quad_error = 0.0;
};

// tau = 2 \int_{-m}^{M} du / sqrt(2 (H - V_lambda(u))). The inverse square
// root singularities at both turning points are removed exactly by the
// substitutions u = M - t^2 and u = -m + t^2; the two halves are integrated
// adaptively on the regularized integrands.
inline PeriodResult period(double lambda, const OdeNonlinearity& nl, double M,
                           double rel_tol = 1e-12, int max_depth = 14) {
  require(M > 0.0, ErrorKind::config, "period: M must be positive");
  PeriodResult res;
  res.lambda = lambda;
  res.M = M;
  res.m = m_of_M(lambda, nl, M);
  res.H = potential(lambda, nl, M);

  const double H = res.H;
  const double split = 0.5 * (M - res.m);  // interior point of (-m, M)
  auto safe_sqrt = [](double x) { return std::sqrt(std::max(x, 0.0)); };

  // upper half: u in [split, M], u = M - t^2
  auto upper = [&](double t) {
    double u = M - t * t;
    double g = 2.0 * (H - potential(lambda, nl, u));
    return 2.0 * t / safe_sqrt(g);
  };
  // lower half: u in [-m, split], u = -m + t^2
  auto lower = [&](double t) {
    double u = -res.m + t * t;
    double g = 2.0 * (H - potential(lambda, nl, u));
    return 2.0 * t / safe_sqrt(g);
  };

  using gk = boost::math::quadrature::gauss_kronrod<double, 15>;
  double e1 = 0.0, e2 = 0.0;
  double i1 = gk::integrate(upper, 0.0, std::sqrt(M - split), max_depth, rel_tol, &e1);
  double i2 = gk::integrate(lower, 0.0, std::sqrt(split + res.m), max_depth, rel_tol, &e2);
  res.tau = 2.0 * (i1 + i2);
  res.quad_error = 2.0 * (e1 + e2);
  require(std::isfinite(res.tau) && res.tau > 0.0, ErrorKind::solver,
          "period: quadrature failed to converge");
  return res;
}

// ---------------------------------------------------------------------------
// Time-domain cross-check: velocity Verlet on u'' = -(lambda u + f(u)).

struct ShootResult {
  std::vector<double> times;
  std::vector<double> values;
  double measured_period = 0.0;  // from successive refined maxima
  double min_value = 0.0;        // refined trajectory minimum
  double energy_drift = 0.0;     // max relative |H(t) - H(0)| over the run
  double step = 0.0;
};

inline ShootResult shoot(double lambda, const OdeNonlinearity& nl, double M,
                         int steps_per_period = 40000) {
  require(M > 0.0, ErrorKind::config, "shoot: M must be positive");
  require(lambda >= 0.0, ErrorKind::config, "shoot: lambda must be >= 0");
  auto accel = [&](double u) { return -(lambda * u + nl.f(u)); };

  // Rough period from a coarse pre-run (first two downward velocity
  // crossings bracket one period).
  double omega = std::sqrt(lambda + std::max(std::abs(nl.f(M) / M), 1e-12));
  double tau_rough = 0.0;
  {
    double h = 2.0 * M_PI / omega / 4000.0;
    double u = M, v = 0.0, a = accel(u), t = 0.0;
    int crossings = 0;
    double vp = v;
    for (long i = 0; i < 100000000L; ++i) {
      u += h * v + 0.5 * h * h * a;
      double an = accel(u);
      v += 0.5 * h * (a + an);
      a = an;
      t += h;
      if (vp > 0.0 && v <= 0.0 && ++crossings >= 1) {
        tau_rough = t;
        break;
      }
      vp = v;
      require(t < 1e7, ErrorKind::solver, "shoot: no period detected");
    }
  }

  ShootResult res;
  res.step = tau_rough / steps_per_period;
  const double h = res.step;
  const long total = static_cast<long>(2.35 * steps_per_period);
  res.times.reserve(total + 1);
  res.values.reserve(total + 1);

  double u = M, v = 0.0, a = accel(u), t = 0.0;
  const double H0 = potential(lambda, nl, M);
  double drift = 0.0;
  std::vector<double> max_times;
  double min_u = u;
  res.times.push_back(0.0);
  res.values.push_back(u);

  double up2 = u, up1 = u, vp = v;
  for (long i = 0; i < total; ++i) {
    u += h * v + 0.5 * h * h * a;
    double an = accel(u);
    v += 0.5 * h * (a + an);
    a = an;
    t += h;
    res.times.push_back(t);
    res.values.push_back(u);
    drift = std::max(drift,
                     std::abs(0.5 * v * v + potential(lambda, nl, u) - H0) /
                         std::abs(H0));
    if (i >= 1 && vp > 0.0 && v <= 0.0) {
      // refine the maximum through the parabola at (t-2h, t-h, t)
      double denom = up2 - 2.0 * up1 + u;
      double s = denom != 0.0 ? 0.5 * (up2 - u) / denom : 0.0;
      max_times.push_back(t - h + s * h);
    }
    if (i >= 1 && vp < 0.0 && v >= 0.0) {
      double denom = up2 - 2.0 * up1 + u;
      double vertex = denom != 0.0 ? up1 - (u - up2) * (u - up2) / (8.0 * denom)
                                   : up1;
      min_u = std::min(min_u, vertex);
    }
    up2 = up1;
    up1 = u;
    vp = v;
  }
  require(max_times.size() >= 2, ErrorKind::solver,
          "shoot: fewer than two maxima detected");
  res.measured_period = max_times[1] - max_times[0];
  res.min_value = min_u;
  res.energy_drift = drift;
  return res;
}

// ---------------------------------------------------------------------------
// gtilde(t) = max(f(t), -f(-t)) / t, a strictly increasing bijection of
// [0, inf) under (f1); its inverse lower-bounds sup norms of solutions.

inline double gtilde(const OdeNonlinearity& nl, double t) {
  require(t >= 0.0, ErrorKind::config, "gtilde: t must be >= 0");
  if (t == 0.0) return 0.0;
  return std::max(nl.f(t), -nl.f(-t)) / t;
}

inline double gtilde_inverse(const OdeNonlinearity& nl, double y) {
  require(y >= 0.0, ErrorKind::config, "gtilde_inverse: y must be >= 0");
  if (y == 0.0) return 0.0;
  double t = 1.0;
  int guard = 0;
  while (gtilde(nl, t) < y) {
    require(gtilde(nl, 2.0 * t) > gtilde(nl, t), ErrorKind::solver,
            "gtilde_inverse: monotonicity violated ((f1) fails numerically)");
    t *= 2.0;
    require(++guard < 400, ErrorKind::solver, "gtilde_inverse: no upper bracket");
  }
  double lo = 0.0, hi = t;
  double root = bisect([&](double s) { return gtilde(nl, s) - y; }, lo, hi, 120);
  return root;
}

// Numeric (f1) validator on a log-spaced grid over both signs:
// f(s)/|s| strictly increasing, with the limits 0 at the origin and +-inf at
// +-inf checked through decay/growth factors.
inline bool validate_f1(const OdeNonlinearity& nl, double t_min = 1e-6,
                        double t_max = 1e6, int samples_per_decade = 8,
                        std::string* why = nullptr) {
  auto slope = [&](double s) { return nl.f(s) / std::abs(s); };
  auto note = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  const double ratio = std::pow(10.0, 1.0 / samples_per_decade);
  for (int sign : {+1, -1}) {
    double prev = slope(sign * t_min);
    for (double t = t_min * ratio; t <= t_max * (1.0 + 1e-12); t *= ratio) {
      double cur = slope(sign * t);
      double s_at = sign > 0 ? cur : prev;  // larger argument on this side
      double s_before = sign > 0 ? prev : cur;
      if (!(s_at > s_before))
        return note("f(s)/|s| not strictly increasing near s = " +
                    std::to_string(sign * t));
      prev = cur;
    }
    if (!(std::abs(slope(sign * t_min)) < 0.25 * std::abs(slope(sign * 1.0))))
      return note("f(s)/|s| does not vanish as s -> 0");
    if (!(std::abs(slope(sign * t_max)) > 4.0 * std::abs(slope(sign * 1.0))))
      return note("f(s)/|s| does not diverge as |s| -> inf");
  }
  return true;
}

// ---------------------------------------------------------------------------
// Amplitude-threshold machinery for the L^infty -> L^2 estimate.

// Uniform-in-lambda period majorant halves: tau <= sqrt(2) (beta+(M) + beta-(m))
// with beta+(s) = pi s / (2 sqrt(F(s))), beta-(s) = pi s / (2 sqrt(F(-s))).
inline double period_majorant(const OdeNonlinearity& nl, double s) {
  double fp = nl.F(s), fm = nl.F(-s);
  if (fp <= 0.0 || fm <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(2.0) * (M_PI * s / (2.0 * std::sqrt(fp)) +
                           M_PI * s / (2.0 * std::sqrt(fm)));
}

struct LinfL2Constants {
  double R = 0.0;      // kappa0 * max(s0, s1)
  double gamma = 0.0;  // sqrt(shortest_edge) / (4 kappa0)
  double s1 = 0.0;     // amplitude threshold for tau <= shortest_edge / 2
};

// s1 = smallest grid amplitude such that the lambda-uniform majorant keeps
// tau_{lambda, M} <= shortest_edge / 2 whenever both amplitudes are >= s1.
inline LinfL2Constants linf_l2_constants(double shortest_edge,
                                         const OdeNonlinearity& nl) {
  require(shortest_edge > 0.0, ErrorKind::config,
          "linf_l2_constants: edge length must be positive");
  const double eps = shortest_edge / 2.0;
  const double ceiling = 1e6;
  const int per_decade = 64;
  const double ratio = std::pow(10.0, 1.0 / per_decade);

  // grid sup of the majorant over [s, ceiling] computed by a backward sweep
  std::vector<double> grid;
  for (double s = 1e-3; s <= ceiling; s *= ratio) grid.push_back(s);
  std::vector<double> suffix_sup(grid.size());
  double running = 0.0;
  for (std::size_t i = grid.size(); i-- > 0;) {
    running = std::max(running, period_majorant(nl, grid[i]));
    suffix_sup[i] = running;
  }
  require(suffix_sup.back() <= eps || period_majorant(nl, ceiling) <= eps,
          ErrorKind::solver,
          "linf_l2_constants: period majorant does not decay (F(M)/M^2 bounded; "
          "(f1) violated)");
  double s1 = ceiling;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (suffix_sup[i] <= eps) {
      s1 = grid[i];
      break;
    }
  }
  require(s1 < ceiling, ErrorKind::solver,
          "linf_l2_constants: no admissible amplitude threshold below the ceiling");

  LinfL2Constants out;
  out.s1 = s1;
  out.R = nl.kappa0 * std::max(nl.s0, s1);
  out.gamma = std::sqrt(shortest_edge) / (4.0 * nl.kappa0);
  return out;
}

// ---------------------------------------------------------------------------
// Lemma-chain checks. Tri-state: some preconditions make a check vacuous.

enum class CheckStatus { pass, fail, not_applicable };

inline const char* check_status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::not_applicable: return "n/a";
  }
  return "?";
}

// min(m, M) >= (1/kappa0) max(m, M), predicated on M >= kappa0 s0 or
// m >= kappa0 s0.
inline CheckStatus kappa_comparison_check(double lambda, const OdeNonlinearity& nl,
                                          double M) {
  double m = m_of_M(lambda, nl, M);
  if (M < nl.kappa0 * nl.s0 && m < nl.kappa0 * nl.s0)
    return CheckStatus::not_applicable;
  bool ok = std::min(m, M) >= (1.0 / nl.kappa0) * std::max(m, M) * (1.0 - 1e-10);
  return ok ? CheckStatus::pass : CheckStatus::fail;
}

// (tau/8) min(m,M)^2 <= \int_0^tau u^2 <= tau max(m,M)^2, with the window
// integral taken over one measured period of the shot trajectory.
inline CheckStatus l2_window_bound_check(double lambda, const OdeNonlinearity& nl,
                                         double M, int steps_per_period = 40000) {
  auto traj = shoot(lambda, nl, M, steps_per_period);
  double m = -traj.min_value;
  double tau = traj.measured_period;
  // trapezoid over [0, tau]
  double integral = 0.0;
  for (std::size_t i = 1; i < traj.times.size(); ++i) {
    if (traj.times[i] > tau) break;
    double dt = traj.times[i] - traj.times[i - 1];
    integral += 0.5 * dt *
                (traj.values[i] * traj.values[i] +
                 traj.values[i - 1] * traj.values[i - 1]);
  }
  double lo = tau / 8.0 * std::pow(std::min(m, M), 2);
  double hi = tau * std::pow(std::max(m, M), 2);
  bool ok = integral >= lo * (1.0 - 1e-6) && integral <= hi * (1.0 + 1e-6);
  return ok ? CheckStatus::pass : CheckStatus::fail;
}

// ||u||_inf >= gtilde^{-1}(lambda_{n+1} - lambda), with grid slack for the
// finite sampling of the sup norm.
inline bool linf_lower_bound_check(double sup_u, double lambda,
                                   const SpectralGap& gap,
                                   const OdeNonlinearity& nl) {
  double bound = gtilde_inverse(nl, gap.upper - lambda);
  double slack = 1e-3 * (bound + sup_u);
  return sup_u >= bound - slack;
}

}  // namespace specgap
