// nehari.hpp — ground states of Nehari-Pankov type inside a spectral gap
// (lambda_n, lambda_{n+1}).
//
// Structure of the solve:
//   inner:  for a unit direction w orthogonal to E_n, maximize J_lambda over
//           the half space F_n(w)+ = E_n + R+ w. The maximizer is unique and
//           interior; we run a trust-region Newton method in (log s, v) with
//           u = e^sigma w + v, which keeps the ray coordinate positive.
//   outer:  minimize phi(w) = J_lambda(inner(w)) over the E-unit sphere of
//           the truncated E_n-perp, by Riemannian projected gradient with
//           backtracking; the envelope identity supplies grad phi from the
//           restricted action gradient at the inner maximizer.
//   polish: a few full-space Newton steps on J' = 0 drive the residual well
//           below the reported tolerance without leaving the basin.
//
// Global minimality over the sphere is not certified; the solver reports the
// best of a seeded multistart (zeta_{n+1} plus random directions).

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <random>

#include "specgap/common.hpp"
#include "specgap/eigenbasis.hpp"

namespace specgap {

struct SolverConfig {
  double inner_tol = 1e-11;    // restricted-gradient norm in the inner problem
  double outer_tol = 1e-6;     // Riemannian gradient norm on the sphere
  double residual_tol = 1e-6;  // E'-norm of J' at the returned state
  int max_inner_iter = 200;
  int max_outer_iter = 500;
  int restarts = 3;            // multistart count (>= 1)
  std::uint64_t seed = 12345;
  double trust_radius = 1.0;
  int truncation = 0;          // requested N; 0 = backend default 4(n+1)
  bool polish = true;

  void validate() const {
    require(inner_tol > 0.0 && outer_tol > 0.0 && residual_tol > 0.0,
            ErrorKind::config, "solver tolerances must be positive");
    require(restarts >= 1, ErrorKind::config, "solver needs restarts >= 1");
  }
};

struct HalfSpacePoint {
  double s = 0.0;            // ray coordinate, > 0
  Vector v;                  // E_n coefficients (length n)
  CoefficientVector u;       // s w + v
  double value = 0.0;        // J_lambda(u)
  int iterations = 0;
};

struct GroundState {
  CoefficientVector u;
  double lambda = 0.0;
  int n = 0;
  double action = 0.0;
  double mass = 0.0;      // ||u||_H^2 / 2
  double residual = 0.0;  // E'-norm of J' over the truncated span
  bool sign_changing = false;
  bool residual_above_tol = false;
  int inner_iterations = 0;
  int outer_iterations = 0;
};

// ---------------------------------------------------------------------------
// Small helpers on coordinates.

namespace detail {

inline double e_inner(const Vector& a, const Vector& b, const EigenBasis& basis) {
  return ((1.0 + basis.eigenvalues.array()) * a.array() * b.array()).sum();
}

inline double e_norm(const Vector& a, const EigenBasis& basis) {
  return std::sqrt(e_inner(a, a, basis));
}

// Exact minimizer of 0.5 d'Bd + b'd over ||d|| <= radius (More-Sorensen via
// eigendecomposition; dimensions here are small).
inline Vector trust_region_step(const Matrix& B, const Vector& b, double radius) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(B);
  const Vector& ev = es.eigenvalues();
  Vector bh = es.eigenvectors().transpose() * b;
  auto step_norm = [&](double mu) {
    double s2 = 0.0;
    for (int i = 0; i < ev.size(); ++i) {
      double d = ev[i] + mu;
      s2 += (bh[i] * bh[i]) / (d * d);
    }
    return std::sqrt(s2);
  };
  double lam_min = ev.minCoeff();
  if (lam_min > 0.0 && step_norm(0.0) <= radius) {
    Vector d = -(bh.array() / ev.array()).matrix();
    return es.eigenvectors() * d;
  }
  double mu_lo = std::max(0.0, -lam_min) + 1e-14;
  // hard case: gradient orthogonal to the bottom eigenspace
  if (step_norm(mu_lo) < radius) {
    Vector d(ev.size());
    for (int i = 0; i < ev.size(); ++i)
      d[i] = std::abs(ev[i] + mu_lo) > 1e-14 ? -bh[i] / (ev[i] + mu_lo) : 0.0;
    double fill = std::sqrt(std::max(0.0, radius * radius - d.squaredNorm()));
    int imin = 0;
    ev.minCoeff(&imin);
    d[imin] += fill;
    return es.eigenvectors() * d;
  }
  double mu_hi = mu_lo + b.norm() / radius + 1.0;
  while (step_norm(mu_hi) > radius) mu_hi *= 2.0;
  double mu = bisect([&](double m) { return step_norm(m) - radius; }, mu_lo, mu_hi, 100);
  Vector d = -(bh.array() / (ev.array() + mu)).matrix();
  return es.eigenvectors() * d;
}

// J''(u)[d_a, d_b] for the given direction columns.
inline Matrix hessian_directions(const CoefficientVector& u, double lambda,
                                 const PowerNonlinearity& nl, const Matrix& dirs,
                                 const Matrix& dir_grid) {
  Vector vals = u.grid_values();
  Vector diagw = u.basis->quad_weights.array() * nl.weight.array() *
                 (nl.p - 1.0) * vals.array().abs().pow(nl.p - 2.0);
  Matrix h = -(dir_grid.transpose() * diagw.asDiagonal() * dir_grid);
  Matrix qpart = dirs.transpose() *
                 (u.basis->eigenvalues.array() - lambda).matrix().asDiagonal() *
                 dirs;
  return h + qpart;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Exact maximizer of t -> J_lambda(t w) for p-homogeneous I:
// s0 = (q_lambda(w) / (p I(w)))^{1/(p-2)}.
inline double ray_scale_initial(const CoefficientVector& w, double lambda,
                                const PowerNonlinearity& nl) {
  double q = q_lambda(w, lambda);
  require(q > 0.0, ErrorKind::config,
          "ray_scale_initial: q_lambda(w) must be positive");
  double iw = nonlinear_energy(w, nl);
  require(iw > 0.0, ErrorKind::solver,
          "ray_scale_initial: degenerate direction (I(w) = 0 on the grid)");
  return std::pow(q / (nl.p * iw), 1.0 / (nl.p - 2.0));
}

// ---------------------------------------------------------------------------
// Inner problem. `w` must be supported above the gap index and is normalized
// in E internally; an optional warm start (s, v) resumes near a previous
// maximizer.

inline HalfSpacePoint inner_maximize(const CoefficientVector& w_in, double lambda,
                                     int n, const PowerNonlinearity& nl,
                                     const SolverConfig& cfg,
                                     const double* warm_s = nullptr,
                                     const Vector* warm_v = nullptr) {
  const EigenBasis& basis = *w_in.basis;
  const int N = basis.size();
  require(n >= 0 && n < N, ErrorKind::config, "inner_maximize: bad gap index");
  require(lambda < basis.eigenvalues[n], ErrorKind::config,
          "inner_maximize: lambda must lie below lambda_{n+1}");
  if (n >= 1)
    require(lambda > basis.eigenvalues[n - 1], ErrorKind::config,
            "inner_maximize: lambda must lie above lambda_n");
  require(n == 0 || w_in.c.head(n).cwiseAbs().maxCoeff() == 0.0,
          ErrorKind::config, "inner_maximize: w must be orthogonal to E_n");

  CoefficientVector w = w_in;
  w.c /= detail::e_norm(w.c, basis);

  double s0 = ray_scale_initial(w, lambda, nl);
  if (n == 0) {
    HalfSpacePoint pt;
    pt.s = s0;
    pt.v = Vector();
    pt.u = CoefficientVector(w.basis, s0 * w.c);
    pt.value = action(pt.u, lambda, nl);
    return pt;
  }

  // Precompute grid values of the direction set [w, zeta_1..zeta_n].
  Matrix dirs(N, n + 1);
  dirs.col(0) = w.c;
  dirs.rightCols(n) = Matrix::Identity(N, N).leftCols(n);
  Matrix dir_grid(basis.quad_size(), n + 1);
  dir_grid.col(0) = basis.modes * w.c;
  dir_grid.rightCols(n) = basis.modes.leftCols(n);

  double sigma = std::log(warm_s && *warm_s > 0.0 ? *warm_s : s0);
  Vector v = warm_v && warm_v->size() == n ? *warm_v : Vector::Zero(n);

  auto assemble_u = [&](double sig, const Vector& vv) {
    Vector c = Vector::Zero(N);
    c.head(n) = vv;
    c += std::exp(sig) * w.c;
    return CoefficientVector(w.basis, std::move(c));
  };

  CoefficientVector u = assemble_u(sigma, v);
  double val = action(u, lambda, nl);
  double radius = cfg.trust_radius;
  int it = 0;
  for (; it < cfg.max_inner_iter; ++it) {
    Vector g = action_gradient_c(u, lambda, nl);
    // restricted differential along (w, zeta_1..zeta_n)
    Vector gr(n + 1);
    gr[0] = g.dot(w.c);
    gr.tail(n) = g.head(n);
    if (gr.norm() <= cfg.inner_tol * (1.0 + detail::e_norm(u.c, basis))) break;

    double s = std::exp(sigma);
    require(s > 1e-12 * s0, ErrorKind::solver,
            "inner_maximize: ray coordinate collapsed toward the boundary "
            "(lambda too close to lambda_n or unresolved direction)");

    // gradient/Hessian in (sigma, v): d u/d sigma = s w.
    Vector grad(n + 1);
    grad[0] = s * gr[0];
    grad.tail(n) = gr.tail(n);
    Matrix h = detail::hessian_directions(u, lambda, nl, dirs, dir_grid);
    // chain rule for the log reparameterization
    Matrix hx = h;
    hx(0, 0) = s * s * h(0, 0) + s * gr[0];
    for (int j = 1; j <= n; ++j) {
      hx(0, j) = s * h(0, j);
      hx(j, 0) = s * h(j, 0);
    }

    // maximize: minimize the negated model inside the trust region
    Vector d = detail::trust_region_step(-hx, -grad, radius);
    double sigma_t = sigma + d[0];
    Vector v_t = v + d.tail(n);
    CoefficientVector u_t = assemble_u(sigma_t, v_t);
    double val_t = action(u_t, lambda, nl);
    double predicted = grad.dot(d) + 0.5 * d.dot(hx * d);
    double rho = predicted != 0.0 ? (val_t - val) / predicted : 0.0;
    if (rho > 0.01 && val_t > val) {
      sigma = sigma_t;
      v = v_t;
      u = u_t;
      val = val_t;
      if (rho > 0.75 && d.norm() > 0.8 * radius) radius = std::min(radius * 2.0, 1e6);
    } else {
      radius *= 0.25;
      require(radius > 1e-14, ErrorKind::solver,
              "inner_maximize: trust region collapsed without convergence");
    }
  }
  require(it < cfg.max_inner_iter, ErrorKind::solver,
          "inner_maximize: no convergence within the iteration budget");

  HalfSpacePoint pt;
  pt.s = std::exp(sigma);
  pt.v = v;
  pt.u = u;
  pt.value = val;
  pt.iterations = it;
  return pt;
}

// ---------------------------------------------------------------------------
// classify_sign / verify_np_membership / half_space_dominance_check.

inline bool classify_sign(const CoefficientVector& u) {
  Vector vals = u.grid_values();
  double sup = vals.cwiseAbs().maxCoeff();
  if (sup == 0.0) return false;
  return vals.minCoeff() < -1e-6 * sup && vals.maxCoeff() > 1e-6 * sup;
}

inline bool verify_np_membership(const CoefficientVector& u, double lambda, int n,
                                 const PowerNonlinearity& nl, double tol = 1e-5) {
  const int N = u.basis->size();
  if (u.c.tail(N - n).norm() <= tol) return false;  // u in E_n
  Vector g = action_gradient_c(u, lambda, nl);
  double scale = tol * (1.0 + detail::e_norm(u.c, *u.basis));
  for (int k = 0; k < n; ++k)
    if (std::abs(g[k]) > scale) return false;
  return std::abs(g.dot(u.c)) <= scale;
}

inline bool half_space_dominance_check(const CoefficientVector& u, double lambda,
                                       int n, const PowerNonlinearity& nl,
                                       int probes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> s_dist(-1.0, 3.0);
  std::uniform_real_distribution<double> r_dist(0.0, 1.0);
  double ju = action(u, lambda, nl);
  double ball = 2.0 * detail::e_norm(u.c, *u.basis);
  for (int i = 0; i < probes; ++i) {
    double s = i == 0 ? 0.0 : s_dist(rng);
    Vector c = (1.0 + s) * u.c;
    if (n >= 1 && i != 0) {
      Vector dir = random_unit_vector(n, rng);
      Vector vn = Vector::Zero(u.basis->size());
      vn.head(n) = dir;
      double en = detail::e_norm(vn, *u.basis);
      c += (ball * r_dist(rng) / en) * vn;
    }
    CoefficientVector probe(u.basis, std::move(c));
    if (action(probe, lambda, nl) > ju + 1e-9) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Outer minimization over unit directions of the truncated E_n-perp.

namespace detail {

struct OuterRun {
  HalfSpacePoint point;
  Vector w;  // final unit direction
  int iterations = 0;
};

inline OuterRun outer_descend(const EigenBasisPtr& basis, double lambda, int n,
                              const PowerNonlinearity& nl, const SolverConfig& cfg,
                              Vector w0) {
  const int N = basis->size();
  const int tail = N - n;
  auto lift = [&](const Vector& wt) {
    Vector c = Vector::Zero(N);
    c.tail(tail) = wt;
    return CoefficientVector(basis, std::move(c));
  };
  Vector lam_tail = basis->eigenvalues.tail(tail);
  auto e_normalize = [&](Vector wt) {
    double nrm = std::sqrt(((1.0 + lam_tail.array()) * wt.array().square()).sum());
    return Vector(wt / nrm);
  };

  Vector w = e_normalize(std::move(w0));
  const double* warm_s = nullptr;
  const Vector* warm_v = nullptr;
  double ws = 0.0;
  Vector wv;

  HalfSpacePoint pt = inner_maximize(lift(w), lambda, n, nl, cfg);
  int total_inner = pt.iterations;
  double step = 1.0;
  int it = 0;
  for (; it < cfg.max_outer_iter; ++it) {
    // envelope gradient: coordinates s * g_k above the gap
    Vector g = action_gradient_c(pt.u, lambda, nl);
    Vector c = pt.s * g.tail(tail);
    Vector grad = (c.array() / (1.0 + lam_tail.array())).matrix();
    grad -= c.dot(w) * w;  // tangential projection (E-metric)
    double gnorm = std::sqrt(((1.0 + lam_tail.array()) * grad.array().square()).sum());
    if (gnorm <= cfg.outer_tol * (1.0 + std::abs(pt.value))) break;

    ws = pt.s;
    wv = pt.v;
    warm_s = &ws;
    warm_v = &wv;

    bool accepted = false;
    double t = step;
    for (int bt = 0; bt < 40; ++bt) {
      Vector w_t = e_normalize(w - t * grad);
      HalfSpacePoint pt_t;
      try {
        pt_t = inner_maximize(lift(w_t), lambda, n, nl, cfg, warm_s, warm_v);
      } catch (const Error&) {
        t *= 0.5;
        continue;
      }
      total_inner += pt_t.iterations;
      if (pt_t.value <= pt.value - 1e-4 * t * gnorm * gnorm) {
        w = w_t;
        pt = pt_t;
        step = std::min(t * 2.0, 1e3);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no descent at machine-scale steps
  }
  OuterRun run;
  run.point = pt;
  run.point.iterations = total_inner;
  run.w = w;
  run.iterations = it;
  return run;
}

// Full-space Newton refinement of J'(u) = 0; reverts on failure.
inline void polish_state(CoefficientVector& u, double lambda,
                         const PowerNonlinearity& nl, double target) {
  const int N = u.basis->size();
  Matrix id = Matrix::Identity(N, N);
  Vector g = action_gradient_c(u, lambda, nl);
  double res = dual_norm(g, *u.basis);
  for (int it = 0; it < 20 && res > target; ++it) {
    Matrix h = hessian_directions(u, lambda, nl, id, u.basis->modes);
    Eigen::PartialPivLU<Matrix> lu(h);
    Vector d = lu.solve(-g);
    if (!d.allFinite()) return;
    double t = 1.0;
    bool ok = false;
    for (int bt = 0; bt < 25; ++bt) {
      CoefficientVector u_t(u.basis, u.c + t * d);
      Vector g_t = action_gradient_c(u_t, lambda, nl);
      double res_t = dual_norm(g_t, *u.basis);
      if (res_t < res) {
        u = u_t;
        g = g_t;
        res = res_t;
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) return;
  }
}

}  // namespace detail

inline GroundState outer_minimize(const EigenBasisPtr& basis, double lambda, int n,
                                  const PowerNonlinearity& nl,
                                  const SolverConfig& cfg,
                                  const Vector* warm_direction = nullptr) {
  cfg.validate();
  const int N = basis->size();
  require(n >= 0 && n < N, ErrorKind::config, "outer_minimize: bad gap index");
  double upper = basis->eigenvalues[n];
  double lower = n >= 1 ? basis->eigenvalues[n - 1] : 0.0;
  double margin = 1e-6 * (upper - (n >= 1 ? lower : std::min(lower, lambda)));
  require(lambda < upper - margin, ErrorKind::config,
          "outer_minimize: lambda too close to (or above) lambda_{n+1}");
  if (n >= 1)
    require(lambda > lower + margin, ErrorKind::config,
            "outer_minimize: lambda too close to (or below) lambda_n");

  const int tail = N - n;
  std::mt19937_64 rng(cfg.seed);

  std::vector<Vector> starts;
  if (warm_direction) {
    require(warm_direction->size() == tail, ErrorKind::config,
            "outer_minimize: warm direction has wrong dimension");
    starts.push_back(*warm_direction);
  } else {
    Vector e0 = Vector::Zero(tail);
    e0[0] = 1.0;  // zeta_{n+1}, the natural low-action direction
    starts.push_back(e0);
    for (int r = 1; r < cfg.restarts; ++r)
      starts.push_back(random_unit_vector(tail, rng));
  }

  std::optional<detail::OuterRun> best;
  for (auto& s : starts) {
    detail::OuterRun run = detail::outer_descend(basis, lambda, n, nl, cfg, s);
    if (!best || run.point.value < best->point.value) best = std::move(run);
  }

  CoefficientVector u = best->point.u;
  if (cfg.polish)
    detail::polish_state(u, lambda, nl, 0.05 * cfg.residual_tol);

  GroundState gs;
  gs.u = u;
  gs.lambda = lambda;
  gs.n = n;
  gs.action = action(u, lambda, nl);
  gs.mass = 0.5 * u.c.squaredNorm();
  gs.residual = dual_norm(action_gradient_c(u, lambda, nl), *basis);
  gs.sign_changing = classify_sign(u);
  gs.residual_above_tol = gs.residual > cfg.residual_tol;
  gs.inner_iterations = best->point.iterations;
  gs.outer_iterations = best->iterations;
  require(gs.action > 0.0, ErrorKind::solver,
          "outer_minimize: nonpositive action (no admissible maximizer found)");
  return gs;
}

}  // namespace specgap
