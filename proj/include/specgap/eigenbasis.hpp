// eigenbasis.hpp — truncated spectral representation of a nonnegative
// self-adjoint operator A with compact resolvent, plus the quadratic form
// q_lambda, the nonlinear energy I and the action J_lambda, all expressed in
// eigenbasis coordinates u = sum_k c_k zeta_k.
//
// Backends (metric_graph.hpp, torus.hpp) construct EigenBasis objects whose
// eigenfunctions are sampled on a fixed quadrature grid; every integral in
// this header is evaluated with that stored grid, so all operations are
// consistent functions of the same discrete data.

#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "specgap/common.hpp"

namespace specgap {

enum class Backend { graph, torus, square_navier };

inline std::string backend_name(Backend b) {
  switch (b) {
    case Backend::graph: return "graph";
    case Backend::torus: return "torus";
    case Backend::square_navier: return "square-navier";
  }
  return "?";
}

// Ordered eigenpairs of A with H-orthonormal eigenfunctions sampled on a
// quadrature grid. Immutable after construction; shareable across threads.
struct EigenBasis {
  Backend backend = Backend::graph;
  Vector eigenvalues;    // nondecreasing, eigenvalues[0] >= 0
  Matrix modes;          // quad_size x N, column k samples zeta_{k+1}
  Vector quad_weights;   // quadrature weights, sum = measure
  double measure = 0.0;  // mu(Omega)

  // Grid annotations (backend-dependent; used by diagnostics and IO):
  Vector node_x;             // arclength within edge (graph) / x1 (torus)
  Vector node_y;             // unused for graphs / x2 (torus)
  Eigen::VectorXi node_edge; // graph: owning edge per node; empty otherwise

  int size() const { return static_cast<int>(eigenvalues.size()); }
  int quad_size() const { return static_cast<int>(quad_weights.size()); }

  // max_{i,j} |<zeta_i, zeta_j>_H - delta_ij| under the stored quadrature.
  double orthonormality_residual() const {
    Matrix gram = modes.transpose() * quad_weights.asDiagonal() * modes;
    gram.diagonal().array() -= 1.0;
    return gram.cwiseAbs().maxCoeff();
  }
};

using EigenBasisPtr = std::shared_ptr<const EigenBasis>;

// u = sum_k c_k zeta_k in the truncated span.
struct CoefficientVector {
  EigenBasisPtr basis;
  Vector c;

  CoefficientVector() = default;
  CoefficientVector(EigenBasisPtr b, Vector coeffs)
      : basis(std::move(b)), c(std::move(coeffs)) {
    require(basis && c.size() == basis->eigenvalues.size(), ErrorKind::config,
            "coefficient vector length must equal basis truncation");
  }

  static CoefficientVector zero(EigenBasisPtr b) {
    Vector z = Vector::Zero(b->eigenvalues.size());
    return CoefficientVector(std::move(b), std::move(z));
  }
  static CoefficientVector mode(EigenBasisPtr b, int k) {
    Vector z = Vector::Zero(b->eigenvalues.size());
    z[k] = 1.0;
    return CoefficientVector(std::move(b), std::move(z));
  }

  double norm_h() const { return c.norm(); }
  double norm_e() const {
    return std::sqrt(
        (c.array().square() * (1.0 + basis->eigenvalues.array())).sum());
  }
  Vector grid_values() const { return basis->modes * c; }
};

// I(u) = (1/p) \int r(x) |u|^p with essinf r = r0 > 0.
struct PowerNonlinearity {
  double p = 4.0;
  Vector weight;       // r sampled on the quadrature grid
  double r0 = 1.0;     // min over grid
  double r_inf = 1.0;  // max over grid
  double c_I = 0.0;    // r0 mu(Omega)^{(2-p)/2} / p

  PowerNonlinearity() = default;
  PowerNonlinearity(double exponent, const EigenBasis& basis, double constant_r = 1.0)
      : PowerNonlinearity(exponent, basis,
                          Vector::Constant(basis.quad_size(), constant_r)) {}
  PowerNonlinearity(double exponent, const EigenBasis& basis, Vector r)
      : p(exponent), weight(std::move(r)) {
    require(p > 2.0, ErrorKind::config, "nonlinearity exponent must satisfy p > 2");
    require(weight.size() == basis.quad_weights.size(), ErrorKind::config,
            "weight sample count must match the quadrature grid");
    r0 = weight.minCoeff();
    r_inf = weight.maxCoeff();
    require(r0 > 0.0, ErrorKind::config, "weight must have positive essinf");
    c_I = r0 * std::pow(basis.measure, (2.0 - p) / 2.0) / p;
  }
};

// Open interval (lambda_n, lambda_{n+1}) between consecutive eigenvalues,
// counted with multiplicity. index == 0 encodes the region below lambda_1.
struct SpectralGap {
  int index = 0;
  double lower = 0.0;
  double upper = 0.0;
  double length() const { return upper - lower; }
};

struct GapScan {
  std::vector<SpectralGap> gaps;
  // True when the last reported gap's upper endpoint is the final computed
  // cluster: eigenvalues beyond the truncation could move or extend it.
  bool truncation_warning = false;
};

inline double merge_tolerance(double lambda) {
  return 1e-7 * (1.0 + std::abs(lambda));
}

// ---------------------------------------------------------------------------
// Functionals in coordinates.

// q_lambda(u) = sum_k (lambda_k - lambda) c_k^2
inline double q_lambda(const CoefficientVector& u, double lambda) {
  return ((u.basis->eigenvalues.array() - lambda) * u.c.array().square()).sum();
}

// I(u) = (1/p) sum_q w_q r_q |u_q|^p
inline double nonlinear_energy(const CoefficientVector& u,
                               const PowerNonlinearity& nl) {
  Vector vals = u.grid_values();
  return (u.basis->quad_weights.array() * nl.weight.array() *
          vals.array().abs().pow(nl.p))
             .sum() /
         nl.p;
}

// J_lambda(u) = q_lambda(u)/2 - I(u)
inline double action(const CoefficientVector& u, double lambda,
                     const PowerNonlinearity& nl) {
  return 0.5 * q_lambda(u, lambda) - nonlinear_energy(u, nl);
}

// Coordinate gradient: g_k = (lambda_k - lambda) c_k - \int r |u|^{p-2} u zeta_k
inline Vector action_gradient_c(const CoefficientVector& u, double lambda,
                                const PowerNonlinearity& nl) {
  Vector vals = u.grid_values();
  Vector fu = u.basis->quad_weights.array() * nl.weight.array() *
              vals.array().abs().pow(nl.p - 2.0) * vals.array();
  return ((u.basis->eigenvalues.array() - lambda) * u.c.array()).matrix() -
         u.basis->modes.transpose() * fu;
}

inline CoefficientVector action_gradient(const CoefficientVector& u, double lambda,
                                         const PowerNonlinearity& nl) {
  return CoefficientVector(u.basis, action_gradient_c(u, lambda, nl));
}

// Hessian of J restricted to span of the given coordinate directions.
// cols: subset of basis indices; entries H_ab = J''(u)[zeta_a, zeta_b]
//   = (lambda_a - lambda) delta_ab - (p-1) \int r |u|^{p-2} zeta_a zeta_b.
inline Matrix action_hessian_subspace(const CoefficientVector& u, double lambda,
                                      const PowerNonlinearity& nl,
                                      const std::vector<int>& cols) {
  Vector vals = u.grid_values();
  Vector diagw = u.basis->quad_weights.array() * nl.weight.array() *
                 (nl.p - 1.0) * vals.array().abs().pow(nl.p - 2.0);
  int m = static_cast<int>(cols.size());
  Matrix sub(u.basis->quad_size(), m);
  for (int j = 0; j < m; ++j) sub.col(j) = u.basis->modes.col(cols[j]);
  Matrix h = -(sub.transpose() * diagw.asDiagonal() * sub);
  for (int j = 0; j < m; ++j)
    h(j, j) += u.basis->eigenvalues[cols[j]] - lambda;
  return h;
}

// E'-norm estimate of a coordinate gradient: sup g[h] / ||h||_E over the
// truncated span = sqrt(sum g_k^2 / (1 + lambda_k)).
inline double dual_norm(const Vector& g, const EigenBasis& basis) {
  return std::sqrt((g.array().square() / (1.0 + basis.eigenvalues.array())).sum());
}

// Coordinate split u = v + w with v in E_n (first n coordinates) and
// w in E_n^perp (the rest).
inline std::pair<CoefficientVector, CoefficientVector> decompose(
    const CoefficientVector& u, int n) {
  require(n >= 0 && n < u.basis->size(), ErrorKind::config,
          "decompose: gap index must satisfy 0 <= n < N");
  Vector v = Vector::Zero(u.c.size());
  Vector w = Vector::Zero(u.c.size());
  v.head(n) = u.c.head(n);
  w.tail(u.c.size() - n) = u.c.tail(u.c.size() - n);
  return {CoefficientVector(u.basis, std::move(v)),
          CoefficientVector(u.basis, std::move(w))};
}

// ---------------------------------------------------------------------------
// Gap detection. Eigenvalues closer than the merge tolerance are treated as
// one multiple eigenvalue; gap indices count eigenvalues with multiplicity.

inline GapScan find_gaps(const EigenBasis& basis, double min_length) {
  require(basis.size() >= 2, ErrorKind::config,
          "find_gaps needs at least two eigenvalues");
  require(min_length >= 0.0, ErrorKind::config, "min_length must be >= 0");

  // Cluster boundaries: cluster_end[i] = index one past cluster i.
  std::vector<int> cluster_end;
  for (int k = 1; k < basis.size(); ++k) {
    if (basis.eigenvalues[k] - basis.eigenvalues[k - 1] >
        merge_tolerance(basis.eigenvalues[k - 1]))
      cluster_end.push_back(k);
  }
  cluster_end.push_back(basis.size());

  GapScan scan;
  double lam1 = basis.eigenvalues[0];
  if (lam1 > std::max(min_length, merge_tolerance(0.0)))
    scan.gaps.push_back({0, 0.0, lam1});

  int prev_end = cluster_end[0];
  for (std::size_t ci = 1; ci < cluster_end.size(); ++ci) {
    double lo = basis.eigenvalues[prev_end - 1];   // top of current cluster
    double hi = basis.eigenvalues[prev_end];       // bottom of next cluster
    if (hi - lo > std::max(min_length, merge_tolerance(lo)))
      scan.gaps.push_back({prev_end, lo, hi});
    prev_end = cluster_end[ci];
  }
  // Flag when the last reported gap ends at the final cluster: eigenvalues
  // beyond the truncation could sit arbitrarily close above lambda_N.
  if (!scan.gaps.empty() && cluster_end.size() >= 2) {
    int last_cluster_begin = cluster_end[cluster_end.size() - 2];
    scan.truncation_warning = scan.gaps.back().index == last_cluster_begin;
  }
  return scan;
}

}  // namespace specgap
