// torus.hpp — exact eigenstructure of the bilaplacian on the flat 2-torus
// S^1 x S^1 (and of the square (0,pi)^2 with Navier conditions, which reuses
// pure sine modes), sums-of-two-squares multiplicities, the spectral tail
// sums d(n, lambda) with certified remainder bounds, and the closed-form
// action / L^2 estimates attached to the ell-parameterized gap chain.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "specgap/common.hpp"
#include "specgap/eigenbasis.hpp"

namespace specgap {

// r2(j) = #{(k1,k2) in Z^2 : j = k1^2 + k2^2}, by direct enumeration.
inline std::int64_t r2(std::int64_t j) {
  require(j >= 0, ErrorKind::config, "r2: argument must be >= 0");
  std::int64_t count = 0;
  std::int64_t kmax = static_cast<std::int64_t>(std::sqrt(double(j))) + 1;
  while (kmax * kmax > j) --kmax;
  for (std::int64_t k1 = -kmax; k1 <= kmax; ++k1) {
    std::int64_t rem = j - k1 * k1;
    std::int64_t s = static_cast<std::int64_t>(std::sqrt(double(rem)));
    while (s * s > rem) --s;
    while ((s + 1) * (s + 1) <= rem) ++s;
    if (s * s == rem) count += (s == 0) ? 1 : 2;
  }
  return count;
}

inline std::int64_t divisor_count(std::int64_t j) {
  require(j >= 1, ErrorKind::config, "divisor_count: argument must be >= 1");
  std::int64_t d = 0;
  for (std::int64_t a = 1; a * a <= j; ++a) {
    if (j % a == 0) d += (a * a == j) ? 1 : 2;
  }
  return d;
}

// Classical bound r2(j) <= 4 d(j); holds for every j >= 1.
inline bool r2_divisor_bound_check(std::int64_t j) {
  return r2(j) <= 4 * divisor_count(j);
}

// ---------------------------------------------------------------------------
// Fourier modes. Gamma_0 = 1/sqrt(2 pi), Gamma_k = 1/sqrt(pi) otherwise;
// psi_{(k1,k2)} is the product of sin/cos factors selected by the signs of
// k1 and k2, L^2-normalized with ||psi||_inf <= 1/pi.

struct FourierMode {
  int k1 = 0;
  int k2 = 0;
  double eigenvalue = 0.0;  // (k1^2+k2^2)^2, or k1^2+k2^2 for the Laplacian variant
};

inline double torus_gamma(int k) {
  return k == 0 ? 1.0 / std::sqrt(2.0 * M_PI) : 1.0 / std::sqrt(M_PI);
}

inline double torus_mode_value(int k1, int k2, double x1, double x2) {
  double f1 = k1 >= 1 ? std::sin(k1 * x1) : std::cos(k1 * x1);
  double f2 = k2 >= 1 ? std::sin(k2 * x2) : std::cos(k2 * x2);
  return torus_gamma(k1) * torus_gamma(k2) * f1 * f2;
}

// Uniform L^infty bound of every eigenfunction (assumption (I6) constant).
inline constexpr double torus_c_inf() { return 1.0 / M_PI; }

struct TorusBasis {
  EigenBasisPtr basis;
  std::vector<FourierMode> modes;  // aligned with basis columns
};

// All modes with k1^2 + k2^2 <= j_cut, sorted by eigenvalue then (k1, k2)
// lexicographically; multiplicity of eigenvalue j^2 equals r2(j). The cut is
// raised until at least `min_modes` modes are present (complete eigenvalue
// clusters are always kept together).
inline TorusBasis torus_eigenbasis(int ell_max, int min_modes = 0,
                                   int grid_per_dim = 0) {
  require(ell_max >= 2, ErrorKind::config, "torus_eigenbasis: ell_max >= 2");

  std::int64_t j_cut = static_cast<std::int64_t>(ell_max) * ell_max + 12;
  auto count_modes = [](std::int64_t jc) {
    std::int64_t c = 0;
    for (std::int64_t j = 0; j <= jc; ++j) c += r2(j);
    return c;
  };
  while (count_modes(j_cut) < min_modes) j_cut += 8;

  std::vector<FourierMode> modes;
  int kmax = static_cast<int>(std::sqrt(double(j_cut))) + 1;
  for (int k1 = -kmax; k1 <= kmax; ++k1)
    for (int k2 = -kmax; k2 <= kmax; ++k2) {
      std::int64_t j = std::int64_t(k1) * k1 + std::int64_t(k2) * k2;
      if (j <= j_cut)
        modes.push_back({k1, k2, double(j) * double(j)});
    }
  std::sort(modes.begin(), modes.end(), [](const FourierMode& a, const FourierMode& b) {
    if (a.eigenvalue != b.eigenvalue) return a.eigenvalue < b.eigenvalue;
    if (a.k1 != b.k1) return a.k1 < b.k1;
    return a.k2 < b.k2;
  });

  int retained_kmax = 0;
  for (const auto& m : modes)
    retained_kmax = std::max({retained_kmax, std::abs(m.k1), std::abs(m.k2)});
  int G = grid_per_dim > 0 ? grid_per_dim : std::max(32, 8 * retained_kmax);

  auto basis = std::make_shared<EigenBasis>();
  basis->backend = Backend::torus;
  const int N = static_cast<int>(modes.size());
  const int Q = G * G;
  basis->eigenvalues.resize(N);
  for (int m = 0; m < N; ++m) basis->eigenvalues[m] = modes[m].eigenvalue;
  basis->quad_weights = Vector::Constant(Q, (2.0 * M_PI / G) * (2.0 * M_PI / G));
  basis->node_x.resize(Q);
  basis->node_y.resize(Q);
  basis->modes.resize(Q, N);
  for (int i = 0; i < G; ++i) {
    double x1 = 2.0 * M_PI * i / G;
    for (int j = 0; j < G; ++j) {
      double x2 = 2.0 * M_PI * j / G;
      int q = i * G + j;
      basis->node_x[q] = x1;
      basis->node_y[q] = x2;
      for (int m = 0; m < N; ++m)
        basis->modes(q, m) = torus_mode_value(modes[m].k1, modes[m].k2, x1, x2);
    }
  }
  basis->measure = basis->quad_weights.sum();  // 4 pi^2

  TorusBasis tb;
  tb.basis = std::move(basis);
  tb.modes = std::move(modes);
  return tb;
}

// Square (0,pi)^2 with Navier conditions: sine modes (2/pi) sin(k1 x) sin(k2 y),
// k_i >= 1, bilaplacian eigenvalues (k1^2+k2^2)^2. Interior uniform grid keeps
// the discrete sine orthogonality exact.
inline TorusBasis square_navier_eigenbasis(int k_cut, int min_modes = 0,
                                           int grid_per_dim = 0) {
  require(k_cut >= 2, ErrorKind::config, "square_navier_eigenbasis: k_cut >= 2");

  std::vector<FourierMode> modes;
  int kmax = k_cut;
  auto build = [&](int km) {
    modes.clear();
    for (int k1 = 1; k1 <= km; ++k1)
      for (int k2 = 1; k2 <= km; ++k2) {
        double j = double(k1) * k1 + double(k2) * k2;
        if (j <= double(km) * km)
          modes.push_back({k1, k2, j * j});
      }
  };
  build(kmax);
  while (static_cast<int>(modes.size()) < min_modes) build(++kmax);
  std::sort(modes.begin(), modes.end(), [](const FourierMode& a, const FourierMode& b) {
    if (a.eigenvalue != b.eigenvalue) return a.eigenvalue < b.eigenvalue;
    if (a.k1 != b.k1) return a.k1 < b.k1;
    return a.k2 < b.k2;
  });

  int G = grid_per_dim > 0 ? grid_per_dim : std::max(32, 8 * kmax);
  auto basis = std::make_shared<EigenBasis>();
  basis->backend = Backend::square_navier;
  const int N = static_cast<int>(modes.size());
  const int Q = (G - 1) * (G - 1);
  basis->eigenvalues.resize(N);
  for (int m = 0; m < N; ++m) basis->eigenvalues[m] = modes[m].eigenvalue;
  basis->quad_weights = Vector::Constant(Q, (M_PI / G) * (M_PI / G));
  basis->node_x.resize(Q);
  basis->node_y.resize(Q);
  basis->modes.resize(Q, N);
  int q = 0;
  for (int i = 1; i < G; ++i) {
    double x1 = M_PI * i / G;
    for (int j = 1; j < G; ++j, ++q) {
      double x2 = M_PI * j / G;
      basis->node_x[q] = x1;
      basis->node_y[q] = x2;
      for (int m = 0; m < N; ++m)
        basis->modes(q, m) =
            (2.0 / M_PI) * std::sin(modes[m].k1 * x1) * std::sin(modes[m].k2 * x2);
    }
  }
  basis->measure = basis->quad_weights.sum();  // pi^2

  TorusBasis tb;
  tb.basis = std::move(basis);
  tb.modes = std::move(modes);
  return tb;
}

// ---------------------------------------------------------------------------
// The ell-parameterized gap chain: lambda_{n_ell + 1} = ell^4 and the probe
// value lambda(ell) = (ell^2 - 1)^2, with gap length exactly 2 ell^2 + 1.

struct GapChainRecord {
  int ell = 0;
  double lambda_upper = 0.0;   // ell^4
  double lambda_probe = 0.0;   // (ell^2-1)^2
  double gap_length = 0.0;     // 2 ell^2 + 1
  double lambda_lower = 0.0;   // actual lambda_{n_ell} (largest eigenvalue < ell^4)
  std::int64_t n = 0;          // index: #eigenvalues < ell^4, with multiplicity
};

inline GapChainRecord gap_chain_record(int ell) {
  require(ell >= 2, ErrorKind::config, "gap_chain_record: ell >= 2");
  GapChainRecord rec;
  rec.ell = ell;
  double l2 = double(ell) * ell;
  rec.lambda_upper = l2 * l2;
  rec.lambda_probe = (l2 - 1.0) * (l2 - 1.0);
  rec.gap_length = 2.0 * l2 + 1.0;
  std::int64_t jl2 = std::int64_t(ell) * ell;
  std::int64_t below = 0, last_rep = 0;
  for (std::int64_t j = 0; j < jl2; ++j) {
    std::int64_t r = r2(j);
    if (r > 0) {
      below += r;
      last_rep = j;
    }
  }
  rec.n = below;
  rec.lambda_lower = double(last_rep) * double(last_rep);
  return rec;
}

// ---------------------------------------------------------------------------
// d(n, lambda) = sum_{k > n} 1/(lambda_k - lambda) over the exact torus
// spectrum, split at the cutoff J:
//   value      = sum_{j <= J, j^2 >= lambda_next} r2(j) / (j^2 - lambda)
//   tail_bound = 32 / sqrt(J), from r2(j) <= 4 d(j) <= 8 sqrt(j) and integral
//                comparison (valid when J^2 > 2 lambda).
// The two fields give the certified enclosure [value, value + tail_bound].

struct TailSum {
  double value = 0.0;
  double tail_bound = 0.0;
  double upper() const { return value + tail_bound; }
};

inline TailSum tail_sum_d(double lambda_next, double lambda, std::int64_t J) {
  require(lambda < lambda_next, ErrorKind::config,
          "tail_sum_d: need lambda < lambda_{n+1}");
  require(double(J) * double(J) > 2.0 * lambda, ErrorKind::config,
          "tail_sum_d: cutoff must satisfy J^2 > 2 lambda");
  TailSum ts;
  std::int64_t j0 = static_cast<std::int64_t>(std::ceil(std::sqrt(lambda_next) - 1e-9));
  for (std::int64_t j = j0; j <= J; ++j) {
    std::int64_t r = r2(j);
    if (r == 0) continue;
    // Enumerated confirmation of the tail majorant r2 <= 8 sqrt(j).
    require(double(r) <= 8.0 * std::sqrt(double(j)) + 1e-9, ErrorKind::solver,
            "tail_sum_d: r2(j) <= 8 sqrt(j) violated (impossible)");
    ts.value += double(r) / (double(j) * double(j) - lambda);
  }
  ts.tail_bound = 32.0 / std::sqrt(double(J));
  require(ts.tail_bound <= ts.value || ts.value == 0.0, ErrorKind::solver,
          "tail_sum_d: cutoff too small (tail bound exceeds partial sum)");
  return ts;
}

// ---------------------------------------------------------------------------
// Closed-form estimates.

// c_lambda <= (p-2) / (2 c_I^{2/(p-2)} p^{p/(p-2)}) (lambda_{n+1}-lambda)^{p/(p-2)}
inline double action_upper_bound(double p, double c_I, const SpectralGap& gap,
                                 double lambda) {
  require(p > 2.0 && c_I > 0.0, ErrorKind::config,
          "action_upper_bound: need p > 2 and c_I > 0");
  require(lambda > gap.lower && lambda < gap.upper, ErrorKind::config,
          "action_upper_bound: lambda must lie inside the gap");
  double e = p / (p - 2.0);
  return (p - 2.0) / (2.0 * std::pow(c_I, 2.0 / (p - 2.0)) * std::pow(p, e)) *
         std::pow(gap.upper - lambda, e);
}

// Lower bound for the maximal L^2 norm of ground states over the gap,
// evaluated at a probe lambda in [lambda_n, lambda_{n+1}). Pass the certified
// upper end of the d-enclosure to keep the bound rigorous.
//   p  > 4: [C^2 C_p (lambda_{n+1}-lambda)^{p(p-4)/(p-2)^2} d]^{-(p-2)/4},
//           C_p = ||r||_inf r0^{-p(p-4)/(p-2)^2} mu^{(p-4)/(p-2)}
//   p <= 4: [C^2 C_p d]^{-1/(p-2)},  C_p = ||r||_inf mu^{(4-p)/2}
inline double l2_lower_bound(double p, double r_inf, double r0, double measure,
                             double c_inf, double lambda_next_minus_lambda,
                             double d_value) {
  require(p > 2.0 && d_value > 0.0 && lambda_next_minus_lambda > 0.0,
          ErrorKind::config, "l2_lower_bound: invalid arguments");
  double c2 = c_inf * c_inf;
  if (p > 4.0) {
    double theta = p * (p - 4.0) / ((p - 2.0) * (p - 2.0));
    double cp = r_inf * std::pow(r0, -theta) * std::pow(measure, (p - 4.0) / (p - 2.0));
    return std::pow(c2 * cp * std::pow(lambda_next_minus_lambda, theta) * d_value,
                    -(p - 2.0) / 4.0);
  }
  double cp = r_inf * std::pow(measure, (4.0 - p) / 2.0);
  return std::pow(c2 * cp * d_value, -1.0 / (p - 2.0));
}

// ||v||_inf^2 <= C^2 d(n, lambda) q_lambda(v) for v supported above the gap.
// Evaluates both sides on the grid with the certified d-enclosure upper end.
inline bool linf_tail_inequality_check(const CoefficientVector& v, int n,
                                       double lambda, double c_inf,
                                       const TailSum& d) {
  require(n == 0 || v.c.head(n).cwiseAbs().maxCoeff() == 0.0, ErrorKind::config,
          "linf_tail_inequality_check: v must be supported above the gap index");
  double lhs = v.grid_values().cwiseAbs().maxCoeff();
  double rhs = c_inf * c_inf * d.upper() * q_lambda(v, lambda);
  return lhs * lhs <= rhs * (1.0 + 1e-12);
}

}  // namespace specgap
