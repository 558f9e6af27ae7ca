// common.hpp — shared error types and small numerical utilities.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace specgap {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Error categories map onto CLI exit codes (see tools/).
enum class ErrorKind {
  config,        // bad input file / invalid parameters        -> exit 2
  solver,        // numerical failure (nonconvergence, guards) -> exit 3
  tolerance,     // result produced but above tolerance        -> exit 4
  out_of_range,  // requested target outside achievable range  -> exit 5
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) fail(kind, msg);
}

// ---------------------------------------------------------------------------
// Gauss-Legendre rules on [-1, 1], computed by Newton iteration on P_n.
// Exact for polynomials of degree <= 2n-1.

struct QuadratureRule {
  Vector nodes;    // ascending in (-1, 1)
  Vector weights;  // positive, sum = 2
};

inline QuadratureRule gauss_legendre(int n) {
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Chebyshev-based initial guess, then Newton on P_n(x) = 0.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.nodes[n - 1 - i] = x;
    r.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Bisection on a bracketed sign change; assumes f(lo) and f(hi) have
// opposite signs (or one is zero). Converges to ~1 ulp of the root.

template <class F>
double bisect(F&& f, double lo, double hi, int max_iter = 200) {
  double flo = f(lo);
  if (flo == 0.0) return lo;
  for (int it = 0; it < max_iter; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) return mid;
    double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Deterministic RNG helpers (all randomized pieces of the library are seeded).

inline Vector random_unit_vector(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
  double norm = v.norm();
  if (norm == 0.0) {
    v.setZero();
    v[0] = 1.0;
    return v;
  }
  return v / norm;
}

// ---------------------------------------------------------------------------
// parallel_for: run f(i) for i in [0, count) over `threads` workers.
// threads <= 1 (or count < 2) degenerates to a serial loop.

inline int env_thread_count() {
  if (const char* s = std::getenv("SPECGAP_THREADS")) {
    int n = std::atoi(s);
    if (n >= 1) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

inline void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& f,
                         int threads = env_thread_count()) {
  if (threads <= 1 || count < 2) {
    for (std::int64_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  std::int64_t chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    std::int64_t begin = t * chunk;
    std::int64_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, t, begin, end] {
      try {
        for (std::int64_t i = begin; i < end; ++i) f(i);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace specgap
