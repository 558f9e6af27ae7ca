// metric_graph.hpp — compact metric graphs and the Laplacian -u'' with
// self-adjoint vertex conditions (Kirchhoff / Dirichlet / delta(alpha)),
// discretized by Lagrange elements per edge and assembled as a generalized
// symmetric eigenproblem K x = lambda B x.
//
// Vertex coupling: continuity is built into the shared vertex degree of
// freedom; the Kirchhoff flux condition is natural in the weak form.
// Dirichlet rows/columns are eliminated; delta(alpha) adds alpha to the
// stiffness diagonal at the vertex.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <vector>

#include "specgap/common.hpp"
#include "specgap/eigenbasis.hpp"

namespace specgap {

struct VertexCondition {
  enum class Kind { kirchhoff, dirichlet, delta };
  Kind kind = Kind::kirchhoff;
  double alpha = 0.0;

  static VertexCondition kirchhoff() { return {Kind::kirchhoff, 0.0}; }
  static VertexCondition dirichlet() { return {Kind::dirichlet, 0.0}; }
  static VertexCondition delta(double a) { return {Kind::delta, a}; }
};

struct MetricGraph {
  struct Edge {
    int tail = 0;
    int head = 0;
    double length = 0.0;
  };

  int vertex_count = 0;
  std::vector<Edge> edges;
  std::vector<VertexCondition> conditions;  // one per vertex

  double total_length() const {
    double L = 0.0;
    for (const auto& e : edges) L += e.length;
    return L;
  }

  void validate() const {
    require(vertex_count >= 1, ErrorKind::config, "graph needs >= 1 vertex");
    require(!edges.empty(), ErrorKind::config, "graph needs >= 1 edge");
    require(static_cast<int>(conditions.size()) == vertex_count,
            ErrorKind::config, "graph needs one condition per vertex");
    for (const auto& e : edges) {
      require(e.length > 0.0, ErrorKind::config, "edge lengths must be positive");
      require(e.tail >= 0 && e.tail < vertex_count && e.head >= 0 &&
                  e.head < vertex_count,
              ErrorKind::config, "edge endpoints must reference vertices");
    }
    // connectivity (vertices with no incident edge are rejected)
    std::vector<int> comp(vertex_count, -1);
    std::vector<int> stack{edges[0].tail};
    comp[edges[0].tail] = 0;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (const auto& e : edges) {
        for (int w : {e.tail == v ? e.head : -1, e.head == v ? e.tail : -1}) {
          if (w >= 0 && comp[w] < 0) {
            comp[w] = 0;
            stack.push_back(w);
          }
        }
      }
    }
    for (int v = 0; v < vertex_count; ++v)
      require(comp[v] == 0, ErrorKind::config, "graph must be connected");
  }

  // Convenience builders used throughout the tests and the CLI.
  static MetricGraph interval(double length, VertexCondition left,
                              VertexCondition right) {
    MetricGraph g;
    g.vertex_count = 2;
    g.edges = {{0, 1, length}};
    g.conditions = {left, right};
    return g;
  }
  // Star with `arms` edges of the given length, Kirchhoff center (vertex 0).
  static MetricGraph star(int arms, double arm_length, VertexCondition tip) {
    MetricGraph g;
    g.vertex_count = arms + 1;
    g.conditions.assign(arms + 1, VertexCondition::kirchhoff());
    for (int a = 1; a <= arms; ++a) {
      g.edges.push_back({0, a, arm_length});
      g.conditions[a] = tip;
    }
    return g;
  }
};

// Galerkin pair (K, B) plus the degree-of-freedom layout needed to evaluate
// discrete functions anywhere on the graph.
struct DiscreteOperatorPair {
  MetricGraph graph;
  int order = 4;           // Lagrange element order per edge
  int elements_per_edge = 0;
  Eigen::SparseMatrix<double> stiffness;  // K
  Eigen::SparseMatrix<double> mass;       // B
  int dof_count = 0;
  // edge_node_dof[e][j] = dof of the j-th node along edge e (j = 0..order*nel),
  // or -1 for a node eliminated by a Dirichlet condition.
  std::vector<std::vector<int>> edge_node_dof;
  std::vector<int> vertex_dof;  // -1 for Dirichlet vertices
};

namespace detail {

// Element stiffness/mass for Lagrange order k on the reference cell [0, 1],
// nodes equispaced. Exact via Gauss-Legendre (degree 2k integrands).
struct ElementMatrices {
  Matrix stiffness;  // scaled by 1/h on use
  Matrix mass;       // scaled by h on use
};

inline double lagrange_ref(int k, int i, double x) {
  double v = 1.0;
  for (int j = 0; j <= k; ++j) {
    if (j == i) continue;
    v *= (x * k - j) / double(i - j);
  }
  return v;
}

inline double lagrange_ref_deriv(int k, int i, double x) {
  // d/dx of the Lagrange basis through nodes j/k, j = 0..k.
  double sum = 0.0;
  for (int m = 0; m <= k; ++m) {
    if (m == i) continue;
    double term = double(k) / double(i - m);
    for (int j = 0; j <= k; ++j) {
      if (j == i || j == m) continue;
      term *= (x * k - j) / double(i - j);
    }
    sum += term;
  }
  return sum;
}

inline ElementMatrices element_matrices(int k) {
  auto rule = gauss_legendre(k + 3);
  ElementMatrices em;
  em.stiffness = Matrix::Zero(k + 1, k + 1);
  em.mass = Matrix::Zero(k + 1, k + 1);
  for (int q = 0; q < rule.nodes.size(); ++q) {
    double x = 0.5 * (rule.nodes[q] + 1.0);
    double w = 0.5 * rule.weights[q];
    for (int a = 0; a <= k; ++a) {
      double pa = lagrange_ref(k, a, x), da = lagrange_ref_deriv(k, a, x);
      for (int b = 0; b <= k; ++b) {
        em.mass(a, b) += w * pa * lagrange_ref(k, b, x);
        em.stiffness(a, b) += w * da * lagrange_ref_deriv(k, b, x);
      }
    }
  }
  return em;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Assembly. `elements_per_edge` subdivides every edge uniformly; eigenvalue
// error decays like h^{2*order} for the low modes.

inline DiscreteOperatorPair assemble(const MetricGraph& graph,
                                     int elements_per_edge, int order = 4) {
  graph.validate();
  require(elements_per_edge >= 3, ErrorKind::config,
          "assemble: need >= 3 elements per edge");
  require(order >= 1 && order <= 8, ErrorKind::config,
          "assemble: element order out of range");

  DiscreteOperatorPair pair;
  pair.graph = graph;
  pair.order = order;
  pair.elements_per_edge = elements_per_edge;

  const int k = order;
  const int nel = elements_per_edge;
  const int nodes_per_edge = k * nel + 1;

  // Number the dofs: shared vertex values first (skipping Dirichlet), then
  // edge-interior nodes.
  pair.vertex_dof.assign(graph.vertex_count, -1);
  int next = 0;
  for (int v = 0; v < graph.vertex_count; ++v)
    if (graph.conditions[v].kind != VertexCondition::Kind::dirichlet)
      pair.vertex_dof[v] = next++;
  pair.edge_node_dof.resize(graph.edges.size());
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    auto& dofs = pair.edge_node_dof[e];
    dofs.assign(nodes_per_edge, -1);
    dofs.front() = pair.vertex_dof[graph.edges[e].tail];
    dofs.back() = pair.vertex_dof[graph.edges[e].head];
    for (int j = 1; j + 1 < nodes_per_edge; ++j) dofs[j] = next++;
  }
  pair.dof_count = next;

  auto em = detail::element_matrices(k);
  std::vector<Eigen::Triplet<double>> tk, tb;
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    double h = graph.edges[e].length / nel;
    for (int el = 0; el < nel; ++el) {
      for (int a = 0; a <= k; ++a) {
        int ia = pair.edge_node_dof[e][el * k + a];
        if (ia < 0) continue;
        for (int b = 0; b <= k; ++b) {
          int ib = pair.edge_node_dof[e][el * k + b];
          if (ib < 0) continue;
          tk.emplace_back(ia, ib, em.stiffness(a, b) / h);
          tb.emplace_back(ia, ib, em.mass(a, b) * h);
        }
      }
    }
  }
  for (int v = 0; v < graph.vertex_count; ++v)
    if (graph.conditions[v].kind == VertexCondition::Kind::delta)
      tk.emplace_back(pair.vertex_dof[v], pair.vertex_dof[v],
                      graph.conditions[v].alpha);

  pair.stiffness.resize(pair.dof_count, pair.dof_count);
  pair.mass.resize(pair.dof_count, pair.dof_count);
  pair.stiffness.setFromTriplets(tk.begin(), tk.end());
  pair.mass.setFromTriplets(tb.begin(), tb.end());
  return pair;
}

// ---------------------------------------------------------------------------
// Discrete representation of computed eigenfunctions: nodal values per dof,
// evaluable anywhere on an edge through the element polynomials.

struct GraphBasis {
  EigenBasisPtr basis;
  std::shared_ptr<const DiscreteOperatorPair> fem;
  Matrix nodal;  // dof_count x N, B-orthonormal columns

  // Values of sum_k c_k zeta_k at `npts` equispaced points (endpoints
  // included) along edge e.
  Vector sample_on_edge(const Vector& coeffs, int e, int npts) const {
    Vector nodal_u = nodal * coeffs;
    Vector out(npts);
    const int k = fem->order;
    const int nel = fem->elements_per_edge;
    double len = fem->graph.edges[e].length;
    for (int i = 0; i < npts; ++i) {
      double x = len * i / (npts - 1.0);
      int el = std::min<int>(nel - 1, static_cast<int>(x / len * nel));
      double xi = (x / len * nel) - el;
      double val = 0.0;
      for (int a = 0; a <= k; ++a) {
        int dof = fem->edge_node_dof[e][el * k + a];
        if (dof >= 0) val += nodal_u[dof] * detail::lagrange_ref(k, a, xi);
      }
      out[i] = val;
    }
    return out;
  }

  // Outgoing derivative sum at a vertex, one-sided 3-point stencils on the
  // nearest FEM nodes of each incident edge. Returns sum_e u_e'(v) (minus
  // alpha_v u(v) for delta vertices).
  double vertex_flux(const Vector& nodal_u, int v) const {
    const int k = fem->order;
    double sum = 0.0;
    auto node_val = [&](int e, int j) {
      int dof = fem->edge_node_dof[e][j];
      return dof >= 0 ? nodal_u[dof] : 0.0;
    };
    int last = k * fem->elements_per_edge;
    for (std::size_t e = 0; e < fem->graph.edges.size(); ++e) {
      double h = fem->graph.edges[e].length / fem->elements_per_edge / k;
      if (fem->graph.edges[e].tail == v)
        sum += (-3.0 * node_val(e, 0) + 4.0 * node_val(e, 1) - node_val(e, 2)) /
               (2.0 * h);
      if (fem->graph.edges[e].head == v)
        sum += (-3.0 * node_val(e, last) + 4.0 * node_val(e, last - 1) -
                node_val(e, last - 2)) /
               (2.0 * h);
    }
    if (fem->graph.conditions[v].kind == VertexCondition::Kind::delta) {
      int dof = fem->vertex_dof[v];
      sum -= fem->graph.conditions[v].alpha * (dof >= 0 ? nodal_u[dof] : 0.0);
    }
    return sum;
  }
};

// Generalized symmetric eigensolve; eigenfunctions resampled onto a composite
// Gauss-Legendre grid (points_per_element nodes per element, exact for the
// quadratic functionals and for |u|^p with p <= 6 at the default).
inline GraphBasis graph_eigenbasis(const DiscreteOperatorPair& pair, int count,
                                   int points_per_element = 12) {
  require(count >= 1, ErrorKind::config, "eigenbasis: count must be >= 1");
  require(2 * count <= pair.dof_count, ErrorKind::solver,
          "eigenbasis: count exceeds half the degrees of freedom; refine the mesh");

  Matrix kd = Matrix(pair.stiffness);
  Matrix bd = Matrix(pair.mass);
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(kd, bd);
  require(es.info() == Eigen::Success, ErrorKind::solver,
          "generalized eigensolve failed");

  Matrix vecs = es.eigenvectors().leftCols(count);
  Vector vals = es.eigenvalues().head(count);
  // Clamp tiny negative roundoff for Kirchhoff-type zero modes.
  for (int i = 0; i < vals.size(); ++i)
    if (vals[i] < 0.0 && vals[i] > -1e-9) vals[i] = 0.0;

  // Joint re-orthonormalization inside merge-tolerance clusters keeps E_n
  // projections stable when multiple eigenvalues split numerically.
  int c0 = 0;
  while (c0 < count) {
    int c1 = c0 + 1;
    while (c1 < count && vals[c1] - vals[c1 - 1] <= merge_tolerance(vals[c1 - 1]))
      ++c1;
    if (c1 - c0 > 1) {
      Matrix block = vecs.middleCols(c0, c1 - c0);
      Matrix gram = block.transpose() * bd * block;
      Eigen::LLT<Matrix> llt(gram);
      vecs.middleCols(c0, c1 - c0) =
          llt.matrixL().solve(block.transpose()).transpose();
    }
    c0 = c1;
  }

  // Quadrature grid and resampling.
  const int k = pair.order;
  const int nel = pair.elements_per_edge;
  const int q = points_per_element;
  auto rule = gauss_legendre(q);
  const int edges = static_cast<int>(pair.graph.edges.size());
  const int total_nodes = edges * nel * q;

  auto basis = std::make_shared<EigenBasis>();
  basis->backend = Backend::graph;
  basis->eigenvalues = vals;
  basis->quad_weights.resize(total_nodes);
  basis->node_x.resize(total_nodes);
  basis->node_edge.resize(total_nodes);
  basis->modes.resize(total_nodes, count);

  // Lagrange shapes at the reference quadrature nodes, computed once.
  Matrix shapes(q, k + 1);
  for (int iq = 0; iq < q; ++iq) {
    double xi = 0.5 * (rule.nodes[iq] + 1.0);
    for (int a = 0; a <= k; ++a) shapes(iq, a) = detail::lagrange_ref(k, a, xi);
  }

  int node = 0;
  for (int e = 0; e < edges; ++e) {
    double h = pair.graph.edges[e].length / nel;
    for (int el = 0; el < nel; ++el) {
      for (int iq = 0; iq < q; ++iq, ++node) {
        double xi = 0.5 * (rule.nodes[iq] + 1.0);
        basis->quad_weights[node] = 0.5 * rule.weights[iq] * h;
        basis->node_x[node] = (el + xi) * h;
        basis->node_edge[node] = e;
        for (int m = 0; m < count; ++m) {
          double val = 0.0;
          for (int a = 0; a <= k; ++a) {
            int dof = pair.edge_node_dof[e][el * k + a];
            if (dof >= 0) val += vecs(dof, m) * shapes(iq, a);
          }
          basis->modes(node, m) = val;
        }
      }
    }
  }
  basis->measure = basis->quad_weights.sum();

  // Reproducible sign: first nonzero quadrature sample positive.
  for (int m = 0; m < count; ++m) {
    double scale = basis->modes.col(m).cwiseAbs().maxCoeff();
    for (int i = 0; i < total_nodes; ++i) {
      if (std::abs(basis->modes(i, m)) > 1e-12 * scale) {
        if (basis->modes(i, m) < 0.0) {
          basis->modes.col(m) *= -1.0;
          vecs.col(m) *= -1.0;
        }
        break;
      }
    }
  }

  GraphBasis gb;
  gb.basis = std::move(basis);
  gb.fem = std::make_shared<DiscreteOperatorPair>(pair);
  gb.nodal = std::move(vecs);
  return gb;
}

// ---------------------------------------------------------------------------
// Diagnostics.

// N(K) / ((L/pi) sqrt(K)) with N(K) = #{k : lambda_k <= K}.
inline double weyl_ratio(const EigenBasis& basis, double K, double total_length) {
  require(K > 0.0, ErrorKind::config, "weyl_ratio: K must be positive");
  require(K <= basis.eigenvalues[basis.size() - 1], ErrorKind::solver,
          "weyl_ratio: K exceeds the largest computed eigenvalue (truncation clip)");
  int count = 0;
  for (int i = 0; i < basis.size(); ++i)
    if (basis.eigenvalues[i] <= K) ++count;
  return count / ((total_length / M_PI) * std::sqrt(K));
}

// Smallest 1-based k whose eigenfunction (sign-flipped to nonnegative mean)
// is >= -1e-6 * ||zeta_k||_inf at all quadrature nodes.
inline std::optional<int> positive_eigenfunction_index(const EigenBasis& basis) {
  for (int m = 0; m < basis.size(); ++m) {
    Vector col = basis.modes.col(m);
    double mean = basis.quad_weights.dot(col);
    if (mean < 0.0) col = -col;
    double sup = col.cwiseAbs().maxCoeff();
    if (col.minCoeff() >= -1e-6 * sup) return m + 1;
  }
  return std::nullopt;
}

}  // namespace specgap
