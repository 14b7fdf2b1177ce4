#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "physnet/network.hpp"

namespace physnet {

// Grounded weighted-Laplacian system for the node pressures. The matrix is
// stored ungrounded (symmetric, zero row sums); solve_pressures pins the
// ground node to zero by reducing the system.
struct LinearSystem {
  int dimension = 0;
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
  NodeId ground = 0;
};

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Direct factorization below this size, preconditioned CG above it.
inline constexpr int kDirectSolveLimit = 100000;
inline constexpr double kResidualTol = 1e-9;

inline NodeId default_ground(const NetworkInstance& inst) {
  if (inst.demands.empty())
    throw std::invalid_argument("default_ground: instance has no retailers");
  return inst.demands.rbegin()->first;  // highest-numbered retailer
}

// Each directed link acts as an undirected conductor of conductance D/L;
// injections are +total demand at the source and -demand at each retailer.
inline LinearSystem assemble_system(const NetworkInstance& inst, std::span<const double> D,
                                    std::span<const double> L,
                                    std::optional<NodeId> ground = std::nullopt) {
  const std::size_t n_links = inst.links.size();
  if (D.size() != n_links || L.size() != n_links)
    throw std::invalid_argument("assemble_system: need one D and one L per link");
  for (std::size_t a = 0; a < n_links; ++a)
    if (!(D[a] > 0.0) || !(L[a] > 0.0))
      throw std::invalid_argument("assemble_system: conductivities and lengths must be > 0");

  LinearSystem sys;
  sys.dimension = inst.n_nodes;
  sys.ground = ground ? *ground : default_ground(inst);
  if (sys.ground < 0 || sys.ground >= inst.n_nodes)
    throw std::invalid_argument("assemble_system: ground node out of range");

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * n_links);
  for (const Link& l : inst.links) {
    const double w = D[static_cast<std::size_t>(l.id)] / L[static_cast<std::size_t>(l.id)];
    trip.emplace_back(l.tail, l.tail, w);
    trip.emplace_back(l.head, l.head, w);
    trip.emplace_back(l.tail, l.head, -w);
    trip.emplace_back(l.head, l.tail, -w);
  }
  sys.matrix.resize(inst.n_nodes, inst.n_nodes);
  sys.matrix.setFromTriplets(trip.begin(), trip.end());

  sys.rhs = Eigen::VectorXd::Zero(inst.n_nodes);
  sys.rhs[inst.source] += inst.total_demand();
  for (const auto& [node, d] : inst.demands) sys.rhs[node] -= d;
  return sys;
}

namespace detail {

// Connected components of the matrix graph, for singularity diagnostics.
inline std::vector<int> matrix_components(const Eigen::SparseMatrix<double>& m) {
  const int n = static_cast<int>(m.rows());
  std::vector<int> comp(n, -1);
  int next = 0;
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (comp[s] != -1) continue;
    comp[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (Eigen::SparseMatrix<double>::InnerIterator it(m, v); it; ++it)
        if (it.row() != v && comp[it.row()] == -1) {
          comp[it.row()] = next;
          stack.push_back(static_cast<int>(it.row()));
        }
    }
    ++next;
  }
  return comp;
}

inline void throw_if_groundless_component(const LinearSystem& sys) {
  std::vector<int> comp = matrix_components(sys.matrix);
  const int gc = comp[sys.ground];
  std::vector<int> lost;
  for (int v = 0; v < sys.dimension; ++v)
    if (comp[v] != gc) lost.push_back(v);
  if (!lost.empty()) {
    std::string msg = "solve_pressures: connected component {";
    for (std::size_t i = 0; i < lost.size(); ++i)
      msg += (i ? "," : "") + std::to_string(lost[i]);
    msg += "} has no ground node";
    throw SingularSystemError(msg);
  }
}

}  // namespace detail

// Pressures with p[ground] = 0. Verifies the residual of the full system
// against kResidualTol before returning.
inline std::vector<double> solve_pressures(const LinearSystem& sys) {
  const int n = sys.dimension;
  if (sys.ground < 0 || sys.ground >= n)
    throw std::invalid_argument("solve_pressures: ground node out of range");

  // reduced system without the ground row/column
  std::vector<int> to_reduced(n, -1);
  int k = 0;
  for (int v = 0; v < n; ++v)
    if (v != sys.ground) to_reduced[v] = k++;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(sys.matrix.nonZeros()));
  for (int col = 0; col < n; ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.matrix, col); it; ++it)
      if (it.row() != sys.ground && col != sys.ground)
        trip.emplace_back(to_reduced[it.row()], to_reduced[col], it.value());
  Eigen::SparseMatrix<double> reduced(n - 1, n - 1);
  reduced.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd rhs_r(n - 1);
  for (int v = 0; v < n; ++v)
    if (v != sys.ground) rhs_r[to_reduced[v]] = sys.rhs[v];

  Eigen::VectorXd x;
  if (n - 1 <= kDirectSolveLimit) {
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(reduced);
    if (llt.info() != Eigen::Success) {
      detail::throw_if_groundless_component(sys);
      throw SingularSystemError("solve_pressures: Cholesky factorization failed");
    }
    x = llt.solve(rhs_r);
  } else {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg(reduced);
    cg.setTolerance(1e-12);
    cg.setMaxIterations(20LL * n);
    x = cg.solve(rhs_r);
    if (cg.info() != Eigen::Success) {
      detail::throw_if_groundless_component(sys);
      throw std::runtime_error("solve_pressures: conjugate gradient did not converge");
    }
  }

  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  for (int v = 0; v < n; ++v)
    if (v != sys.ground) p[v] = x[to_reduced[v]];

  const double resid = (sys.matrix * p - sys.rhs).lpNorm<Eigen::Infinity>();
  const double bound = kResidualTol * std::max(1.0, sys.rhs.lpNorm<Eigen::Infinity>());
  if (!(resid <= bound)) {
    detail::throw_if_groundless_component(sys);
    throw std::runtime_error("solve_pressures: residual " + std::to_string(resid) +
                             " exceeds tolerance " + std::to_string(bound));
  }
  return std::vector<double>(p.data(), p.data() + n);
}

}  // namespace physnet
