#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "physnet/linear_system.hpp"
#include "physnet/network.hpp"

namespace physnet {

inline constexpr double kConductivityFloor = 1e-12;
inline constexpr double kCapacityRatioFloor = 1e-6;
inline constexpr double kCongestionClampMax = 1e12;
inline constexpr double kPruneThreshold = 0.05;
inline constexpr double kReverseFluxTol = 1e-6;

// Mutable per-iteration state of the flux-adaptation loop.
struct SolverState {
  int iter = 0;
  std::vector<double> D;           // per-link conductivity, > 0
  std::vector<double> Q;           // signed flux, positive = tail -> head
  std::vector<double> p;           // node pressures
  std::vector<double> L;           // effective lengths (current link costs), > 0
  std::vector<double> congestion;  // compounding capacity-ratio multiplier, >= 1
  double delta_D = std::numeric_limits<double>::infinity();
};

struct Solution {
  std::vector<double> flows;       // f*, nonnegative
  std::vector<double> capacities;  // u* = f*
  std::vector<double> lengths;     // final effective lengths
  double objective = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<LinkId> removed_links;       // flow below kPruneThreshold
  std::vector<LinkId> reverse_flux_links;  // diagnostic: flux against link direction
  std::optional<std::vector<std::vector<double>>> trajectory;  // |Q| per iteration
  std::uint64_t seed = 0;
  CostUpdate cost_update = CostUpdate::Marginal;
  ConductivityUpdate conductivity_update = ConductivityUpdate::SemiImplicit;
};

enum class Termination { Continue, Converged, MaxIters };

// Conductivities drawn i.i.d. uniform on (0,1] from params.seed, flux and
// pressures zero, all lengths at init_length.
inline SolverState init_state(const NetworkInstance& inst) {
  const std::size_t n = inst.links.size();
  SolverState s;
  s.D.resize(n);
  std::mt19937_64 gen(inst.params.seed);
  for (std::size_t a = 0; a < n; ++a) {
    // top 53 bits, shifted into (0, 1]; avoids distribution-implementation drift
    s.D[a] = static_cast<double>((gen() >> 11) + 1) * 0x1.0p-53;
  }
  s.Q.assign(n, 0.0);
  s.p.assign(inst.n_nodes, 0.0);
  s.L.assign(n, inst.params.init_length);
  s.congestion.assign(n, 1.0);
  return s;
}

// Poiseuille flux from the current pressures: Q = (D/L) (p_tail - p_head).
inline std::vector<double> compute_flux(const SolverState& state, const NetworkInstance& inst) {
  std::vector<double> Q(inst.links.size());
  for (const Link& l : inst.links) {
    const auto a = static_cast<std::size_t>(l.id);
    Q[a] = state.D[a] / state.L[a] * (state.p[l.tail] - state.p[l.head]);
  }
  return Q;
}

inline std::vector<double> update_conductivity(const SolverState& state,
                                               const SolverParams& params) {
  std::vector<double> next(state.D.size());
  for (std::size_t a = 0; a < state.D.size(); ++a) {
    const double f = std::abs(state.Q[a]);
    double d;
    if (params.conductivity_update == ConductivityUpdate::SemiImplicit)
      d = (state.D[a] + params.dt * f) / (1.0 + params.dt);
    else
      d = state.D[a] + f;
    next[a] = std::max(d, kConductivityFloor);
  }
  return next;
}

// flow / cap, floored so a congested link never gets a zero-length rebate;
// links without an imposed cap are uncongested by convention.
inline double capacity_ratio(double flow, std::optional<double> cap) {
  if (!cap) return 1.0;
  return std::max(flow / *cap, kCapacityRatioFloor);
}

// New effective lengths from the current flux. Marginal mode (the default)
// prices each link at the derivative of its combined cost and lets the
// capacity ratio compound across iterations, so a binding cap keeps
// inflating the link until its flow drops to the cap. Replace and
// Accumulate price links at the combined cost itself, memorylessly or
// additively. All modes floor at init_length so idle links stay cheap but
// finite and can be rediscovered.
inline std::vector<double> update_link_costs(SolverState& state, const NetworkInstance& inst,
                                             const SolverParams& params) {
  std::vector<double> next(state.L.size());
  for (const Link& l : inst.links) {
    const auto a = static_cast<std::size_t>(l.id);
    const double f = std::abs(state.Q[a]);
    const double cr = capacity_ratio(f, l.cap);
    double len;
    switch (params.cost_update) {
      case CostUpdate::Marginal: {
        if (l.cap)
          state.congestion[a] =
              std::min(std::max(state.congestion[a] * cr, 1.0), kCongestionClampMax);
        const double marginal = l.op_cost.derivative().value(f) + l.inv_cost.derivative().value(f);
        len = state.congestion[a] * marginal;
        break;
      }
      case CostUpdate::Replace:
        len = cr * (l.op_cost.value(f) + l.inv_cost.value(f));
        break;
      case CostUpdate::Accumulate:
        len = (state.L[a] + l.op_cost.value(f) + l.inv_cost.value(f)) * cr;
        break;
      default:
        len = state.L[a];
    }
    next[a] = std::max(len, params.init_length);
  }
  return next;
}

inline Termination check_termination(const SolverState& state, std::span<const double> prev_D,
                                     const SolverParams& params) {
  double change = 0.0;
  for (std::size_t a = 0; a < state.D.size(); ++a) change += std::abs(state.D[a] - prev_D[a]);
  if (change <= params.delta) return Termination::Converged;
  if (state.iter >= params.max_iters) return Termination::MaxIters;
  return Termination::Continue;
}

// Reported design from a terminated state: flows are the forward flux,
// capacity matches flow, links below the prune threshold are listed as
// removed, and persistent reverse flux is surfaced as a diagnostic.
inline Solution extract_solution(const SolverState& state, const NetworkInstance& inst) {
  Solution sol;
  const std::size_t n = inst.links.size();
  sol.flows.resize(n);
  sol.reverse_flux_links.clear();
  for (std::size_t a = 0; a < n; ++a) {
    sol.flows[a] = std::max(state.Q[a], 0.0);
    if (state.Q[a] < -kReverseFluxTol) sol.reverse_flux_links.push_back(static_cast<LinkId>(a));
  }
  sol.capacities = sol.flows;
  sol.lengths = state.L;
  sol.iterations = state.iter;
  for (std::size_t a = 0; a < n; ++a)
    if (sol.flows[a] < kPruneThreshold) sol.removed_links.push_back(static_cast<LinkId>(a));
  sol.objective = total_objective(inst, sol.flows);
  sol.seed = inst.params.seed;
  sol.cost_update = inst.params.cost_update;
  sol.conductivity_update = inst.params.conductivity_update;
  return sol;
}

using IterationObserver = std::function<void(const SolverState&)>;

// Full adaptation loop: solve pressures, derive flux, relax conductivities
// toward |Q|, reprice lengths, stop once the total conductivity change
// falls below delta (or the iteration cap is hit).
inline Solution run_solver(const NetworkInstance& inst, const IterationObserver& observer = {}) {
  SolverState state = init_state(inst);
  std::optional<std::vector<std::vector<double>>> trajectory;
  if (inst.params.record_trajectory) trajectory.emplace();

  Termination decision = Termination::MaxIters;
  std::vector<double> prev_D(state.D.size());
  for (;;) {
    LinearSystem sys = assemble_system(inst, state.D, state.L);
    state.p = solve_pressures(sys);
    state.Q = compute_flux(state, inst);
    prev_D = state.D;
    state.D = update_conductivity(state, inst.params);
    state.L = update_link_costs(state, inst, inst.params);
    ++state.iter;
    state.delta_D = 0.0;
    for (std::size_t a = 0; a < state.D.size(); ++a)
      state.delta_D += std::abs(state.D[a] - prev_D[a]);
    if (trajectory) {
      std::vector<double> row(state.Q.size());
      for (std::size_t a = 0; a < state.Q.size(); ++a) row[a] = std::abs(state.Q[a]);
      trajectory->push_back(std::move(row));
    }
    if (observer) observer(state);
    decision = check_termination(state, prev_D, inst.params);
    if (decision != Termination::Continue) break;
  }

  Solution sol = extract_solution(state, inst);
  sol.converged = (decision == Termination::Converged);
  sol.trajectory = std::move(trajectory);
  return sol;
}

}  // namespace physnet
