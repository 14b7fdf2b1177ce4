#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "physnet/engine.hpp"
#include "physnet/format.hpp"
#include "physnet/network.hpp"

namespace physnet {

// Reference optimum of the convex design problem (minimize total operating
// plus investment cost with capacity matching flow), plus the first-order
// optimality certificate it was checked with.
struct OracleResult {
  std::vector<double> flows;
  double objective = 0.0;
  double kkt_gap = 0.0;
  int iterations = 0;
  bool converged = false;
};

// d/df of the combined link cost via exact polynomial differentiation.
inline double marginal_cost(const Link& link, double f) {
  return link.op_cost.derivative().value(f) + link.inv_cost.derivative().value(f);
}

// Minimum-marginal-cost source-to-retailer path under the given flows.
// Ties break toward the lexicographically smaller LinkId sequence.
inline std::vector<LinkId> shortest_path_marginal(const NetworkInstance& inst,
                                                  std::span<const double> flows,
                                                  NodeId retailer) {
  if (flows.size() != inst.links.size())
    throw std::invalid_argument("shortest_path_marginal: one flow per link required");
  auto order = topological_order(inst);
  if (!order) throw std::invalid_argument("shortest_path_marginal: instance graph is cyclic");
  Adjacency adj = build_adjacency(inst);

  constexpr double kUnreached = std::numeric_limits<double>::infinity();
  std::vector<double> dist(inst.n_nodes, kUnreached);
  std::vector<std::vector<LinkId>> path(inst.n_nodes);
  dist[inst.source] = 0.0;
  for (NodeId v : *order) {
    if (dist[v] == kUnreached) continue;
    for (LinkId a : adj.out[v]) {
      const Link& l = inst.links[a];
      const double cand = dist[v] + marginal_cost(l, flows[static_cast<std::size_t>(a)]);
      std::vector<LinkId> cand_path = path[v];
      cand_path.push_back(a);
      if (cand < dist[l.head] ||
          (cand == dist[l.head] && cand_path < path[l.head])) {
        dist[l.head] = cand;
        path[l.head] = std::move(cand_path);
      }
    }
  }
  if (dist[retailer] == kUnreached)
    throw std::runtime_error("shortest_path_marginal: retailer " + std::to_string(retailer) +
                             " unreachable from source");
  return path[retailer];
}

namespace detail {

struct PathTable {
  std::vector<std::vector<LinkId>> paths;  // all retailers, flattened
  std::vector<NodeId> retailer_of;
  std::map<NodeId, std::pair<int, int>> range;  // retailer -> [first, last) index
};

inline PathTable build_path_table(const NetworkInstance& inst) {
  PathTable t;
  auto by_retailer = enumerate_paths(inst);
  for (auto& [r, paths] : by_retailer) {
    const int first = static_cast<int>(t.paths.size());
    for (auto& p : paths) {
      t.paths.push_back(std::move(p));
      t.retailer_of.push_back(r);
    }
    t.range[r] = {first, static_cast<int>(t.paths.size())};
  }
  return t;
}

// Root of the nondecreasing directional derivative g(t) on [0, hi]; this is
// the exact line-search step for a convex polynomial objective restricted to
// a segment.
inline double line_search(const NetworkInstance& inst, std::span<const double> f,
                          std::span<const double> dir, double hi) {
  auto g = [&](double t) {
    double s = 0.0;
    for (const Link& l : inst.links) {
      const auto a = static_cast<std::size_t>(l.id);
      if (dir[a] == 0.0) continue;
      s += marginal_cost(l, std::max(f[a] + t * dir[a], 0.0)) * dir[a];
    }
    return s;
  };
  if (g(hi) <= 0.0) return hi;
  if (g(0.0) >= 0.0) return 0.0;
  double lo = 0.0, up = hi;
  for (int i = 0; i < 100 && up - lo > 1e-16 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + up);
    (g(mid) > 0.0 ? up : lo) = mid;
  }
  return 0.5 * (lo + up);
}

}  // namespace detail

using OracleObserver = std::function<void(int iteration, double objective, double rel_gap)>;

// Frank-Wolfe on enumerated path flows: all-or-nothing assignment on
// marginal-cost shortest paths with exact line search, plus one pairwise
// flow swap per retailer each iteration (worst priced used path into the
// best path) so the relative gap keeps contracting at tight tolerances
// instead of zigzagging. Conservation holds by construction because only
// whole path flows are moved.
inline OracleResult frank_wolfe_solve(const NetworkInstance& inst, double tol = 1e-6,
                                      int max_iters = 10000,
                                      const OracleObserver& observer = {});

// Spread between the priciest flow-carrying path and the cheapest path per
// retailer, maximized over retailers; zero at an exact optimum. A path
// counts as flow-carrying when every link on it carries more than
// used_threshold.
inline double kkt_gap(const NetworkInstance& inst, std::span<const double> flows,
                      double used_threshold = 0.01) {
  auto by_retailer = enumerate_paths(inst);
  std::vector<double> w(inst.links.size());
  for (const Link& l : inst.links)
    w[static_cast<std::size_t>(l.id)] = marginal_cost(l, flows[static_cast<std::size_t>(l.id)]);
  double worst = 0.0;
  for (const auto& [r, paths] : by_retailer) {
    double min_all = std::numeric_limits<double>::infinity();
    double max_used = -std::numeric_limits<double>::infinity();
    for (const auto& p : paths) {
      double m = 0.0;
      double min_flow = std::numeric_limits<double>::infinity();
      for (LinkId a : p) {
        m += w[static_cast<std::size_t>(a)];
        min_flow = std::min(min_flow, flows[static_cast<std::size_t>(a)]);
      }
      min_all = std::min(min_all, m);
      if (min_flow > used_threshold) max_used = std::max(max_used, m);
    }
    if (max_used > -std::numeric_limits<double>::infinity())
      worst = std::max(worst, max_used - min_all);
  }
  return worst;
}

inline OracleResult frank_wolfe_solve(const NetworkInstance& inst, double tol, int max_iters,
                                      const OracleObserver& observer) {
  detail::PathTable table = detail::build_path_table(inst);
  const std::size_t n_links = inst.links.size();
  const std::size_t n_paths = table.paths.size();

  auto link_flows = [&](std::span<const double> x) {
    std::vector<double> f(n_links, 0.0);
    for (std::size_t i = 0; i < n_paths; ++i)
      for (LinkId a : table.paths[i]) f[static_cast<std::size_t>(a)] += x[i];
    return f;
  };
  auto marginals = [&](std::span<const double> f) {
    std::vector<double> w(n_links);
    for (const Link& l : inst.links)
      w[static_cast<std::size_t>(l.id)] = marginal_cost(l, f[static_cast<std::size_t>(l.id)]);
    return w;
  };
  auto path_price = [&](std::span<const double> w, const std::vector<LinkId>& p) {
    double s = 0.0;
    for (LinkId a : p) s += w[static_cast<std::size_t>(a)];
    return s;
  };
  // argmin over a retailer's paths; the table is lexicographically ordered,
  // so keeping the first strict minimum applies the tie-break rule
  auto best_path = [&](std::span<const double> w, NodeId r) {
    auto [first, last] = table.range.at(r);
    int best = first;
    double best_price = path_price(w, table.paths[first]);
    for (int i = first + 1; i < last; ++i) {
      const double price = path_price(w, table.paths[i]);
      if (price < best_price) {
        best_price = price;
        best = i;
      }
    }
    return std::pair{best, best_price};
  };

  std::vector<double> x(n_paths, 0.0);
  {
    std::vector<double> zero(n_links, 0.0);
    std::vector<double> w = marginals(zero);
    for (const auto& [r, d] : inst.demands) x[best_path(w, r).first] = d;
  }

  OracleResult result;
  int it = 0;
  for (it = 1; it <= max_iters; ++it) {
    std::vector<double> f = link_flows(x);
    std::vector<double> w = marginals(f);

    // all-or-nothing target and the Frank-Wolfe duality gap
    std::vector<double> y(n_paths, 0.0);
    double gap = 0.0;
    for (const auto& [r, d] : inst.demands) {
      auto [bi, bp] = best_path(w, r);
      y[bi] = d;
      gap -= d * bp;
    }
    for (std::size_t i = 0; i < n_paths; ++i)
      if (x[i] > 0.0) gap += x[i] * path_price(w, table.paths[i]);

    const double objective = total_objective(inst, f);
    const double rel_gap = gap / std::max(1.0, std::abs(objective));
    if (observer) observer(it, objective, rel_gap);
    if (rel_gap <= tol) {
      result.converged = true;
      break;
    }

    std::vector<double> dir(n_links);
    std::vector<double> fy = link_flows(y);
    for (std::size_t a = 0; a < n_links; ++a) dir[a] = fy[a] - f[a];
    const double t = detail::line_search(inst, f, dir, 1.0);
    if (t > 0.0) {
      for (std::size_t i = 0; i < n_paths; ++i) x[i] += t * (y[i] - x[i]);
      f = link_flows(x);
      w = marginals(f);
    }

    // pairwise step per retailer: drain the priciest used path into the best
    for (const auto& [r, d] : inst.demands) {
      auto [first, last] = table.range.at(r);
      const int bi = best_path(w, r).first;
      int wi = -1;
      double worst_price = -std::numeric_limits<double>::infinity();
      for (int i = first; i < last; ++i) {
        if (x[i] <= 1e-14) continue;
        const double price = path_price(w, table.paths[i]);
        if (price > worst_price) {
          worst_price = price;
          wi = i;
        }
      }
      if (wi < 0 || wi == bi || worst_price <= path_price(w, table.paths[bi])) continue;
      std::vector<double> swap_dir(n_links, 0.0);
      for (LinkId a : table.paths[bi]) swap_dir[static_cast<std::size_t>(a)] += 1.0;
      for (LinkId a : table.paths[wi]) swap_dir[static_cast<std::size_t>(a)] -= 1.0;
      const double s = detail::line_search(inst, f, swap_dir, x[wi]);
      if (s > 0.0) {
        x[bi] += s;
        x[wi] = std::max(x[wi] - s, 0.0);
        for (std::size_t a = 0; a < n_links; ++a) f[a] = std::max(f[a] + s * swap_dir[a], 0.0);
        w = marginals(f);
      }
    }
  }

  result.iterations = std::min(it, max_iters);
  result.flows = link_flows(x);
  result.objective = total_objective(inst, result.flows);
  result.kkt_gap = kkt_gap(inst, result.flows);
  return result;
}

// ---------------------------------------------------------------------------
// Engine-versus-oracle comparison

struct CompareReport {
  struct Row {
    LinkId link;
    double engine_flow;
    double oracle_flow;
    double abs_err;
  };
  double objective_rel_err = 0.0;
  double max_flow_abs_err = 0.0;
  std::vector<Row> per_link;

  std::string to_string() const {
    std::string out;
    out += "objective_rel_err," + fmt_fixed(objective_rel_err) + "\n";
    out += "max_flow_abs_err," + fmt_fixed(max_flow_abs_err) + "\n";
    out += "link,engine_flow,oracle_flow,abs_err\n";
    for (const Row& r : per_link)
      out += std::to_string(r.link) + "," + fmt_fixed(r.engine_flow) + "," +
             fmt_fixed(r.oracle_flow) + "," + fmt_fixed(r.abs_err) + "\n";
    return out;
  }
};

inline CompareReport compare(const Solution& engine_sol, const OracleResult& oracle_res) {
  if (engine_sol.flows.size() != oracle_res.flows.size())
    throw std::invalid_argument("compare: solutions sized for different instances");
  CompareReport report;
  report.objective_rel_err = std::abs(engine_sol.objective - oracle_res.objective) /
                             std::max(1.0, std::abs(oracle_res.objective));
  for (std::size_t a = 0; a < engine_sol.flows.size(); ++a) {
    const double err = std::abs(engine_sol.flows[a] - oracle_res.flows[a]);
    report.per_link.push_back(
        {static_cast<LinkId>(a), engine_sol.flows[a], oracle_res.flows[a], err});
    report.max_flow_abs_err = std::max(report.max_flow_abs_err, err);
  }
  return report;
}

}  // namespace physnet
