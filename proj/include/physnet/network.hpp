#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "physnet/polynomial.hpp"

namespace physnet {

using NodeId = int;
using LinkId = int;

enum class CostUpdate { Marginal, Replace, Accumulate };
enum class ConductivityUpdate { SemiImplicit, RawAdditive };

struct SolverParams {
  double delta = 1e-4;        // termination threshold on total conductivity change
  double dt = 1.0;            // conductivity relaxation time step
  double init_length = 1e-3;  // initial effective link length, also the length floor
  int max_iters = 10000;
  std::uint64_t seed = 1;
  CostUpdate cost_update = CostUpdate::Marginal;
  ConductivityUpdate conductivity_update = ConductivityUpdate::SemiImplicit;
  bool record_trajectory = false;
};

struct Link {
  LinkId id = 0;
  NodeId tail = 0;
  NodeId head = 0;
  Polynomial op_cost;          // cost of carrying a given flow
  Polynomial inv_cost;         // cost of installing matching capacity
  std::optional<double> cap;   // imposed capacity; absent = free design variable
};

// Immutable problem statement: a layered DAG shipping one product from a
// single source to demand nodes, with per-link polynomial costs.
struct NetworkInstance {
  std::string name;
  int n_nodes = 0;
  std::vector<Link> links;
  NodeId source = 0;
  std::map<NodeId, double> demands;  // retailer -> positive demand
  SolverParams params;

  double total_demand() const {
    double s = 0.0;
    for (const auto& [node, d] : demands) s += d;
    return s;
  }
  bool is_retailer(NodeId v) const { return demands.count(v) != 0; }
};

// ---------------------------------------------------------------------------
// Validation

enum class ViolationCode {
  BadNodeCount,
  BadNodeId,
  BadLinkId,
  SelfLoop,
  DuplicateLink,
  CapNonpositive,
  BadCoefficient,
  DegreeTooHigh,
  CycleDetected,
  SourceHasIncoming,
  DemandNotSink,
  DemandNonpositive,
  NoDemands,
  UnreachableRetailer,
  NodeOffPath,
  BadParam,
};

inline const char* violation_code_name(ViolationCode c) {
  switch (c) {
    case ViolationCode::BadNodeCount: return "BadNodeCount";
    case ViolationCode::BadNodeId: return "BadNodeId";
    case ViolationCode::BadLinkId: return "BadLinkId";
    case ViolationCode::SelfLoop: return "SelfLoop";
    case ViolationCode::DuplicateLink: return "DuplicateLink";
    case ViolationCode::CapNonpositive: return "CapNonpositive";
    case ViolationCode::BadCoefficient: return "BadCoefficient";
    case ViolationCode::DegreeTooHigh: return "DegreeTooHigh";
    case ViolationCode::CycleDetected: return "CycleDetected";
    case ViolationCode::SourceHasIncoming: return "SourceHasIncoming";
    case ViolationCode::DemandNotSink: return "DemandNotSink";
    case ViolationCode::DemandNonpositive: return "DemandNonpositive";
    case ViolationCode::NoDemands: return "NoDemands";
    case ViolationCode::UnreachableRetailer: return "UnreachableRetailer";
    case ViolationCode::NodeOffPath: return "NodeOffPath";
    case ViolationCode::BadParam: return "BadParam";
  }
  return "Unknown";
}

struct Violation {
  ViolationCode code;
  std::string message;
};

// Out- and in-link lists per node, link ids ascending.
struct Adjacency {
  std::vector<std::vector<LinkId>> out;
  std::vector<std::vector<LinkId>> in;
};

inline Adjacency build_adjacency(const NetworkInstance& inst) {
  Adjacency adj;
  adj.out.resize(inst.n_nodes);
  adj.in.resize(inst.n_nodes);
  for (const Link& l : inst.links) {
    adj.out[l.tail].push_back(l.id);
    adj.in[l.head].push_back(l.id);
  }
  return adj;
}

// Kahn's algorithm; returns nullopt when the directed graph has a cycle.
inline std::optional<std::vector<NodeId>> topological_order(const NetworkInstance& inst) {
  std::vector<int> indeg(inst.n_nodes, 0);
  for (const Link& l : inst.links) ++indeg[l.head];
  Adjacency adj = build_adjacency(inst);
  std::vector<NodeId> queue, order;
  for (NodeId v = 0; v < inst.n_nodes; ++v)
    if (indeg[v] == 0) queue.push_back(v);
  while (!queue.empty()) {
    NodeId v = queue.back();
    queue.pop_back();
    order.push_back(v);
    for (LinkId a : adj.out[v])
      if (--indeg[inst.links[a].head] == 0) queue.push_back(inst.links[a].head);
  }
  if (static_cast<int>(order.size()) != inst.n_nodes) return std::nullopt;
  return order;
}

// Returns every invariant violation; an empty list means the instance is
// well formed. Violations are data, not exceptions.
inline std::vector<Violation> validate_instance(const NetworkInstance& inst) {
  std::vector<Violation> out;
  auto add = [&out](ViolationCode c, std::string msg) {
    out.push_back(Violation{c, std::move(msg)});
  };

  if (inst.n_nodes < 1) {
    add(ViolationCode::BadNodeCount, "instance must have at least one node");
    return out;
  }
  if (inst.source < 0 || inst.source >= inst.n_nodes) {
    add(ViolationCode::BadNodeId, "source node id out of range");
    return out;
  }

  bool ids_ok = true;
  for (std::size_t i = 0; i < inst.links.size(); ++i) {
    const Link& l = inst.links[i];
    if (l.id != static_cast<LinkId>(i)) {
      add(ViolationCode::BadLinkId,
          "link at position " + std::to_string(i) + " has id " + std::to_string(l.id) +
              "; ids must be dense and in declaration order");
      ids_ok = false;
    }
    if (l.tail < 0 || l.tail >= inst.n_nodes || l.head < 0 || l.head >= inst.n_nodes) {
      add(ViolationCode::BadNodeId, "link " + std::to_string(l.id) + " endpoint out of range");
      ids_ok = false;
    }
  }
  if (!ids_ok) return out;  // graph checks below need sane ids

  std::map<std::pair<NodeId, NodeId>, int> seen;
  for (const Link& l : inst.links) {
    if (l.tail == l.head)
      add(ViolationCode::SelfLoop, "link " + std::to_string(l.id) + " is a self-loop");
    else if (++seen[{l.tail, l.head}] == 2)
      add(ViolationCode::DuplicateLink,
          "duplicate link between nodes " + std::to_string(l.tail) + " and " +
              std::to_string(l.head));
    if (l.cap && !(*l.cap > 0.0))
      add(ViolationCode::CapNonpositive, "link " + std::to_string(l.id) + " has cap <= 0");
    for (const Polynomial* p : {&l.op_cost, &l.inv_cost}) {
      if (p->coefficients().size() > Polynomial::kMaxDegree + 1)
        add(ViolationCode::DegreeTooHigh,
            "link " + std::to_string(l.id) + " cost degree exceeds " +
                std::to_string(Polynomial::kMaxDegree));
      for (double c : p->coefficients())
        if (!std::isfinite(c) || c < 0.0) {
          add(ViolationCode::BadCoefficient,
              "link " + std::to_string(l.id) + " has a negative or non-finite coefficient");
          break;
        }
    }
  }

  Adjacency adj = build_adjacency(inst);
  if (!adj.in[inst.source].empty())
    add(ViolationCode::SourceHasIncoming, "source node has incoming links");

  if (inst.demands.empty()) add(ViolationCode::NoDemands, "instance declares no demands");
  for (const auto& [node, d] : inst.demands) {
    if (node < 0 || node >= inst.n_nodes) {
      add(ViolationCode::BadNodeId, "demand node " + std::to_string(node) + " out of range");
      continue;
    }
    if (!std::isfinite(d) || d <= 0.0)
      add(ViolationCode::DemandNonpositive,
          "demand at node " + std::to_string(node) + " must be positive");
    if (!adj.out[node].empty())
      add(ViolationCode::DemandNotSink,
          "demand node " + std::to_string(node) + " has outgoing links");
  }

  auto order = topological_order(inst);
  if (!order) {
    add(ViolationCode::CycleDetected, "the link graph contains a directed cycle");
    return out;  // reachability is not meaningful on a cyclic graph
  }

  // forward reachability from the source
  std::vector<char> from_source(inst.n_nodes, 0);
  from_source[inst.source] = 1;
  for (NodeId v : *order)
    if (from_source[v])
      for (LinkId a : adj.out[v]) from_source[inst.links[a].head] = 1;

  // backward reachability from any retailer
  std::vector<char> to_retail(inst.n_nodes, 0);
  for (const auto& [node, d] : inst.demands)
    if (node >= 0 && node < inst.n_nodes) to_retail[node] = 1;
  for (auto it = order->rbegin(); it != order->rend(); ++it)
    for (LinkId a : adj.out[*it])
      if (to_retail[inst.links[a].head]) to_retail[*it] = 1;

  for (const auto& [node, d] : inst.demands)
    if (node >= 0 && node < inst.n_nodes && !from_source[node])
      add(ViolationCode::UnreachableRetailer,
          "retailer " + std::to_string(node) + " is not reachable from the source");
  for (NodeId v = 0; v < inst.n_nodes; ++v)
    if (!(from_source[v] && to_retail[v]))
      add(ViolationCode::NodeOffPath,
          "node " + std::to_string(v) + " lies on no source-to-retailer path");

  const SolverParams& p = inst.params;
  if (!(p.delta > 0.0)) add(ViolationCode::BadParam, "delta must be > 0");
  if (!(p.dt > 0.0)) add(ViolationCode::BadParam, "dt must be > 0");
  if (!(p.init_length > 0.0)) add(ViolationCode::BadParam, "init_length must be > 0");
  if (p.max_iters < 1) add(ViolationCode::BadParam, "max_iters must be >= 1");
  return out;
}

// ---------------------------------------------------------------------------
// Objective and paths

// Total design cost with installed capacity equal to flow on every link.
inline double total_objective(const NetworkInstance& inst, std::span<const double> flows) {
  if (flows.size() != inst.links.size())
    throw std::invalid_argument("total_objective: one flow per link required");
  double total = 0.0;
  for (const Link& l : inst.links) {
    double f = flows[static_cast<std::size_t>(l.id)];
    if (!std::isfinite(f) || f < 0.0)
      throw std::invalid_argument("total_objective: flows must be finite and >= 0");
    total += l.op_cost.value(f) + l.inv_cost.value(f);
  }
  return total;
}

inline constexpr std::int64_t kMaxTotalPaths = 1000000;

class PathCountOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// All simple source-to-retailer paths as LinkId sequences, lexicographically
// ordered per retailer. Counts first and refuses to materialize more than
// kMaxTotalPaths paths.
inline std::map<NodeId, std::vector<std::vector<LinkId>>> enumerate_paths(
    const NetworkInstance& inst) {
  auto order = topological_order(inst);
  if (!order) throw std::invalid_argument("enumerate_paths: instance graph is cyclic");
  Adjacency adj = build_adjacency(inst);

  std::vector<std::int64_t> count(inst.n_nodes, 0);
  count[inst.source] = 1;
  for (NodeId v : *order)
    if (count[v] > 0)
      for (LinkId a : adj.out[v]) {
        NodeId h = inst.links[a].head;
        count[h] = std::min<std::int64_t>(count[h] + count[v], kMaxTotalPaths + 1);
      }
  std::int64_t total = 0;
  for (const auto& [node, d] : inst.demands)
    total = std::min<std::int64_t>(total + count[node], kMaxTotalPaths + 1);
  if (total > kMaxTotalPaths)
    throw PathCountOverflow("enumerate_paths: more than " + std::to_string(kMaxTotalPaths) +
                            " source-to-retailer paths");

  std::map<NodeId, std::vector<std::vector<LinkId>>> result;
  for (const auto& [node, d] : inst.demands) result[node];
  std::vector<LinkId> cur;
  // out-links ascend by id, so DFS emits paths in lexicographic order
  auto dfs = [&](auto&& self, NodeId v) -> void {
    if (auto it = result.find(v); it != result.end()) it->second.push_back(cur);
    for (LinkId a : adj.out[v]) {
      cur.push_back(a);
      self(self, inst.links[a].head);
      cur.pop_back();
    }
  };
  dfs(dfs, inst.source);
  return result;
}

// Signed node balances for a link-flux vector: net inflow minus outflow.
struct FlowBalance {
  double max_interior_abs = 0.0;  // worst |net| over non-source, non-retailer nodes
  double max_retailer_rel = 0.0;  // worst |net - demand| / demand over retailers
  double source_abs = 0.0;        // |net + total demand| at the source
};

inline FlowBalance flow_balance(const NetworkInstance& inst, std::span<const double> flux) {
  std::vector<double> net(inst.n_nodes, 0.0);
  for (const Link& l : inst.links) {
    net[l.tail] -= flux[static_cast<std::size_t>(l.id)];
    net[l.head] += flux[static_cast<std::size_t>(l.id)];
  }
  FlowBalance b;
  for (NodeId v = 0; v < inst.n_nodes; ++v) {
    if (v == inst.source) {
      b.source_abs = std::abs(net[v] + inst.total_demand());
    } else if (auto it = inst.demands.find(v); it != inst.demands.end()) {
      b.max_retailer_rel = std::max(b.max_retailer_rel, std::abs(net[v] - it->second) / it->second);
    } else {
      b.max_interior_abs = std::max(b.max_interior_abs, std::abs(net[v]));
    }
  }
  return b;
}

}  // namespace physnet
