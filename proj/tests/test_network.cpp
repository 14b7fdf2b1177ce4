#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <random>

#include "physnet/io.hpp"
#include "physnet/network.hpp"
#include "test_support.hpp"

using namespace physnet;
using namespace testsupport;

namespace {

bool has_code(const std::vector<Violation>& vs, ViolationCode c) {
  return std::any_of(vs.begin(), vs.end(), [c](const Violation& v) { return v.code == c; });
}

}  // namespace

TEST_CASE("bundled examples validate cleanly", "[network]") {
  for (int n = 1; n <= 3; ++n) {
    CAPTURE(n);
    CHECK(validate_instance(builtin_example(n)).empty());
  }
}

TEST_CASE("validator reports each violation kind", "[network]") {
  SECTION("self loop") {
    auto inst = two_node_instance();
    inst.links.push_back(make_link(1, 1, 1, {0, 1}, {0, 1}));
    auto vs = validate_instance(inst);
    CHECK(has_code(vs, ViolationCode::SelfLoop));
  }
  SECTION("demand node with outgoing link is not a sink") {
    NetworkInstance inst;
    inst.n_nodes = 3;
    inst.source = 0;
    inst.links.push_back(make_link(0, 0, 1, {0, 1}, {0, 1}));
    inst.links.push_back(make_link(1, 1, 2, {0, 1}, {0, 1}));
    inst.demands = {{1, 5.0}, {2, 5.0}};
    CHECK(has_code(validate_instance(inst), ViolationCode::DemandNotSink));
  }
  SECTION("cycle") {
    NetworkInstance inst;
    inst.n_nodes = 4;
    inst.source = 0;
    inst.links.push_back(make_link(0, 0, 1, {0, 1}, {0, 1}));
    inst.links.push_back(make_link(1, 1, 2, {0, 1}, {0, 1}));
    inst.links.push_back(make_link(2, 2, 1, {0, 1}, {0, 1}));
    inst.links.push_back(make_link(3, 2, 3, {0, 1}, {0, 1}));
    inst.demands = {{3, 2.0}};
    CHECK(has_code(validate_instance(inst), ViolationCode::CycleDetected));
  }
  SECTION("unreachable retailer") {
    NetworkInstance inst;
    inst.n_nodes = 3;
    inst.source = 0;
    inst.links.push_back(make_link(0, 0, 1, {0, 1}, {0, 1}));
    inst.demands = {{1, 1.0}, {2, 1.0}};
    auto vs = validate_instance(inst);
    CHECK(has_code(vs, ViolationCode::UnreachableRetailer));
    CHECK(has_code(vs, ViolationCode::NodeOffPath));
  }
  SECTION("negative coefficient") {
    auto inst = two_node_instance();
    inst.links[0].op_cost = poly({0, -2});
    CHECK(has_code(validate_instance(inst), ViolationCode::BadCoefficient));
  }
  SECTION("degree above the cap") {
    auto inst = two_node_instance();
    inst.links[0].inv_cost = poly({0, 1, 1, 1, 1, 1});
    CHECK(has_code(validate_instance(inst), ViolationCode::DegreeTooHigh));
  }
  SECTION("duplicate directed pair") {
    auto inst = parallel_pair_instance(1.0, 2.0);
    CHECK(has_code(validate_instance(inst), ViolationCode::DuplicateLink));
  }
  SECTION("nonpositive cap") {
    auto inst = two_node_instance();
    inst.links[0].cap = -1.0;
    CHECK(has_code(validate_instance(inst), ViolationCode::CapNonpositive));
  }
  SECTION("source with incoming links") {
    NetworkInstance inst;
    inst.n_nodes = 3;
    inst.source = 1;
    inst.links.push_back(make_link(0, 0, 1, {0, 1}, {0, 1}));
    inst.links.push_back(make_link(1, 1, 2, {0, 1}, {0, 1}));
    inst.demands = {{2, 1.0}};
    auto vs = validate_instance(inst);
    CHECK(has_code(vs, ViolationCode::SourceHasIncoming));
  }
  SECTION("no demands") {
    auto inst = two_node_instance();
    inst.demands.clear();
    CHECK(has_code(validate_instance(inst), ViolationCode::NoDemands));
  }
  SECTION("nonpositive demand") {
    auto inst = two_node_instance();
    inst.demands[1] = 0.0;
    CHECK(has_code(validate_instance(inst), ViolationCode::DemandNonpositive));
  }
  SECTION("bad params") {
    auto inst = two_node_instance();
    inst.params.delta = 0.0;
    inst.params.max_iters = 0;
    auto vs = validate_instance(inst);
    CHECK(std::count_if(vs.begin(), vs.end(), [](const Violation& v) {
            return v.code == ViolationCode::BadParam;
          }) == 2);
  }
  SECTION("link ids out of order") {
    auto inst = two_node_instance();
    inst.links[0].id = 3;
    CHECK(has_code(validate_instance(inst), ViolationCode::BadLinkId));
  }
}

TEST_CASE("path enumeration", "[network]") {
  SECTION("bundled example: six routes per retailer") {
    auto paths = enumerate_paths(builtin_example(1));
    REQUIRE(paths.size() == 3);
    std::size_t total = 0;
    for (const auto& [r, ps] : paths) {
      CHECK(ps.size() == 6);
      total += ps.size();
    }
    CHECK(total == 18);
    // lexicographically first route to the first retailer
    CHECK(paths.at(8).front() == std::vector<LinkId>{0, 3, 9, 11});
    for (const auto& [r, ps] : paths) CHECK(std::is_sorted(ps.begin(), ps.end()));
  }
  SECTION("single link gives a single unit path") {
    auto paths = enumerate_paths(two_node_instance());
    REQUIRE(paths.at(1).size() == 1);
    CHECK(paths.at(1).front() == std::vector<LinkId>{0});
  }
  SECTION("parallel links give two paths") {
    auto paths = enumerate_paths(parallel_pair_instance(1.0, 1.0));
    REQUIRE(paths.at(1).size() == 2);
    CHECK(paths.at(1)[0] == std::vector<LinkId>{0});
    CHECK(paths.at(1)[1] == std::vector<LinkId>{1});
  }
  SECTION("path count guard trips before materializing") {
    // 21 stacked diamonds: 2^21 paths
    NetworkInstance inst;
    inst.source = 0;
    const int diamonds = 21;
    inst.n_nodes = diamonds + 1;
    for (int i = 0; i < diamonds; ++i) {
      inst.links.push_back(
          make_link(static_cast<LinkId>(2 * i), i, i + 1, {0, 1}, {0, 1}));
      inst.links.push_back(
          make_link(static_cast<LinkId>(2 * i + 1), i, i + 1, {0, 2}, {0, 1}));
    }
    inst.demands = {{diamonds, 1.0}};
    CHECK_THROWS_AS(enumerate_paths(inst), PathCountOverflow);
  }
  SECTION("cyclic graph is rejected") {
    NetworkInstance inst;
    inst.n_nodes = 2;
    inst.source = 0;
    inst.links.push_back(make_link(0, 0, 1, {0, 1}, {0, 1}));
    inst.links.push_back(make_link(1, 1, 0, {0, 1}, {0, 1}));
    inst.demands = {{1, 1.0}};
    CHECK_THROWS_AS(enumerate_paths(inst), std::invalid_argument);
  }
}

TEST_CASE("path flows aggregate to conserved link flows", "[network]") {
  auto inst = builtin_example(1);
  auto paths = enumerate_paths(inst);
  std::mt19937 rng(4242);
  std::uniform_real_distribution<double> amount(0.0, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> flows(inst.links.size(), 0.0);
    std::map<NodeId, double> injected;
    for (const auto& [r, ps] : paths)
      for (const auto& p : ps) {
        const double x = amount(rng);
        injected[r] += x;
        for (LinkId a : p) flows[static_cast<std::size_t>(a)] += x;
      }
    // demands equal to whatever was injected, so balance must be exact
    NetworkInstance scaled = inst;
    scaled.demands = injected;
    FlowBalance b = flow_balance(scaled, flows);
    CHECK(b.max_interior_abs < 1e-9);
    CHECK(b.source_abs < 1e-9);
    CHECK(b.max_retailer_rel < 1e-9);
  }
}

TEST_CASE("total objective", "[network]") {
  auto inst = builtin_example(1);
  SECTION("reference flows give the reference total") {
    const double obj = total_objective(inst, example1_flows());
    CHECK_THAT(obj, Catch::Matchers::WithinRel(kExample1Objective, 0.005));
  }
  SECTION("example 3 reference flows") {
    const double obj = total_objective(builtin_example(3), example3_flows());
    CHECK_THAT(obj, Catch::Matchers::WithinRel(kExample3Objective, 0.005));
  }
  SECTION("zero flows cost nothing for zero-constant curves") {
    std::vector<double> zeros(inst.links.size(), 0.0);
    CHECK(total_objective(inst, zeros) == 0.0);
  }
  SECTION("invariant under a consistent permutation of links and flows") {
    std::vector<std::size_t> perm(inst.links.size());
    std::iota(perm.begin(), perm.end(), 0u);
    std::mt19937 rng(7);
    std::shuffle(perm.begin(), perm.end(), rng);
    NetworkInstance shuffled = inst;
    std::vector<double> pflows(inst.links.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      shuffled.links[i] = inst.links[perm[i]];
      shuffled.links[i].id = static_cast<LinkId>(i);
      pflows[i] = example1_flows()[perm[i]];
    }
    CHECK_THAT(total_objective(shuffled, pflows),
               Catch::Matchers::WithinRel(total_objective(inst, example1_flows()), 1e-12));
  }
  SECTION("errors") {
    CHECK_THROWS_AS(total_objective(inst, std::vector<double>(3, 1.0)), std::invalid_argument);
    std::vector<double> bad(inst.links.size(), 1.0);
    bad[4] = -0.5;
    CHECK_THROWS_AS(total_objective(inst, bad), std::invalid_argument);
  }
}
