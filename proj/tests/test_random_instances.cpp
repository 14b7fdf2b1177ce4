#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "physnet/physnet.hpp"
#include "test_support.hpp"

using namespace physnet;
using namespace testsupport;

TEST_CASE("generated layered instances are well formed", "[random]") {
  std::mt19937 rng(321);
  for (int i = 0; i < 20; ++i) {
    NetworkInstance inst = random_layered_instance(rng, 1);
    CAPTURE(i, inst.n_nodes, inst.links.size());
    CHECK(validate_instance(inst).empty());
    CHECK(inst.links.size() <= 30);
    CHECK(!inst.demands.empty());
  }
}

TEST_CASE("solver tracks the reference optimum on random instances", "[random]") {
  std::mt19937 rng(2024);
  int converged = 0;
  for (int i = 0; i < 10; ++i) {
    NetworkInstance inst = random_layered_instance(rng, 100 + i);
    CAPTURE(i, inst.n_nodes, inst.links.size());
    Solution sol = run_solver(inst);
    Solution again = run_solver(inst);
    CHECK(sol.flows == again.flows);  // per-seed determinism
    if (!sol.converged) continue;
    ++converged;
    OracleResult res = frank_wolfe_solve(inst, 1e-8);
    REQUIRE(res.converged);
    const double rel = std::abs(sol.objective - res.objective) / std::max(1.0, res.objective);
    CHECK(rel <= 0.05);
    // clipped reverse flux understates the engine objective, so the
    // reference-is-never-costlier ordering only binds without that diagnostic
    if (sol.reverse_flux_links.empty())
      CHECK(res.objective <= sol.objective + 1e-6 * sol.objective + 1e-9);
  }
  CHECK(converged >= 8);  // nearly all of these small instances settle
}

TEST_CASE("scaling every demand up never cheapens the design", "[random]") {
  std::mt19937 rng(515);
  for (int i = 0; i < 5; ++i) {
    NetworkInstance inst = random_layered_instance(rng, 7);
    Solution base = run_solver(inst);
    NetworkInstance scaled = inst;
    for (auto& [node, d] : scaled.demands) d *= 1.7;
    Solution more = run_solver(scaled);
    CAPTURE(i);
    if (base.converged && more.converged) CHECK(more.objective >= base.objective - 1e-9);
  }
}

TEST_CASE("ground choice does not alter random-instance flux", "[random]") {
  std::mt19937 rng(616);
  NetworkInstance inst = random_layered_instance(rng, 5);
  SolverState s = init_state(inst);
  std::vector<std::vector<double>> fluxes;
  for (const auto& [r, d] : inst.demands) {
    SolverState t = s;
    t.p = solve_pressures(assemble_system(inst, s.D, s.L, r));
    fluxes.push_back(compute_flux(t, inst));
  }
  for (std::size_t i = 1; i < fluxes.size(); ++i)
    for (std::size_t a = 0; a < fluxes[0].size(); ++a)
      CHECK_THAT(fluxes[i][a], Catch::Matchers::WithinAbs(fluxes[0][a], 1e-8));
}
