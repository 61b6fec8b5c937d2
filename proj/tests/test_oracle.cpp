#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "semrelay/netmodel.hpp"
#include "semrelay/oracle.hpp"

using namespace semrelay;
using oracle::GridSpec;

namespace {

NetworkInstance tiny_instance(std::vector<GroundUser> users) {
  NetworkInstance inst;
  Cluster c;
  c.users = std::move(users);
  inst.clusters.push_back(c);
  inst.validate();
  return inst;
}

}  // namespace

TEST_CASE("zero allocation is feasible with zero objective") {
  auto inst = tiny_instance({{UserKind::Con, {0.0, 0.0}}});
  const Allocation zero = make_zero_allocation(inst);
  const auto rep = oracle::feasible(inst, zero);
  CHECK(rep.ok);
  CHECK(sum_rate(inst, zero) == 0.0);
}

TEST_CASE("feasibility report flags a satellite power overdraw") {
  auto inst = tiny_instance({{UserKind::Con, {0.0, 0.0}}});
  Allocation a = make_zero_allocation(inst);
  a.clusters[0].p_s2r = 2.0 * inst.sat_power_w;
  a.clusters[0].b_s2r = 1e6;
  const auto rep = oracle::feasible(inst, a);
  CHECK_FALSE(rep.ok);
  CHECK(rep.worst_rel >= 1.0);
  CHECK(rep.residuals.c4 > 0.0);
}

TEST_CASE("grid search refuses instances beyond its guard rails") {
  GridSpec grid;
  auto big_users = tiny_instance({{UserKind::Con, {0.0, 0.0}},
                                  {UserKind::Con, {100.0, 0.0}},
                                  {UserKind::Sem, {-100.0, 0.0}},
                                  {UserKind::Sem, {0.0, 100.0}}});
  CHECK_THROWS_AS(oracle::grid_search(big_users, grid), oracle::OracleRefusal);

  NetworkInstance many;
  for (int n = 0; n < 3; ++n) {
    Cluster c;
    c.users.push_back({UserKind::Con, {static_cast<double>(n), 0.0}});
    many.clusters.push_back(c);
  }
  CHECK_THROWS_AS(oracle::grid_search(many, grid), oracle::OracleRefusal);
}

TEST_CASE("single-user optimum matches the analytic reduction") {
  // One content user directly below the UAV. The full-budget reduction
  // (budget-saturating power net of the compute draw, cluster bandwidth split
  // at the uplink/downlink balance point) gives objective 37224552.84 b/s
  // with an uplink share of about 5.165 MHz.
  auto inst = tiny_instance({{UserKind::Con, {0.0, 0.0}}});
  GridSpec grid;
  grid.resolution = 16;
  grid.refine_rounds = 10;
  const auto res = oracle::grid_search(inst, grid);

  CHECK(oracle::feasible(inst, res.alloc, 1e-9).ok);
  CHECK(res.feasible_candidates > 0);
  CHECK(res.objective == Catch::Approx(37224552.84277412).epsilon(5e-3));
  CHECK(res.objective <= 37224552.84277412 * (1.0 + 1e-6));
  CHECK(res.alloc.clusters[0].b_s2r ==
        Catch::Approx(5165193.102145445).epsilon(2e-2));

  // the balance constraint pins the uplink: its bit-equivalent rate matches
  // the downlink rate to fine relative precision at the incumbent
  const double sat = satellite_rate(inst, 0, res.alloc);
  const double down = downlink_rate_sums(inst, 0, res.alloc).total();
  CHECK(down <= sat * (1.0 + 1e-9));
  CHECK(down >= sat * (1.0 - 1e-3));
}

TEST_CASE("identical pair lands between the even split and the one-user bound") {
  // Sum rate with a binding cluster bandwidth budget rewards concentrating on
  // one user: starving the other frees downlink bandwidth, which lets the
  // uplink share grow and raises the relay cap. The even-split value
  // 36740047.58 b/s is therefore only a lower bound here, while the one-user
  // relaxation 37224552.84 b/s (user directly under the UAV) is an upper
  // bound that concentration approaches but cannot beat.
  auto inst = tiny_instance({{UserKind::Con, {-400.0, 0.0}},
                             {UserKind::Con, {400.0, 0.0}}});
  GridSpec grid;
  grid.resolution = 9;
  grid.refine_rounds = 9;
  const auto res = oracle::grid_search(inst, grid);

  CHECK(oracle::feasible(inst, res.alloc, 1e-9).ok);
  CHECK(res.objective >= 36740047.58424273 * (1.0 - 5e-3));
  CHECK(res.objective <= 37224552.84277412 * (1.0 + 1e-6));
}

TEST_CASE("refinement rounds never lower the incumbent objective") {
  auto inst = tiny_instance({{UserKind::Con, {0.0, 0.0}}});
  double prev = -1.0;
  for (int rounds : {0, 3, 8}) {
    GridSpec grid;
    grid.resolution = 12;
    grid.refine_rounds = rounds;
    const auto res = oracle::grid_search(inst, grid);
    CHECK(res.objective >= prev - 1e-9);
    prev = res.objective;
  }
}

TEST_CASE("relabeling users does not change the optimum") {
  auto a = tiny_instance({{UserKind::Con, {-300.0, 100.0}},
                          {UserKind::Sem, {250.0, -50.0}}});
  auto b = tiny_instance({{UserKind::Sem, {250.0, -50.0}},
                          {UserKind::Con, {-300.0, 100.0}}});
  GridSpec grid;
  grid.resolution = 7;
  grid.refine_rounds = 5;
  const auto ra = oracle::grid_search(a, grid);
  const auto rb = oracle::grid_search(b, grid);
  CHECK(ra.objective == Catch::Approx(rb.objective).epsilon(1e-12));
}

TEST_CASE("oracle result is never infeasible") {
  auto inst = tiny_instance({{UserKind::Sem, {-400.0, 0.0}},
                             {UserKind::Con, {400.0, 0.0}}});
  GridSpec grid;
  grid.resolution = 8;
  grid.refine_rounds = 6;
  const auto res = oracle::grid_search(inst, grid);
  const auto rep = oracle::feasible(inst, res.alloc, 1e-9);
  INFO("worst relative violation " << rep.worst_rel);
  CHECK(rep.ok);
}
