#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <numbers>

#include "mcf/flow.hpp"
#include "mcf/metric.hpp"
#include "mcf/snapshot.hpp"
#include "test_helpers.hpp"

using namespace mcf;
using testsupport::make_grid;

TEST_CASE("distance_map: abelian(2) reproduces Euclidean distance within stencil error") {
  const GroupModel g = make_model("abelian:2");
  const Grid grid(Vec{-1, -1}, Vec{1, 1}, {41, 41});
  const DistanceField df = distance_map(g, 1.0, grid, grid.index({20, 20}));
  double worst = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const Vec x = grid.point(p);
    const double r = std::hypot(x[0], x[1]);
    if (r < 0.25) continue;  // skip the near field where h dominates
    worst = std::max(worst, df.d[p] / r);
    CHECK(df.d[p] >= r - 1e-9);  // lattice paths cannot beat straight lines
  }
  CHECK(worst < 1.083);  // 8-neighbor stencil anisotropy bound
}

TEST_CASE("distance_map: 5^n stencil reduces the anisotropy error") {
  const GroupModel g = make_model("abelian:2");
  const Grid grid(Vec{-1, -1}, Vec{1, 1}, {41, 41});
  const DistanceField df = distance_map(g, 1.0, grid, grid.index({20, 20}), 2);
  double worst = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const Vec x = grid.point(p);
    const double r = std::hypot(x[0], x[1]);
    if (r < 0.25) continue;
    worst = std::max(worst, df.d[p] / r);
  }
  CHECK(worst < 1.03);
}

TEST_CASE("distance_map: heisenberg horizontal segment has length about 1") {
  const GroupModel g = make_model("heisenberg");
  const Grid grid(Vec{-1.2, -1.2, -1.2}, Vec{1.2, 1.2, 1.2}, {49, 49, 49});
  const DistanceField df = distance_map(g, 1.0, grid, grid.index({24, 24, 24}));
  // independent curve-length oracle: the segment t -> (t,0,0) has
  // sigma_eps length integral of sqrt(e1^T G e1) = 1 (frame solve gives |z|=1)
  double oracle = 0.0;
  const int steps = 200;
  for (int k = 0; k < steps; ++k) {
    const double t = (k + 0.5) / steps;
    oracle += metric_norm(g, 1.0, {t, 0.0, 0.0}, {1.0 / steps, 0.0, 0.0});
  }
  CHECK(oracle == Catch::Approx(1.0).margin(1e-12));
  std::vector<int> target{44, 24, 24};  // (1, 0, 0)
  CHECK(grid.point(grid.index(target))[0] == Catch::Approx(1.0));
  CHECK(df.d[grid.index(target)] == Catch::Approx(1.0).epsilon(0.05));
}

TEST_CASE("distance_map: d_eps is nondecreasing as eps decreases") {
  const GroupModel g = make_model("heisenberg");
  const Grid grid(Vec{-1, -1, -1}, Vec{1, 1, 1}, {21, 21, 21});
  const std::size_t src = grid.index({10, 10, 10});
  const DistanceField d1 = distance_map(g, 1.0, grid, src);
  const DistanceField d05 = distance_map(g, 0.5, grid, src);
  const DistanceField d025 = distance_map(g, 0.25, grid, src);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    CHECK(d05.d[p] >= d1.d[p] - 1e-9);
    CHECK(d025.d[p] >= d05.d[p] - 1e-9);
  }
}

TEST_CASE("distance_map: symmetry of the lattice metric") {
  const GroupModel g = make_model("heisenberg");
  const Grid grid(Vec{-1, -1, -1}, Vec{1, 1, 1}, {15, 15, 15});
  const std::size_t a = grid.index({7, 7, 7});
  const std::size_t b = grid.index({3, 9, 11});
  const DistanceField da = distance_map(g, 0.5, grid, a);
  const DistanceField db = distance_map(g, 0.5, grid, b);
  CHECK(da.d[b] == Catch::Approx(db.d[a]).margin(1e-9));
}

TEST_CASE("distance_map: eps = 0 and off-grid sources are rejected") {
  const GroupModel g = make_model("heisenberg");
  const Grid grid(Vec{-1, -1, -1}, Vec{1, 1, 1}, {9, 9, 9});
  CHECK_THROWS_AS(distance_map(g, 0.0, grid, std::size_t{0}), std::invalid_argument);
  CHECK_THROWS_AS(distance_map(g, 1.0, grid, Vec{0.013, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("distance maps export in the snapshot format") {
  const GroupModel g = make_model("abelian:2");
  const Grid grid(Vec{-1, -1}, Vec{1, 1}, {15, 15});
  const DistanceField df = distance_map(g, 1.0, grid, grid.index({7, 7}));
  ScalarField field(grid);
  field.v = df.d;
  write_snapshot("dist_test.snap", "abelian:2", df.eps, 0.0, field);
  const SnapshotFile s = read_snapshot("dist_test.snap");
  CHECK(s.values == df.d);
  std::remove("dist_test.snap");
}

TEST_CASE("doubling_ratio: abelian scaling 2^n") {
  SECTION("abelian(2): ratio within 15% of 4") {
    const GroupModel g = make_model("abelian:2");
    const Grid grid(Vec{-1, -1}, Vec{1, 1}, {81, 81});
    const DoublingReport rep =
        doubling_ratio(g, 1.0, grid, {grid.index({40, 40})}, {0.2, 0.25});
    for (const auto& row : rep.rows) CHECK(row.ratio == Catch::Approx(4.0).epsilon(0.15));
  }
  SECTION("abelian(3): ratio within 15% of 8") {
    const GroupModel g = make_model("abelian:3");
    const Grid grid(Vec{-1, -1, -1}, Vec{1, 1, 1}, {41, 41, 41});
    const DoublingReport rep = doubling_ratio(g, 1.0, grid, {grid.index({20, 20, 20})}, {0.2});
    for (const auto& row : rep.rows) CHECK(row.ratio == Catch::Approx(8.0).epsilon(0.15));
  }
  SECTION("radius below resolution is rejected") {
    const GroupModel g = make_model("abelian:2");
    const Grid grid(Vec{-1, -1}, Vec{1, 1}, {21, 21});
    CHECK_THROWS_AS(doubling_ratio(g, 1.0, grid, {grid.index({10, 10})}, {1e-4}),
                    std::invalid_argument);
  }
  SECTION("balls leaving the grid are rejected") {
    const GroupModel g = make_model("abelian:2");
    const Grid grid(Vec{-1, -1}, Vec{1, 1}, {21, 21});
    CHECK_THROWS_AS(doubling_ratio(g, 1.0, grid, {grid.index({10, 10})}, {0.9}),
                    std::invalid_argument);
  }
}

TEST_CASE("doubling_ratio: heisenberg approaches the homogeneous dimension", "[slow]") {
  // At small eps and radii with r^2 resolved by the vertical spacing the
  // volume scales like r^4, so |B(2r)|/|B(r)| approaches 16.
  const GroupModel g = make_model("heisenberg");
  const double r = 0.3;
  const Grid grid(Vec{-0.75, -0.75, -0.09}, Vec{0.75, 0.75, 0.09}, {61, 61, 91});
  const DoublingReport rep =
      doubling_ratio(g, 0.05, grid, {grid.index({30, 30, 45})}, {r});
  CHECK(rep.max_ratio == Catch::Approx(16.0).epsilon(0.25));
}

TEST_CASE("parabolic_distance: values and the max-metric triangle inequality") {
  CHECK(parabolic_distance(0.0, 2.5, 2.5) == 0.0);
  CHECK(parabolic_distance(3.0, 0.0, 4.0) == 3.0);
  CHECK(parabolic_distance(1.0, 0.0, 9.0) == 3.0);
  CHECK_THROWS_AS(parabolic_distance(-1.0, 0.0, 0.0), std::invalid_argument);

  // triangle inequality on lattice triples
  const GroupModel g = make_model("abelian:2");
  const Grid grid(Vec{-1, -1}, Vec{1, 1}, {15, 15});
  const std::size_t A = grid.index({3, 4}), B = grid.index({10, 2}), C = grid.index({7, 12});
  const DistanceField dA = distance_map(g, 1.0, grid, A);
  const DistanceField dB = distance_map(g, 1.0, grid, B);
  const double tA = 0.0, tB = 0.3, tC = 0.9;
  const double ab = parabolic_distance(dA.d[B], tA, tB);
  const double bc = parabolic_distance(dB.d[C], tB, tC);
  const double ac = parabolic_distance(dA.d[C], tA, tC);
  CHECK(ac <= ab + bc + 1e-12);
}

TEST_CASE("holder_seminorm: basic properties") {
  const GroupModel g = make_model("abelian:2");
  const Grid grid(Vec{-1, -1}, Vec{1, 1}, {21, 21});
  const IndexBox region = interior_box(grid);
  std::map<std::size_t, DistanceField> cache;
  auto provider = [&](std::size_t s) -> const DistanceField& {
    auto it = cache.find(s);
    if (it == cache.end()) it = cache.emplace(s, distance_map(g, 1.0, grid, s)).first;
    return it->second;
  };

  SECTION("constants have zero seminorm") {
    const std::vector<double> u(grid.size(), 2.0);
    SpaceTimeSamples s{grid, {0.0}, {&u}};
    const HolderEstimate est = holder_seminorm(s, provider, 0.5, region, 1.0, 5000, 3);
    CHECK(est.seminorm == 0.0);
    CHECK(est.sup_norm == 2.0);
    CHECK(est.norm() == 2.0);
  }
  SECTION("the distance function is 1-Lipschitz against its own metric") {
    const DistanceField base = distance_map(g, 1.0, grid, grid.index({10, 10}));
    SpaceTimeSamples s{grid, {0.0}, {&base.d}};
    const HolderEstimate est = holder_seminorm(s, provider, 1.0, region, 1.0, 20000, 3);
    CHECK(est.seminorm <= 1.0 + 1e-9);
  }
  SECTION("monotone in alpha on a unit-diameter region") {
    const std::vector<double>* up;
    std::vector<double> u(grid.size());
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const Vec x = grid.point(p);
      u[p] = std::sin(2.0 * x[0]) + x[1];
    }
    up = &u;
    IndexBox tiny;
    tiny.lo = {8, 8};
    tiny.hi = {12, 12};  // diameter ~0.57 < 1
    SpaceTimeSamples s{grid, {0.0}, {up}};
    double prev = -1.0;
    for (double alpha : {0.3, 0.6, 0.9}) {
      const HolderEstimate est = holder_seminorm(s, provider, alpha, tiny, 1.0, 5000, 3);
      CHECK(est.seminorm >= prev);
      prev = est.seminorm;
    }
  }
  SECTION("deterministic given the seed") {
    std::vector<double> u(grid.size());
    for (std::size_t p = 0; p < grid.size(); ++p) u[p] = grid.point(p)[0];
    SpaceTimeSamples s{grid, {0.0}, {&u}};
    const HolderEstimate a = holder_seminorm(s, provider, 0.5, region, 1.0, 4000, 11);
    const HolderEstimate b = holder_seminorm(s, provider, 0.5, region, 1.0, 4000, 11);
    CHECK(a.seminorm == b.seminorm);
    CHECK(a.pairs_sampled == b.pairs_sampled);
  }
}

TEST_CASE("holder: C1-alpha estimate of a converged flow is stable in eps", "[slow]") {
  // horizontal first derivatives of the steady graph stay Holder-bounded
  // uniformly as eps shrinks
  const GroupModel g = make_model("heisenberg");
  const Grid grid(Vec{-1, -1, -1}, Vec{1, 1, 1}, {15, 15, 15});
  const IndexBox region = interior_box(grid);
  std::vector<double> norms;
  for (double eps : {1.0, 0.5, 0.25}) {
    FlowProblem p;
    p.group = g;
    p.grid = grid;
    p.eps = eps;
    p.phi = sample(grid, [](const Vec& x) { return x[0] * x[1]; });
    p.steady_mode = true;
    p.steady_tol = 1e-6;
    const RunResult r = run(p);
    REQUIRE(r.steady);
    std::map<std::size_t, DistanceField> cache;
    auto provider = [&](std::size_t s) -> const DistanceField& {
      auto it = cache.find(s);
      if (it == cache.end()) it = cache.emplace(s, distance_map(g, eps, grid, s)).first;
      return it->second;
    };
    double norm = 0.0;
    for (int i = 0; i < g.m; ++i) {
      const ScalarField xiu = apply_X(g, eps, i, r.state.u);
      SpaceTimeSamples s{grid, {r.state.t}, {&xiu.v}};
      const HolderEstimate est = holder_seminorm(s, provider, 0.5, region, eps, 20000, 3);
      norm = std::max(norm, est.norm());
    }
    CHECK(std::isfinite(norm));
    norms.push_back(norm);
  }
  const double lo = *std::min_element(norms.begin(), norms.end());
  const double hi = *std::max_element(norms.begin(), norms.end());
  CHECK(hi / lo <= 1.0 + 2.0 * 0.25);  // stable within 25% around the mean
}
