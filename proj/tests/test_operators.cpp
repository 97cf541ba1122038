#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "mcf/operators.hpp"
#include "test_helpers.hpp"

using namespace mcf;
using testsupport::jacobi_eigenvalues;
using testsupport::make_grid;

namespace {

double sup_err(const ScalarField& a, const std::function<double(const Vec&)>& exact) {
  double m = 0.0;
  for (std::size_t p = 0; p < a.grid.size(); ++p)
    m = std::max(m, std::fabs(a.v[p] - exact(a.grid.point(p))));
  return m;
}

}  // namespace

TEST_CASE("grid: construction guards") {
  CHECK_THROWS_AS(Grid({0.0}, {1.0}, {4}), std::invalid_argument);
  CHECK_THROWS_AS(Grid({0.0}, {-1.0}, {11}), std::invalid_argument);
  const Grid g({0.0, 0.0}, {1.0, 2.0}, {11, 21}, {0, 1});
  CHECK(g.spacing(0) == Catch::Approx(0.1));
  CHECK(g.spacing(1) == Catch::Approx(2.0 / 21));  // periodic axis: no duplicate endpoint
  CHECK(g.size() == 11u * 21u);
}

TEST_CASE("apply_X: frame derivative examples") {
  SECTION("heisenberg, u = x3") {
    const GroupModel g = make_model("heisenberg");
    const Grid grid = make_grid(g, -1.0, 1.0, 17);
    const ScalarField u = sample(grid, [](const Vec& x) { return x[2]; });
    const ScalarField x1u = apply_X(g, 1.0, 0, u);
    const ScalarField x2u = apply_X(g, 1.0, 1, u);
    // X1 u = -x2, X2 u = x1; spot values at (0.5, 0.25, 0)
    CHECK(sup_err(x1u, [](const Vec& x) { return -x[1]; }) < 1e-12);
    CHECK(sup_err(x2u, [](const Vec& x) { return x[0]; }) < 1e-12);
    std::vector<int> idx{12, 10, 8};  // (0.5, 0.25, 0)
    const std::size_t p = grid.index(idx);
    CHECK(grid.point(p)[0] == Catch::Approx(0.5));
    CHECK(grid.point(p)[1] == Catch::Approx(0.25));
    CHECK(x1u.v[p] == Catch::Approx(-0.25).margin(1e-13));
    CHECK(x2u.v[p] == Catch::Approx(0.5).margin(1e-13));
  }
  SECTION("constants are annihilated, every model") {
    for (const char* name : {"heisenberg", "rototranslation", "free:2", "abelian:2"}) {
      const GroupModel g = make_model(name);
      const Grid grid = make_grid(g, -1.0, 1.0, 9);
      const ScalarField u = sample(grid, [](const Vec&) { return 3.7; });
      for (int i = 0; i < g.n; ++i) CHECK(sup_abs(apply_X(g, 1.0, i, u).v) < 1e-13);
    }
  }
  SECTION("abelian: exact on quadratics including boundary stencils") {
    const GroupModel g = make_model("abelian:1");
    const Grid grid = make_grid(g, 0.0, 1.0, 41);
    const ScalarField u = sample(grid, [](const Vec& x) { return x[0] * x[0]; });
    CHECK(sup_err(apply_X(g, 1.0, 0, u), [](const Vec& x) { return 2.0 * x[0]; }) < 1e-12);
  }
}

TEST_CASE("operators: polynomial exactness on degree <= 2") {
  // First derivatives are exact on degree-2 polynomials for every model
  // (polynomial differences are differenced exactly); second derivatives are
  // exact when the frame coefficients are affine, i.e. on the Carnot charts.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  for (const char* name : {"heisenberg", "rototranslation", "free:2", "abelian:3"}) {
    const GroupModel g = make_model(name);
    const Grid grid = make_grid(g, -1.0, 1.0, 9);
    // random quadratic q(x) = c + b.x + x^T Q x
    Vec b(g.n);
    Mat Q(g.n, g.n);
    for (int i = 0; i < g.n; ++i) {
      b[i] = coef(rng);
      for (int j = 0; j < g.n; ++j) Q(i, j) = coef(rng);
    }
    auto q = [&](const Vec& x) {
      double s = 0.4;
      for (int i = 0; i < g.n; ++i) {
        s += b[i] * x[i];
        for (int j = 0; j < g.n; ++j) s += Q(i, j) * x[i] * x[j];
      }
      return s;
    };
    auto dq = [&](const Vec& x, int a) {
      double s = b[a];
      for (int j = 0; j < g.n; ++j) s += (Q(a, j) + Q(j, a)) * x[j];
      return s;
    };
    const bool periodic_chart = !g.periodic_axes.empty();
    if (periodic_chart) continue;  // polynomials are not periodic in theta
    const ScalarField u = sample(grid, q);
    for (int i = 0; i < g.n; ++i) {
      const ScalarField xi_u = apply_X(g, 1.0, i, u);
      auto exact = [&](const Vec& x) {
        double s = 0.0;
        const Mat A = g.left_frame(x);
        for (int a = 0; a < g.n; ++a) s += A(a, i) * dq(x, a);
        return s;
      };
      CHECK(sup_err(xi_u, exact) < 1e-10);
    }
  }
}

TEST_CASE("apply_XX: composition and antisymmetry") {
  SECTION("heisenberg, u = x3: X1X2 u = 1, X2X1 u = -1") {
    const GroupModel g = make_model("heisenberg");
    const Grid grid = make_grid(g, -1.0, 1.0, 13);
    const ScalarField u = sample(grid, [](const Vec& x) { return x[2]; });
    CHECK(sup_err(apply_XX(g, 1.0, 0, 1, u), [](const Vec&) { return 1.0; }) < 1e-10);
    CHECK(sup_err(apply_XX(g, 1.0, 1, 0, u), [](const Vec&) { return -1.0; }) < 1e-10);
  }
  SECTION("abelian, u = x1 x2: X1X2 u = 1") {
    const GroupModel g = make_model("abelian:2");
    const Grid grid = make_grid(g, -1.0, 1.0, 13);
    const ScalarField u = sample(grid, [](const Vec& x) { return x[0] * x[1]; });
    CHECK(sup_err(apply_XX(g, 1.0, 0, 1, u), [](const Vec&) { return 1.0; }) < 1e-12);
  }
  SECTION("linear functions: (X_i X_j u) antisymmetric on the Carnot models") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    for (const char* name : {"heisenberg", "free:2", "abelian:2"}) {
      const GroupModel g = make_model(name);
      const Grid grid = make_grid(g, -1.0, 1.0, 9);
      for (int rep = 0; rep < 5; ++rep) {
        Vec a(g.n);
        for (double& v : a) v = coef(rng);
        const ScalarField u = sample(grid, [&](const Vec& x) {
          double s = 0.0;
          for (int k = 0; k < g.n; ++k) s += a[k] * x[k];
          return s;
        });
        for (double eps : {1.0, 0.25}) {
          std::vector<ScalarField> M;
          for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) M.push_back(apply_XX(g, eps, i, j, u));
          double sym = 0.0, contraction = 0.0;
          std::mt19937_64 rng2(5);
          for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j)
              for (std::size_t p = 0; p < grid.size(); ++p) {
                sym = std::max(sym, std::fabs(0.5 * (M[i * g.n + j].v[p] + M[j * g.n + i].v[p])));
                (void)rng2;
              }
          CHECK(sym < 1e-10);
          // any symmetric contraction of an antisymmetric matrix vanishes
          Mat S(g.n, g.n);
          for (int i = 0; i < g.n; ++i)
            for (int j = 0; j <= i; ++j) S(i, j) = S(j, i) = coef(rng);
          for (std::size_t p = 0; p < grid.size(); ++p) {
            double s = 0.0;
            for (int i = 0; i < g.n; ++i)
              for (int j = 0; j < g.n; ++j) s += S(i, j) * M[i * g.n + j].v[p];
            contraction = std::max(contraction, std::fabs(s));
          }
          CHECK(contraction < 1e-10);
        }
      }
    }
  }
  SECTION("rototranslation: chart-linear functions are NOT flat") {
    // With f = x1, the mixed derivative X2 X1 f = -sin(theta) while
    // X1 X2 f = 0: the matrix is genuinely non-antisymmetric, which is why
    // the flatness-based checks restrict to the Carnot models.
    const GroupModel g = make_model("rototranslation");
    const Grid grid = make_grid(g, -1.0, 1.0, 33);
    const ScalarField u = sample(grid, [](const Vec& x) { return x[0]; });
    const ScalarField m21 = apply_XX(g, 1.0, 1, 0, u);
    const ScalarField m12 = apply_XX(g, 1.0, 0, 1, u);
    const double htheta = grid.spacing(2);
    CHECK(sup_err(m21, [](const Vec& x) { return -std::sin(x[2]); }) < 1.3 * htheta * htheta / 6.0);
    CHECK(sup_abs(m12.v) < 1e-12);
    double sym = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p)
      sym = std::max(sym, std::fabs(0.5 * (m12.v[p] + m21.v[p])));
    CHECK(sym > 0.4);  // ~ sup |sin|/2
  }
}

TEST_CASE("grad_eps: components and monotonicity") {
  const GroupModel g = make_model("heisenberg");
  const Grid grid = make_grid(g, -1.0, 1.0, 17);
  SECTION("zero field") {
    const ScalarField u(grid, 0.0);
    for (const ScalarField& c : grad_eps(g, 1.0, u)) CHECK(sup_abs(c.v) == 0.0);
  }
  SECTION("eps = 0 returns the m horizontal components") {
    const ScalarField u = sample(grid, [](const Vec& x) { return x[2]; });
    const auto comps = grad_eps(g, 0.0, u);
    REQUIRE(comps.size() == 2);
    // X1 x3 = -x2 and X2 x3 = x1 vanish at the origin
    const std::size_t origin = grid.index({8, 8, 8});
    CHECK(std::fabs(comps[0].v[origin]) < 1e-13);
    CHECK(std::fabs(comps[1].v[origin]) < 1e-13);
  }
  SECTION("|grad_eps u| <= |grad_1 u| pointwise for eps <= 1") {
    const ScalarField u = sample(grid, [](const Vec& x) {
      return std::sin(x[0]) * x[1] + 0.3 * x[2] * x[2];
    });
    const auto g1 = grad_eps(g, 1.0, u);
    const auto ge = grad_eps(g, 0.5, u);
    for (std::size_t p = 0; p < grid.size(); ++p) {
      double n1 = 0.0, ne = 0.0;
      for (int i = 0; i < 3; ++i) {
        n1 += g1[i].v[p] * g1[i].v[p];
        ne += ge[i].v[p] * ge[i].v[p];
      }
      CHECK(ne <= n1 + 1e-15);
    }
  }
}

TEST_CASE("coeff_a: spectrum") {
  SECTION("xi = 0 gives the identity") {
    const Mat A = coeff_a({0.0, 0.0, 0.0});
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(A(i, j) == (i == j ? 1.0 : 0.0));
  }
  SECTION("xi = e1 gives diag(1/2, 1, 1)") {
    const Mat A = coeff_a({1.0, 0.0, 0.0});
    CHECK(A(0, 0) == Catch::Approx(0.5));
    CHECK(A(1, 1) == 1.0);
    CHECK(A(2, 2) == 1.0);
    CHECK(A(0, 1) == 0.0);
  }
  SECTION("random xi: eigenvalues in [1/(1+|xi|^2), 1]") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    for (int rep = 0; rep < 20; ++rep) {
      Vec xi(4);
      double n2 = 0.0;
      for (double& v : xi) {
        v = coef(rng);
        n2 += v * v;
      }
      const auto ev = jacobi_eigenvalues(coeff_a(xi));
      CHECK(ev.front() == Catch::Approx(1.0 / (1.0 + n2)).margin(1e-12));
      CHECK(ev.back() == Catch::Approx(1.0).margin(1e-12));
      for (double l : ev) {
        CHECK(l >= 1.0 / (1.0 + n2) - 1e-12);
        CHECK(l <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("mean_curvature_term: flat data and the 1D analytic value") {
  SECTION("constants: exactly zero") {
    const GroupModel g = make_model("heisenberg");
    const Grid grid = make_grid(g, -1.0, 1.0, 9);
    CHECK(sup_abs(mean_curvature_term(g, 1.0, ScalarField(grid, 2.0)).v) == 0.0);
  }
  SECTION("linear data on the Carnot models: flat for every eps") {
    for (const char* name : {"heisenberg", "free:2", "abelian:2"}) {
      const GroupModel g = make_model(name);
      const Grid grid = make_grid(g, -1.0, 1.0, 9);
      const ScalarField u = sample(grid, [&](const Vec& x) {
        double s = 0.1;
        for (int k = 0; k < g.n; ++k) s += (0.3 + 0.2 * k) * x[k];
        return s;
      });
      for (double eps : {0.0, 0.25, 1.0}) CHECK(sup_abs(mean_curvature_term(g, eps, u).v) < 1e-10);
    }
  }
  SECTION("rototranslation: theta-free linear data are flat") {
    const GroupModel g = make_model("rototranslation");
    const Grid grid = make_grid(g, -1.0, 1.0, 9);
    const ScalarField u = sample(grid, [](const Vec& x) { return 0.4 * x[0] - 0.3 * x[1]; });
    for (double eps : {0.0, 0.25, 1.0}) CHECK(sup_abs(mean_curvature_term(g, eps, u).v) < 1e-12);
  }
  SECTION("abelian(1): u = sin(pi x), value -pi^2 at x = 1/2") {
    const GroupModel g = make_model("abelian:1");
    const Grid grid(Vec{0.0}, Vec{1.0}, {201});
    const ScalarField u = sample(grid, [](const Vec& x) { return std::sin(std::numbers::pi * x[0]); });
    const ScalarField mc = mean_curvature_term(g, 1.0, u);
    const std::size_t mid = grid.index({100});
    const double pi2 = std::numbers::pi * std::numbers::pi;
    // first-derivative composition acts as the wide second difference (2h)
    const double h = grid.spacing(0);
    CHECK(mc.v[mid] == Catch::Approx(-pi2).margin(1.3 * pi2 * pi2 * (2 * h) * (2 * h) / 12.0));
  }
}

TEST_CASE("apply_right_X: right-invariant derivatives") {
  SECTION("abelian: right equals left") {
    const GroupModel g = make_model("abelian:2");
    const Grid grid = make_grid(g, -1.0, 1.0, 11);
    const ScalarField u = sample(grid, [](const Vec& x) { return x[0] * x[0] - 0.5 * x[1]; });
    for (int i = 0; i < 2; ++i) {
      const ScalarField r = apply_right_X(g, i, u);
      const ScalarField l = apply_X(g, 1.0, i, u);
      for (std::size_t p = 0; p < grid.size(); ++p) CHECK(r.v[p] == Catch::Approx(l.v[p]).margin(1e-14));
    }
  }
  SECTION("heisenberg, u = x3: X1^r u = +x2") {
    const GroupModel g = make_model("heisenberg");
    const Grid grid = make_grid(g, -1.0, 1.0, 13);
    const ScalarField u = sample(grid, [](const Vec& x) { return x[2]; });
    CHECK(sup_err(apply_right_X(g, 0, u), [](const Vec& x) { return x[1]; }) < 1e-10);
  }
  SECTION("right and left derivatives commute on quadratics") {
    for (const char* name : {"heisenberg", "free:2"}) {
      const GroupModel g = make_model(name);
      const Grid grid = make_grid(g, -1.0, 1.0, 11);
      const ScalarField u = sample(grid, [&](const Vec& x) {
        double s = 0.0;
        for (int k = 0; k < g.n; ++k) s += x[k] * x[(k + 1) % g.n] + 0.3 * x[k];
        return s;
      });
      for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
          const ScalarField rl = apply_right_X(g, i, apply_X(g, 1.0, j, u));
          const ScalarField lr = apply_X(g, 1.0, j, apply_right_X(g, i, u));
          double gap = 0.0;
          for (std::size_t p = 0; p < grid.size(); ++p)
            gap = std::max(gap, std::fabs(rl.v[p] - lr.v[p]));
          CHECK(gap < 1e-8);
        }
    }
  }
}

TEST_CASE("operators: first-derivative convergence order >= 1.9") {
  const GroupModel g = make_model("heisenberg");
  auto exact = [&](const Vec& x, int i) {
    // u = sin(x1) x2 + cos(x3)
    const double du1 = std::cos(x[0]) * x[1];
    const double du2 = std::sin(x[0]);
    const double du3 = -std::sin(x[2]);
    const Mat A = g.left_frame(x);
    return A(0, i) * du1 + A(1, i) * du2 + A(2, i) * du3;
  };
  auto err_at = [&](int pts) {
    const Grid grid = make_grid(g, -1.0, 1.0, pts);
    const ScalarField u = sample(grid, [](const Vec& x) {
      return std::sin(x[0]) * x[1] + std::cos(x[2]);
    });
    double m = 0.0;
    for (int i = 0; i < 3; ++i) {
      const ScalarField xi_u = apply_X(g, 1.0, i, u);
      m = std::max(m, sup_err(xi_u, [&](const Vec& x) { return exact(x, i); }));
    }
    return m;
  };
  const double e1 = err_at(17);
  const double e2 = err_at(33);
  const double order = std::log2(e1 / e2);
  CHECK(order >= 1.9);
}
