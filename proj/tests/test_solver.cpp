#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "homlab/operators.hpp"
#include "homlab/solver.hpp"
#include "test_helpers.hpp"

using namespace homlab;
using homlab::testing::dense_operator;

namespace {

GridFunction sine_source(const Grid& g) {
  const double c = 2.0 * M_PI * M_PI;
  return GridFunction::sample(g, [&](double x, double y, double) {
    return c * std::sin(M_PI * x) * std::sin(M_PI * y);
  });
}

GridFunction sine_mode(const Grid& g) {
  return GridFunction::sample(g, [&](double x, double y, double) {
    return std::sin(M_PI * x) * std::sin(M_PI * y);
  });
}

double manufactured_max_error(int n) {
  Grid g(2, n);
  const TorusField I = TorusField::pattern("identity", 2, 8);
  auto op = assemble_oscillatory(I, 1.0, GridFunction(g, 0.0), g);
  const GridFunction u = solve_dirichlet(*op, sine_source(g), 1e-10);
  GridFunction err = u;
  err -= sine_mode(g);
  return err.max_norm();
}

}  // namespace

TEST_CASE("manufactured solution: second-order convergence") {
  const double e1 = manufactured_max_error(31);
  const double e2 = manufactured_max_error(63);
  CHECK(e1 < 2e-3);
  const double ratio = e1 / e2;
  CHECK(ratio > 3.2);
  CHECK(ratio < 4.8);
}

TEST_CASE("zero source returns the zero solution without iterating") {
  Grid g(2, 31);
  const TorusField I = TorusField::pattern("identity", 2, 8);
  auto op = assemble_oscillatory(I, 1.0, GridFunction(g, 0.0), g);
  SolveReport rep;
  const GridFunction u = solve_dirichlet(*op, GridFunction(g, 0.0), 1e-10, &rep);
  CHECK(rep.iterations == 0);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(u[i] == 0.0);
}

TEST_CASE("eigenfunction identity with q=1, checked against a dense solve") {
  Grid g(2, 31);
  const double h = g.h();
  const TorusField I = TorusField::pattern("identity", 2, 8);
  const GridFunction q1(g, 1.0);
  auto op = assemble_oscillatory(I, 1.0, q1, g);
  const GridFunction f = sine_source(g);
  const GridFunction u = solve_dirichlet(*op, f, 1e-12);

  // sin sin is an exact eigenvector of the discrete Laplacian.
  const double lam_h = 2.0 * (2.0 - 2.0 * std::cos(M_PI * h)) / (h * h);
  const GridFunction mode = sine_mode(g);
  const double factor = 2.0 * M_PI * M_PI / (lam_h + 1.0);
  for (std::size_t i = 0; i < u.size(); ++i)
    CHECK(u[i] == doctest::Approx(factor * mode[i]).epsilon(1e-8));
  // ... and close to the continuum identity 2pi^2/(2pi^2 + 1).
  CHECK(factor == doctest::Approx(2.0 * M_PI * M_PI / (2.0 * M_PI * M_PI + 1.0))
                      .epsilon(2e-3));

  // Dense oracle agreement.
  const Eigen::MatrixXd M = dense_operator(I, 1.0, q1, g);
  Eigen::VectorXd rhs(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) rhs(static_cast<Eigen::Index>(i)) = f[i];
  const Eigen::VectorXd ud = M.ldlt().solve(rhs);
  for (std::size_t i = 0; i < u.size(); ++i)
    CHECK(u[i] == doctest::Approx(ud(static_cast<Eigen::Index>(i))).epsilon(1e-8));
}

TEST_CASE("oscillatory solve converges fast under the DST preconditioner") {
  Grid g(2, 63);
  const TorusField A = TorusField::pattern("sin-layered", 2, 64);
  OscillatoryOperator op(A, 0.125, GridFunction(g, 1.0), g);
  DirichletSolver solver(op);
  const GridFunction u = solver.solve(sine_source(g), 1e-10);
  CHECK(solver.last_report().converged);
  CHECK(solver.last_report().iterations < 60);
  CHECK(solver.last_report().rel_residual <= 1e-10);
  CHECK(u.l2_norm() > 0.01);
}

TEST_CASE("solver rejects bad tolerance and mismatched grids") {
  Grid g(2, 15);
  const TorusField I = TorusField::pattern("identity", 2, 8);
  auto op = assemble_oscillatory(I, 1.0, GridFunction(g, 0.0), g);
  CHECK_THROWS_AS(solve_dirichlet(*op, GridFunction(g, 1.0), 0.0), std::invalid_argument);
  Grid g2(2, 17);
  CHECK_THROWS_AS(solve_dirichlet(*op, GridFunction(g2, 1.0), 1e-8), std::invalid_argument);
}

TEST_CASE("greens column: symmetry, maximum principle, log profile") {
  const TorusField I = TorusField::pattern("identity", 2, 8);

  SUBCASE("self-adjointness: G(y)(z) = G(z)(y)") {
    Grid g(2, 31);
    auto op = assemble_oscillatory(I, 1.0, GridFunction(g, 0.0), g);
    const std::array<int, 3> y{8, 11, 0}, z{20, 25, 0};
    const GridFunction gy = greens_column(*op, y, 1e-12);
    const GridFunction gz = greens_column(*op, z, 1e-12);
    const std::size_t iz = static_cast<std::size_t>(z[1]) * g.n + z[0];
    const std::size_t iy = static_cast<std::size_t>(y[1]) * g.n + y[0];
    CHECK(gy[iz] == doctest::Approx(gz[iy]).epsilon(1e-7));
  }

  SUBCASE("positive potential lowers the column pointwise") {
    Grid g(2, 31);
    auto op0 = assemble_oscillatory(I, 1.0, GridFunction(g, 0.0), g);
    auto op1 = assemble_oscillatory(I, 1.0, GridFunction(g, 2.0), g);
    const std::array<int, 3> y{15, 15, 0};
    const GridFunction g0 = greens_column(*op0, y, 1e-12);
    const GridFunction g1 = greens_column(*op1, y, 1e-12);
    for (std::size_t i = 0; i < g0.size(); ++i) CHECK(g1[i] <= g0[i] + 1e-9);
  }

  SUBCASE("free-space log comparison away from the boundary") {
    Grid g(2, 63);
    auto op = assemble_oscillatory(I, 1.0, GridFunction(g, 0.0), g);
    const std::array<int, 3> y{31, 31, 0};
    const GridFunction col = greens_column(*op, y, 1e-12);
    const double xc = g.coord(31), yc = g.coord(31);
    // Fit col = -(1/2pi) log r + c0 on an annulus; the slope against the
    // free-space profile must be ~1.
    std::vector<double> xs, ys;
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        const double dx = g.coord(i) - xc, dy = g.coord(j) - yc;
        const double r = std::sqrt(dx * dx + dy * dy);
        if (r < 4 * g.h() || r > 0.15) continue;
        xs.push_back(-std::log(r) / (2.0 * M_PI));
        ys.push_back(col[static_cast<std::size_t>(j) * g.n + i]);
      }
    REQUIRE(xs.size() > 50);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      sx += xs[k];
      sy += ys[k];
      sxx += xs[k] * xs[k];
      sxy += xs[k] * ys[k];
    }
    const double m = static_cast<double>(xs.size());
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    CHECK(slope == doctest::Approx(1.0).epsilon(0.05));
    // Bounded ratio to 1 + |log r|.
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const double logr = -2.0 * M_PI * xs[k];
      CHECK(std::abs(ys[k]) <= 1.0 * (1.0 + std::abs(logr)));
    }
  }

  SUBCASE("boundary source rejected") {
    Grid g(2, 15);
    auto op = assemble_oscillatory(I, 1.0, GridFunction(g, 0.0), g);
    CHECK_THROWS_AS(greens_column(*op, {-1, 3, 0}), std::invalid_argument);
    CHECK_THROWS_AS(greens_column(*op, {15, 3, 0}), std::invalid_argument);
  }
}

TEST_CASE("3d manufactured solution converges at second order") {
  auto err3 = [](int n) {
    Grid g(3, n);
    const TorusField I = TorusField::pattern("identity", 3, 8);
    auto op = assemble_oscillatory(I, 1.0, GridFunction(g, 0.0), g);
    const double c = 3.0 * M_PI * M_PI;
    const GridFunction f = GridFunction::sample(g, [&](double x, double y, double z) {
      return c * std::sin(M_PI * x) * std::sin(M_PI * y) * std::sin(M_PI * z);
    });
    const GridFunction u = solve_dirichlet(*op, f, 1e-10);
    GridFunction exact = GridFunction::sample(g, [&](double x, double y, double z) {
      return std::sin(M_PI * x) * std::sin(M_PI * y) * std::sin(M_PI * z);
    });
    exact -= u;
    return exact.max_norm();
  };
  const double e1 = err3(11), e2 = err3(23);
  CHECK(e1 / e2 > 3.2);
  CHECK(e1 / e2 < 4.8);
}
