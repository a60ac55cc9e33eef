#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "homlab/grid.hpp"

using namespace homlab;

TEST_CASE("grid spacing and node counts") {
  Grid g(2, 255);
  CHECK(g.h() == doctest::Approx(1.0 / 256).epsilon(1e-15));
  CHECK(g.h() * (g.n + 1) == doctest::Approx(g.extent).epsilon(1e-15));
  CHECK(g.num_nodes() == 255u * 255u);

  Grid g3(3, 15);
  CHECK(g3.num_nodes() == 15u * 15u * 15u);
  CHECK_THROWS_AS(Grid(4, 10), std::invalid_argument);
  CHECK_THROWS_AS(Grid(2, 0), std::invalid_argument);
}

TEST_CASE("l2 norm is the h^d-weighted quadrature") {
  Grid g(2, 31);
  GridFunction ones(g, 1.0);
  // sum h^2 over interior nodes: (n h)^2 = (31/32)^2
  CHECK(ones.l2_norm() == doctest::Approx(31.0 / 32.0).epsilon(1e-14));
  GridFunction s = GridFunction::sample(
      g, [](double x, double y, double) { return std::sin(M_PI * x) * std::sin(M_PI * y); });
  // ||sin sin||_{L2}^2 = 1/4; the grid sum is exact for this eigenvector mode.
  CHECK(s.l2_norm() == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("binary dump round-trips bit for bit") {
  Grid g(2, 9);
  GridFunction f = GridFunction::sample(
      g, [](double x, double y, double) { return std::cos(3 * x) + y * y; });
  const auto path = std::filesystem::temp_directory_path() / "homlab_dump_test.bin";
  f.write_binary(path.string());
  GridFunction back = GridFunction::read_binary(path.string());
  REQUIRE(back.size() == f.size());
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(back[i] == f[i]);
  std::filesystem::remove(path);
}

TEST_CASE("csv header matches dimension") {
  Grid g(2, 3);
  GridFunction f(g, 1.0);
  std::ostringstream os;
  f.write_csv(os);
  CHECK(os.str().substr(0, 10) == "x,y,value\n");
}
