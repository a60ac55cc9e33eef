#pragma once

#include <Eigen/Dense>

#include "homlab/grid.hpp"
#include "homlab/rng.hpp"
#include "homlab/torus_field.hpp"

namespace homlab::testing {

inline GridFunction random_field(const Grid& g, std::uint64_t seed) {
  GridFunction f(g);
  Rng rng(seed);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = rng.normal();
  return f;
}

// Dense assembly of the 2-d divergence-form stencil, written independently of
// the operator implementation: the brute-force oracle for small grids.
inline Eigen::MatrixXd dense_operator(const TorusField& A, double eps,
                                      const GridFunction& q, const Grid& g) {
  const int n = g.n;
  const double h = g.h();
  const double ih2 = 1.0 / (h * h);
  auto pos = [&](int i) { return (i + 1) * h / eps; };
  auto harm = [](double a, double b) { return 2 * a * b / (a + b); };
  const int N = n * n;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int c = j * n + i;
      const double aW = harm(A.eval({pos(i - 1), pos(j), 0}, 0, 0),
                             A.eval({pos(i), pos(j), 0}, 0, 0));
      const double aE = harm(A.eval({pos(i), pos(j), 0}, 0, 0),
                             A.eval({pos(i + 1), pos(j), 0}, 0, 0));
      const double aS = harm(A.eval({pos(i), pos(j - 1), 0}, 1, 1),
                             A.eval({pos(i), pos(j), 0}, 1, 1));
      const double aN = harm(A.eval({pos(i), pos(j), 0}, 1, 1),
                             A.eval({pos(i), pos(j + 1), 0}, 1, 1));
      M(c, c) = ih2 * (aW + aE + aS + aN) + q[c];
      if (i > 0) M(c, c - 1) = -ih2 * aW;
      if (i < n - 1) M(c, c + 1) = -ih2 * aE;
      if (j > 0) M(c, c - n) = -ih2 * aS;
      if (j < n - 1) M(c, c + n) = -ih2 * aN;
    }
  return M;
}

}  // namespace homlab::testing
