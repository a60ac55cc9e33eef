#include "homlab/solver.hpp"

#include <cmath>
#include <vector>

namespace homlab {

SolveReport pcg(const LinearOperator& op, std::span<const double> b,
                std::span<double> x,
                const std::function<void(std::span<const double>, std::span<double>)>& precond,
                double tol, int max_iterations) {
  const std::size_t size = b.size();
  SolveReport rep;
  const double bnorm = norm2(b);
  std::fill(x.begin(), x.end(), 0.0);
  if (bnorm == 0.0) return rep;

  std::vector<double> r(b.begin(), b.end());
  std::vector<double> z(size), p(size), Ap(size);

  if (precond)
    precond(r, z);
  else
    std::copy(r.begin(), r.end(), z.begin());
  p = z;
  double rz = dot(r, z);

  for (int it = 1; it <= max_iterations; ++it) {
    op.apply(p, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0)) {
      rep.converged = false;
      rep.iterations = it;
      rep.rel_residual = norm2(r) / bnorm;
      throw SolverError("pcg: operator lost positive definiteness", rep);
    }
    const double alpha = rz / pAp;
    for (std::size_t i = 0; i < size; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    rep.iterations = it;
    rep.rel_residual = norm2(r) / bnorm;
    if (rep.rel_residual <= tol) return rep;

    if (precond)
      precond(r, z);
    else
      std::copy(r.begin(), r.end(), z.begin());
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < size; ++i) p[i] = z[i] + beta * p[i];
  }
  rep.converged = false;
  throw SolverError("pcg: no convergence within iteration cap (final relative residual " +
                        std::to_string(rep.rel_residual) + ")",
                    rep);
}

DirichletSolver::DirichletSolver(const OscillatoryOperator& op) : op_(&op) {
  precond_ = std::make_unique<DstSolver>(
      op.grid(),
      std::array<double, 3>{op.mean_face_coefficient(0), op.mean_face_coefficient(1),
                            op.mean_face_coefficient(2)},
      op.mean_potential());
}

DirichletSolver::DirichletSolver(const HomogenizedOperator& op) : op_(&op) {
  precond_ = std::make_unique<DstSolver>(
      op.grid(),
      std::array<double, 3>{op.a_bar()(0, 0), op.a_bar()(1, 1),
                            op.grid().dim == 3 ? op.a_bar()(2, 2) : 0.0},
      op.q_bar());
}

GridFunction DirichletSolver::solve(const GridFunction& f, double tol) {
  if (!(tol > 0)) throw std::invalid_argument("solve: tol must be > 0");
  if (f.grid() != op_->grid()) throw std::invalid_argument("solve: grid mismatch");
  GridFunction u(f.grid());
  auto pre = [this](std::span<const double> r, std::span<double> z) {
    precond_->solve(r, z);
  };
  report_ = pcg(*op_, f.values(), u.values(), pre, tol, 50 * op_->grid().n);
  return u;
}

GridFunction solve_dirichlet(const LinearOperator& op, const GridFunction& f,
                             double tol, SolveReport* report) {
  if (!(tol > 0)) throw std::invalid_argument("solve_dirichlet: tol must be > 0");
  if (f.grid() != op.grid())
    throw std::invalid_argument("solve_dirichlet: grid mismatch");
  SolveReport rep;
  GridFunction u(f.grid());
  if (auto* osc = dynamic_cast<const OscillatoryOperator*>(&op)) {
    DirichletSolver solver(*osc);
    u = solver.solve(f, tol);
    rep = solver.last_report();
  } else if (auto* hom = dynamic_cast<const HomogenizedOperator*>(&op)) {
    DirichletSolver solver(*hom);
    u = solver.solve(f, tol);
    rep = solver.last_report();
  } else {
    rep = pcg(op, f.values(), u.values(), nullptr, tol, 50 * op.grid().n);
  }
  if (report) *report = rep;
  return u;
}

GridFunction greens_column(const LinearOperator& op, const std::array<int, 3>& y,
                           double tol) {
  const Grid& g = op.grid();
  for (int a = 0; a < g.dim; ++a)
    if (y[a] < 0 || y[a] >= g.n)
      throw std::invalid_argument("greens_column: source node on or outside the boundary");
  GridFunction rhs(g);
  std::size_t idx = y[g.dim - 1];
  for (int a = g.dim - 2; a >= 0; --a) idx = idx * g.n + y[a];
  rhs[idx] = 1.0 / g.cell_volume();
  return solve_dirichlet(op, rhs, tol);
}

}  // namespace homlab
