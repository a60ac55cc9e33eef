#pragma once

#include <functional>
#include <memory>
#include <stdexcept>

#include "homlab/fast_poisson.hpp"
#include "homlab/grid.hpp"
#include "homlab/operators.hpp"

namespace homlab {

struct SolveReport {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = true;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, const SolveReport& report)
      : std::runtime_error(what), report(report) {}
  SolveReport report;
};

// Preconditioned conjugate gradients on raw value arrays. The preconditioner
// callback must be SPD; pass nullptr for plain CG. Deterministic for fixed
// inputs (serial reductions, fixed iteration order).
SolveReport pcg(const LinearOperator& op, std::span<const double> b,
                std::span<double> x,
                const std::function<void(std::span<const double>, std::span<double>)>& precond,
                double tol, int max_iterations);

// Dirichlet solve bundle: owns the DST preconditioner matched to an operator
// and reusable scratch, so repeated solves against the same A-part are cheap.
// Not thread-safe; one instance per thread.
class DirichletSolver {
 public:
  explicit DirichletSolver(const OscillatoryOperator& op);
  explicit DirichletSolver(const HomogenizedOperator& op);

  // Relative-residual tolerance `tol`, iteration cap 50*n. Zero f returns
  // zero u without iterating. Throws SolverError on non-convergence.
  GridFunction solve(const GridFunction& f, double tol = 1e-10);
  SolveReport last_report() const { return report_; }

  const LinearOperator& op() const { return *op_; }

 private:
  const LinearOperator* op_ = nullptr;
  std::unique_ptr<DstSolver> precond_;
  SolveReport report_;
};

// One-shot spec entry point.
GridFunction solve_dirichlet(const LinearOperator& op, const GridFunction& f,
                             double tol, SolveReport* report = nullptr);

// Discrete Green's function column G(., y): solves op g = delta_y / h^d.
// `y` is an interior node multi-index; out-of-range (boundary) indices are
// rejected.
GridFunction greens_column(const LinearOperator& op, const std::array<int, 3>& y,
                           double tol = 1e-10);

}  // namespace homlab
