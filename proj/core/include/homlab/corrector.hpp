#pragma once

#include <Eigen/Core>

#include <vector>

#include "homlab/torus_field.hpp"

namespace homlab {

// Scalar field on the m^d periodic unit-cell grid (spacing 1/m).
struct CellField {
  int dim = 2;
  int m = 0;
  std::vector<double> values;

  double mean() const;
  double max_abs() const;
};

// Solves the periodic cell problem for the corrector in direction k
// (0-based): -d_i(a_ij (e_k + d_j chi)) = 0 on the torus, zero cell mean.
// The mean constraint is enforced by projecting out the constant mode each
// CG iteration; the system is preconditioned by the constant-coefficient
// periodic FFT inverse.
CellField solve_corrector(const TorusField& A, int k, int cell_n = 0,
                          double tol = 1e-10);

// Effective matrix  abar_ij = \int_T a_ik (delta_kj + d chi^j / d y_k) dy,
// evaluated with the same face/centered sampling as the discrete cell
// operator and symmetrized. `correctors` must hold the d fields from
// solve_corrector on A's own resolution.
Eigen::MatrixXd effective_matrix(const TorusField& A,
                                 const std::vector<CellField>& correctors);

struct EffectiveModel {
  Eigen::MatrixXd a_bar;
  double q_bar = 0.0;
  std::vector<CellField> correctors;
};

// Convenience: solve all d correctors and assemble abar. q_bar is supplied by
// the potential model.
EffectiveModel effective_model(const TorusField& A, double q_bar,
                               int cell_n = 0, double tol = 1e-10);

// Classical cell-average bounds: harmonic mean (int A^{-1})^{-1} and
// arithmetic mean (int A), by quadrature over the samples.
Eigen::MatrixXd harmonic_mean_matrix(const TorusField& A);
Eigen::MatrixXd arithmetic_mean_matrix(const TorusField& A);

}  // namespace homlab
