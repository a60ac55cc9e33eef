#pragma once

#include <Eigen/Core>

#include <memory>
#include <span>

#include "homlab/grid.hpp"
#include "homlab/torus_field.hpp"

namespace homlab {

// Symmetric positive definite operator on the interior nodes of a Grid.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual const Grid& grid() const = 0;
  virtual void apply(std::span<const double> x, std::span<double> y) const = 0;
};

// Discrete divergence-form operator  -d_i(a_ij(x/eps) d_j .) + q(x) .
//
// Diagonal entries of A are sampled at cell faces as the harmonic mean of the
// values at the two adjacent node positions (walls included); this keeps the
// operator self-adjoint and reproduces the layered-media harmonic mean
// exactly. Off-diagonal entries, when present, use node-centered values with
// centered differences, which preserves symmetry for symmetric A.
class OscillatoryOperator final : public LinearOperator {
 public:
  OscillatoryOperator(const TorusField& A, double eps,
                      const GridFunction& potential, const Grid& grid);

  const Grid& grid() const override { return grid_; }
  void apply(std::span<const double> x, std::span<double> y) const override;

  double eps() const { return eps_; }
  // Arithmetic mean of the face coefficients along one axis; feeds the
  // constant-coefficient preconditioner.
  double mean_face_coefficient(int axis) const { return mean_face_[axis]; }
  double mean_potential() const { return mean_potential_; }

  std::span<const double> potential() const { return q_; }
  // Replace the zeroth-order coefficient (the A-part is unchanged). Used by
  // sweeps that reuse one assembly across many potential realizations.
  void set_potential(const GridFunction& potential);

 private:
  Grid grid_;
  double eps_ = 0.0;
  int n_ = 0;
  double inv_h2_ = 0.0;
  std::vector<double> fx_, fy_, fz_;   // face coefficients per axis
  std::vector<double> a12_, a13_, a23_;  // node-centered off-diagonal entries
  std::vector<double> q_;
  std::array<double, 3> mean_face_{0, 0, 0};
  double mean_potential_ = 0.0;
  bool has_offdiag_ = false;
};

// Constant-coefficient homogenized operator  -abar_ij d^2_ij . + qbar .
// Mixed derivatives use the standard centered cross-difference stencil.
class HomogenizedOperator final : public LinearOperator {
 public:
  HomogenizedOperator(const Eigen::MatrixXd& a_bar, double q_bar,
                      const Grid& grid);

  const Grid& grid() const override { return grid_; }
  void apply(std::span<const double> x, std::span<double> y) const override;

  const Eigen::MatrixXd& a_bar() const { return a_bar_; }
  double q_bar() const { return q_bar_; }
  bool separable() const { return separable_; }

 private:
  Grid grid_;
  Eigen::MatrixXd a_bar_;
  double q_bar_ = 0.0;
  int n_ = 0;
  double inv_h2_ = 0.0;
  bool separable_ = true;
};

// Factory matching the spec'd operation name.
std::unique_ptr<OscillatoryOperator> assemble_oscillatory(
    const TorusField& A, double eps, const GridFunction& potential,
    const Grid& grid);

}  // namespace homlab
