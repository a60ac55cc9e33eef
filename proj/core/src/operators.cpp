#include "homlab/operators.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace homlab {

namespace {

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

}  // namespace

OscillatoryOperator::OscillatoryOperator(const TorusField& A, double eps,
                                         const GridFunction& potential,
                                         const Grid& grid)
    : grid_(grid), eps_(eps), n_(grid.n) {
  if (!(eps > 0)) throw std::invalid_argument("assemble_oscillatory: eps must be > 0");
  if (A.dim() != grid.dim)
    throw std::invalid_argument("assemble_oscillatory: coefficient/grid dim mismatch");
  if (potential.grid() != grid)
    throw std::invalid_argument("assemble_oscillatory: potential grid mismatch");
  for (double qv : potential.values())
    if (qv < 0.0)
      throw std::invalid_argument("assemble_oscillatory: negative potential entry");

  const double h = grid.h();
  inv_h2_ = 1.0 / (h * h);
  q_.assign(potential.values().begin(), potential.values().end());
  double qsum = 0.0;
  for (double qv : q_) qsum += qv;
  mean_potential_ = q_.empty() ? 0.0 : qsum / static_cast<double>(q_.size());

  // Node position along an axis, walls included: node index -1..n.
  auto pos = [&](int i) { return (i + 1) * h / eps; };

  const int n = n_;
  if (grid.dim == 2) {
    fx_.resize(static_cast<std::size_t>(n + 1) * n);
    fy_.resize(static_cast<std::size_t>(n) * (n + 1));
    for (int j = 0; j < n; ++j) {
      const double yj = pos(j);
      for (int i = 0; i <= n; ++i) {
        const double al = A.eval({pos(i - 1), yj, 0.0}, 0, 0);
        const double ar = A.eval({pos(i), yj, 0.0}, 0, 0);
        fx_[static_cast<std::size_t>(j) * (n + 1) + i] = harmonic(al, ar);
      }
    }
    for (int j = 0; j <= n; ++j) {
      for (int i = 0; i < n; ++i) {
        const double xi = pos(i);
        const double ab = A.eval({xi, pos(j - 1), 0.0}, 1, 1);
        const double at = A.eval({xi, pos(j), 0.0}, 1, 1);
        fy_[static_cast<std::size_t>(j) * n + i] = harmonic(ab, at);
      }
    }
    if (!A.is_diagonal()) {
      has_offdiag_ = true;
      a12_.resize(static_cast<std::size_t>(n) * n);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          a12_[static_cast<std::size_t>(j) * n + i] =
              A.eval({pos(i), pos(j), 0.0}, 0, 1);
    }
  } else {
    fx_.resize(static_cast<std::size_t>(n + 1) * n * n);
    fy_.resize(static_cast<std::size_t>(n) * (n + 1) * n);
    fz_.resize(static_cast<std::size_t>(n) * n * (n + 1));
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i <= n; ++i)
          fx_[(static_cast<std::size_t>(k) * n + j) * (n + 1) + i] = harmonic(
              A.eval({pos(i - 1), pos(j), pos(k)}, 0, 0),
              A.eval({pos(i), pos(j), pos(k)}, 0, 0));
    for (int k = 0; k < n; ++k)
      for (int j = 0; j <= n; ++j)
        for (int i = 0; i < n; ++i)
          fy_[(static_cast<std::size_t>(k) * (n + 1) + j) * n + i] = harmonic(
              A.eval({pos(i), pos(j - 1), pos(k)}, 1, 1),
              A.eval({pos(i), pos(j), pos(k)}, 1, 1));
    for (int k = 0; k <= n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          fz_[(static_cast<std::size_t>(k) * n + j) * n + i] = harmonic(
              A.eval({pos(i), pos(j), pos(k - 1)}, 2, 2),
              A.eval({pos(i), pos(j), pos(k)}, 2, 2));
    if (!A.is_diagonal()) {
      has_offdiag_ = true;
      const std::size_t nn = grid.num_nodes();
      a12_.resize(nn);
      a13_.resize(nn);
      a23_.resize(nn);
      std::size_t idx = 0;
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
          for (int i = 0; i < n; ++i, ++idx) {
            const std::array<double, 3> y{pos(i), pos(j), pos(k)};
            a12_[idx] = A.eval(y, 0, 1);
            a13_[idx] = A.eval(y, 0, 2);
            a23_[idx] = A.eval(y, 1, 2);
          }
    }
  }

  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  mean_face_[0] = mean_of(fx_);
  mean_face_[1] = mean_of(fy_);
  mean_face_[2] = grid.dim == 3 ? mean_of(fz_) : 0.0;
}

void OscillatoryOperator::set_potential(const GridFunction& potential) {
  if (potential.grid() != grid_)
    throw std::invalid_argument("set_potential: grid mismatch");
  for (double qv : potential.values())
    if (qv < 0.0) throw std::invalid_argument("set_potential: negative potential entry");
  q_.assign(potential.values().begin(), potential.values().end());
  double qsum = 0.0;
  for (double qv : q_) qsum += qv;
  mean_potential_ = qsum / static_cast<double>(q_.size());
}

void OscillatoryOperator::apply(std::span<const double> x,
                                std::span<double> y) const {
  const int n = n_;
  if (grid_.dim == 2) {
    for (int j = 0; j < n; ++j) {
      const double* fxr = &fx_[static_cast<std::size_t>(j) * (n + 1)];
      const double* fyS = &fy_[static_cast<std::size_t>(j) * n];
      const double* fyN = &fy_[static_cast<std::size_t>(j + 1) * n];
      const std::size_t row = static_cast<std::size_t>(j) * n;
      for (int i = 0; i < n; ++i) {
        const std::size_t c = row + i;
        const double uc = x[c];
        const double uW = i > 0 ? x[c - 1] : 0.0;
        const double uE = i < n - 1 ? x[c + 1] : 0.0;
        const double uS = j > 0 ? x[c - n] : 0.0;
        const double uN = j < n - 1 ? x[c + n] : 0.0;
        y[c] = inv_h2_ * (fxr[i] * (uc - uW) + fxr[i + 1] * (uc - uE) +
                          fyS[i] * (uc - uS) + fyN[i] * (uc - uN)) +
               q_[c] * uc;
      }
    }
    if (has_offdiag_) {
      // -D1c(a12 D2c u) - D2c(a12 D1c u); cross fluxes vanish on the walls
      // because u is identically zero along each boundary edge.
      const double inv2h = 1.0 / (2.0 * grid_.h());
      std::vector<double> w1(x.size()), w2(x.size());
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const std::size_t c = static_cast<std::size_t>(j) * n + i;
          const double uS = j > 0 ? x[c - n] : 0.0;
          const double uN = j < n - 1 ? x[c + n] : 0.0;
          const double uW = i > 0 ? x[c - 1] : 0.0;
          const double uE = i < n - 1 ? x[c + 1] : 0.0;
          w1[c] = a12_[c] * (uN - uS) * inv2h;
          w2[c] = a12_[c] * (uE - uW) * inv2h;
        }
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const std::size_t c = static_cast<std::size_t>(j) * n + i;
          const double w1W = i > 0 ? w1[c - 1] : 0.0;
          const double w1E = i < n - 1 ? w1[c + 1] : 0.0;
          const double w2S = j > 0 ? w2[c - n] : 0.0;
          const double w2N = j < n - 1 ? w2[c + n] : 0.0;
          y[c] -= ((w1E - w1W) + (w2N - w2S)) * inv2h;
        }
    }
    return;
  }

  // d = 3
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) {
      const double* fxr = &fx_[(static_cast<std::size_t>(k) * n + j) * (n + 1)];
      const double* fyS = &fy_[(static_cast<std::size_t>(k) * (n + 1) + j) * n];
      const double* fyN = &fy_[(static_cast<std::size_t>(k) * (n + 1) + j + 1) * n];
      const double* fzB = &fz_[(static_cast<std::size_t>(k) * n + j) * n];
      const double* fzT = &fz_[(static_cast<std::size_t>(k + 1) * n + j) * n];
      const std::size_t row = static_cast<std::size_t>(k) * nn + static_cast<std::size_t>(j) * n;
      for (int i = 0; i < n; ++i) {
        const std::size_t c = row + i;
        const double uc = x[c];
        const double uW = i > 0 ? x[c - 1] : 0.0;
        const double uE = i < n - 1 ? x[c + 1] : 0.0;
        const double uS = j > 0 ? x[c - n] : 0.0;
        const double uN = j < n - 1 ? x[c + n] : 0.0;
        const double uB = k > 0 ? x[c - nn] : 0.0;
        const double uT = k < n - 1 ? x[c + nn] : 0.0;
        y[c] = inv_h2_ * (fxr[i] * (uc - uW) + fxr[i + 1] * (uc - uE) +
                          fyS[i] * (uc - uS) + fyN[i] * (uc - uN) +
                          fzB[i] * (uc - uB) + fzT[i] * (uc - uT)) +
               q_[c] * uc;
      }
    }
  if (has_offdiag_) {
    const double inv2h = 1.0 / (2.0 * grid_.h());
    const auto stride = [&](int axis) {
      return axis == 0 ? std::size_t{1} : (axis == 1 ? static_cast<std::size_t>(n) : nn);
    };
    auto centered = [&](std::span<const double> v, std::size_t c, int i, int axis) {
      const std::size_t s = stride(axis);
      const int pos_in_axis = axis == 0 ? i : static_cast<int>((c / s) % n);
      const double lo = pos_in_axis > 0 ? v[c - s] : 0.0;
      const double hi = pos_in_axis < n - 1 ? v[c + s] : 0.0;
      return (hi - lo) * inv2h;
    };
    std::vector<double> w(x.size());
    const std::array<std::pair<int, int>, 3> pairs{{{0, 1}, {0, 2}, {1, 2}}};
    const std::array<const std::vector<double>*, 3> coeff{{&a12_, &a13_, &a23_}};
    for (int p = 0; p < 3; ++p) {
      const auto [ai, aj] = pairs[p];
      const auto& av = *coeff[p];
      for (int pass = 0; pass < 2; ++pass) {
        const int da = pass == 0 ? aj : ai;  // inner derivative axis
        const int db = pass == 0 ? ai : aj;  // outer divergence axis
        std::size_t c = 0;
        for (int k = 0; k < n; ++k)
          for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i, ++c) w[c] = av[c] * centered(x, c, i, da);
        c = 0;
        for (int k = 0; k < n; ++k)
          for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i, ++c) y[c] -= centered(w, c, i, db);
      }
    }
  }
}

HomogenizedOperator::HomogenizedOperator(const Eigen::MatrixXd& a_bar,
                                         double q_bar, const Grid& grid)
    : grid_(grid), a_bar_(a_bar), q_bar_(q_bar), n_(grid.n) {
  if (a_bar.rows() != grid.dim || a_bar.cols() != grid.dim)
    throw std::invalid_argument("HomogenizedOperator: a_bar dimension mismatch");
  if ((a_bar - a_bar.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("HomogenizedOperator: a_bar must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a_bar, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0)) throw std::invalid_argument("HomogenizedOperator: a_bar not SPD");
  if (hi / lo > 100.0)
    throw std::invalid_argument("HomogenizedOperator: anisotropy ratio beyond 100 rejected");
  if (q_bar < 0) throw std::invalid_argument("HomogenizedOperator: q_bar must be >= 0");
  const double h = grid.h();
  inv_h2_ = 1.0 / (h * h);
  for (int i = 0; i < grid.dim && separable_; ++i)
    for (int j = 0; j < grid.dim; ++j)
      if (i != j && a_bar(i, j) != 0.0) separable_ = false;
}

void HomogenizedOperator::apply(std::span<const double> x,
                                std::span<double> y) const {
  const int n = n_;
  if (grid_.dim == 2) {
    const double c1 = a_bar_(0, 0), c2 = a_bar_(1, 1), c12 = a_bar_(0, 1);
    for (int j = 0; j < n; ++j) {
      const std::size_t row = static_cast<std::size_t>(j) * n;
      for (int i = 0; i < n; ++i) {
        const std::size_t c = row + i;
        const double uc = x[c];
        const double uW = i > 0 ? x[c - 1] : 0.0;
        const double uE = i < n - 1 ? x[c + 1] : 0.0;
        const double uS = j > 0 ? x[c - n] : 0.0;
        const double uN = j < n - 1 ? x[c + n] : 0.0;
        double v = inv_h2_ * (c1 * (2.0 * uc - uW - uE) + c2 * (2.0 * uc - uS - uN)) +
                   q_bar_ * uc;
        if (c12 != 0.0) {
          const double uNE = (i < n - 1 && j < n - 1) ? x[c + n + 1] : 0.0;
          const double uNW = (i > 0 && j < n - 1) ? x[c + n - 1] : 0.0;
          const double uSE = (i < n - 1 && j > 0) ? x[c - n + 1] : 0.0;
          const double uSW = (i > 0 && j > 0) ? x[c - n - 1] : 0.0;
          v -= 2.0 * c12 * (uNE + uSW - uNW - uSE) * 0.25 * inv_h2_;
        }
        y[c] = v;
      }
    }
    return;
  }
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  const double c1 = a_bar_(0, 0), c2 = a_bar_(1, 1), c3 = a_bar_(2, 2);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) {
      const std::size_t row = static_cast<std::size_t>(k) * nn + static_cast<std::size_t>(j) * n;
      for (int i = 0; i < n; ++i) {
        const std::size_t c = row + i;
        const double uc = x[c];
        const double uW = i > 0 ? x[c - 1] : 0.0;
        const double uE = i < n - 1 ? x[c + 1] : 0.0;
        const double uS = j > 0 ? x[c - n] : 0.0;
        const double uN = j < n - 1 ? x[c + n] : 0.0;
        const double uB = k > 0 ? x[c - nn] : 0.0;
        const double uT = k < n - 1 ? x[c + nn] : 0.0;
        y[c] = inv_h2_ * (c1 * (2.0 * uc - uW - uE) + c2 * (2.0 * uc - uS - uN) +
                          c3 * (2.0 * uc - uB - uT)) +
               q_bar_ * uc;
      }
    }
  if (!separable_) {
    // Mixed terms via the cross stencil, pairwise.
    const std::array<std::pair<int, int>, 3> pairs{{{0, 1}, {0, 2}, {1, 2}}};
    const double quarter = 0.25 * inv_h2_;
    const std::array<std::size_t, 3> stride{1, static_cast<std::size_t>(n), nn};
    for (const auto& [a, b] : pairs) {
      const double cab = a_bar_(a, b);
      if (cab == 0.0) continue;
      const std::size_t sa = stride[a], sb = stride[b];
      std::size_t c = 0;
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
          for (int i = 0; i < n; ++i, ++c) {
            const std::array<int, 3> id{i, j, k};
            const bool lo_a = id[a] > 0, hi_a = id[a] < n - 1;
            const bool lo_b = id[b] > 0, hi_b = id[b] < n - 1;
            const double upp = (hi_a && hi_b) ? x[c + sa + sb] : 0.0;
            const double umm = (lo_a && lo_b) ? x[c - sa - sb] : 0.0;
            const double upm = (hi_a && lo_b) ? x[c + sa - sb] : 0.0;
            const double ump = (lo_a && hi_b) ? x[c - sa + sb] : 0.0;
            y[c] -= 2.0 * cab * (upp + umm - upm - ump) * quarter;
          }
    }
  }
}

std::unique_ptr<OscillatoryOperator> assemble_oscillatory(
    const TorusField& A, double eps, const GridFunction& potential,
    const Grid& grid) {
  return std::make_unique<OscillatoryOperator>(A, eps, potential, grid);
}

}  // namespace homlab
