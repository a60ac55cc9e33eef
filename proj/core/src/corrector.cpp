#include "homlab/corrector.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "homlab/fast_poisson.hpp"
#include "homlab/grid.hpp"

namespace homlab {

namespace {

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

// Periodic divergence-form operator on the cell sample grid. Same sampling
// conventions as OscillatoryOperator, with wraparound instead of walls.
class CellOperator {
 public:
  CellOperator(const TorusField& A, int m) : dim_(A.dim()), m_(m) {
    const double hc = 1.0 / m;
    inv_h2_ = 1.0 / (hc * hc);
    inv_2h_ = 0.5 * m;
    size_ = 1;
    for (int a = 0; a < dim_; ++a) size_ *= static_cast<std::size_t>(m);

    const double scale = static_cast<double>(m) / A.m();
    auto sample = [&](int i, int j, int r, int c) {
      // Resample A onto the m-grid if resolutions differ.
      if (m == A.m()) return A.at({i, j, 0}, r, c);
      return A.eval({i / static_cast<double>(m), j / static_cast<double>(m), 0.0}, r, c);
    };
    auto sample3 = [&](int i, int j, int k, int r, int c) {
      if (m == A.m()) return A.at({i, j, k}, r, c);
      return A.eval({i / static_cast<double>(m), j / static_cast<double>(m),
                     k / static_cast<double>(m)},
                    r, c);
    };
    (void)scale;

    if (dim_ == 2) {
      face_[0].resize(size_);
      face_[1].resize(size_);
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) {
          const std::size_t c = static_cast<std::size_t>(j) * m + i;
          face_[0][c] = harmonic(sample(i - 1, j, 0, 0), sample(i, j, 0, 0));
          face_[1][c] = harmonic(sample(i, j - 1, 1, 1), sample(i, j, 1, 1));
        }
      if (!A.is_diagonal()) {
        off_[0].resize(size_);
        for (int j = 0; j < m; ++j)
          for (int i = 0; i < m; ++i)
            off_[0][static_cast<std::size_t>(j) * m + i] = sample(i, j, 0, 1);
      }
    } else {
      for (int a = 0; a < 3; ++a) face_[a].resize(size_);
      for (int k = 0; k < m; ++k)
        for (int j = 0; j < m; ++j)
          for (int i = 0; i < m; ++i) {
            const std::size_t c = (static_cast<std::size_t>(k) * m + j) * m + i;
            face_[0][c] = harmonic(sample3(i - 1, j, k, 0, 0), sample3(i, j, k, 0, 0));
            face_[1][c] = harmonic(sample3(i, j - 1, k, 1, 1), sample3(i, j, k, 1, 1));
            face_[2][c] = harmonic(sample3(i, j, k - 1, 2, 2), sample3(i, j, k, 2, 2));
          }
      if (!A.is_diagonal()) {
        for (int a = 0; a < 3; ++a) off_[a].resize(size_);
        for (int k = 0; k < m; ++k)
          for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i) {
              const std::size_t c = (static_cast<std::size_t>(k) * m + j) * m + i;
              off_[0][c] = sample3(i, j, k, 0, 1);
              off_[1][c] = sample3(i, j, k, 0, 2);
              off_[2][c] = sample3(i, j, k, 1, 2);
            }
      }
    }
    for (int a = 0; a < dim_; ++a) {
      double s = 0.0;
      for (double v : face_[a]) s += v;
      mean_face_[a] = s / static_cast<double>(size_);
    }
  }

  int dim() const { return dim_; }
  int m() const { return m_; }
  std::size_t size() const { return size_; }
  std::array<double, 3> mean_face() const { return mean_face_; }
  const std::vector<double>& face(int axis) const { return face_[axis]; }
  bool has_offdiag() const { return !off_[0].empty(); }
  const std::vector<double>& off(int p) const { return off_[p]; }

  std::size_t wrap_index(std::array<int, 3> k) const {
    auto w = [this](int v) {
      int r = v % m_;
      return r < 0 ? r + m_ : r;
    };
    std::size_t idx = w(k[dim_ - 1]);
    for (int a = dim_ - 2; a >= 0; --a) idx = idx * m_ + w(k[a]);
    return idx;
  }

  void apply(std::span<const double> x, std::span<double> y) const {
    const int m = m_;
    if (dim_ == 2) {
      for (int j = 0; j < m; ++j) {
        const int jm = j == 0 ? m - 1 : j - 1;
        const int jp = j == m - 1 ? 0 : j + 1;
        for (int i = 0; i < m; ++i) {
          const int im = i == 0 ? m - 1 : i - 1;
          const int ip = i == m - 1 ? 0 : i + 1;
          const std::size_t c = static_cast<std::size_t>(j) * m + i;
          const double uc = x[c];
          const double uW = x[static_cast<std::size_t>(j) * m + im];
          const double uE = x[static_cast<std::size_t>(j) * m + ip];
          const double uS = x[static_cast<std::size_t>(jm) * m + i];
          const double uN = x[static_cast<std::size_t>(jp) * m + i];
          y[c] = inv_h2_ *
                 (face_[0][c] * (uc - uW) +
                  face_[0][static_cast<std::size_t>(j) * m + ip] * (uc - uE) +
                  face_[1][c] * (uc - uS) +
                  face_[1][static_cast<std::size_t>(jp) * m + i] * (uc - uN));
        }
      }
      if (has_offdiag()) apply_offdiag_2d(x, y);
      return;
    }
    const std::size_t mm = static_cast<std::size_t>(m) * m;
    for (int k = 0; k < m; ++k) {
      const int km = k == 0 ? m - 1 : k - 1;
      const int kp = k == m - 1 ? 0 : k + 1;
      for (int j = 0; j < m; ++j) {
        const int jm = j == 0 ? m - 1 : j - 1;
        const int jp = j == m - 1 ? 0 : j + 1;
        for (int i = 0; i < m; ++i) {
          const int im = i == 0 ? m - 1 : i - 1;
          const int ip = i == m - 1 ? 0 : i + 1;
          const std::size_t c = static_cast<std::size_t>(k) * mm + static_cast<std::size_t>(j) * m + i;
          const double uc = x[c];
          const double uW = x[c - i + im];
          const double uE = x[c - i + ip];
          const double uS = x[static_cast<std::size_t>(k) * mm + static_cast<std::size_t>(jm) * m + i];
          const double uN = x[static_cast<std::size_t>(k) * mm + static_cast<std::size_t>(jp) * m + i];
          const double uB = x[static_cast<std::size_t>(km) * mm + static_cast<std::size_t>(j) * m + i];
          const double uT = x[static_cast<std::size_t>(kp) * mm + static_cast<std::size_t>(j) * m + i];
          y[c] = inv_h2_ *
                 (face_[0][c] * (uc - uW) + face_[0][c - i + ip] * (uc - uE) +
                  face_[1][c] * (uc - uS) +
                  face_[1][static_cast<std::size_t>(k) * mm + static_cast<std::size_t>(jp) * m + i] * (uc - uN) +
                  face_[2][c] * (uc - uB) +
                  face_[2][static_cast<std::size_t>(kp) * mm + static_cast<std::size_t>(j) * m + i] * (uc - uT));
        }
      }
    }
    if (has_offdiag()) apply_offdiag_3d(x, y);
  }

  // Centered difference of a node array along an axis (periodic).
  double centered(std::span<const double> v, std::array<int, 3> k, int axis) const {
    std::array<int, 3> kp = k, km = k;
    kp[axis] += 1;
    km[axis] -= 1;
    return (v[wrap_index(kp)] - v[wrap_index(km)]) * inv_2h_;
  }

  double inv_2h() const { return inv_2h_; }

 private:
  void apply_offdiag_2d(std::span<const double> x, std::span<double> y) const {
    const int m = m_;
    std::vector<double> w1(size_), w2(size_);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        const std::size_t c = static_cast<std::size_t>(j) * m + i;
        w1[c] = off_[0][c] * centered(x, {i, j, 0}, 1);
        w2[c] = off_[0][c] * centered(x, {i, j, 0}, 0);
      }
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        const std::size_t c = static_cast<std::size_t>(j) * m + i;
        y[c] -= centered(w1, {i, j, 0}, 0) + centered(w2, {i, j, 0}, 1);
      }
  }

  void apply_offdiag_3d(std::span<const double> x, std::span<double> y) const {
    const int m = m_;
    const std::array<std::pair<int, int>, 3> pairs{{{0, 1}, {0, 2}, {1, 2}}};
    std::vector<double> w(size_);
    for (int p = 0; p < 3; ++p) {
      const auto [ai, aj] = pairs[p];
      for (int pass = 0; pass < 2; ++pass) {
        const int da = pass == 0 ? aj : ai;
        const int db = pass == 0 ? ai : aj;
        for (int k = 0; k < m; ++k)
          for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i) {
              const std::size_t c = (static_cast<std::size_t>(k) * m + j) * m + i;
              w[c] = off_[p][c] * centered(x, {i, j, k}, da);
            }
        for (int k = 0; k < m; ++k)
          for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i) {
              const std::size_t c = (static_cast<std::size_t>(k) * m + j) * m + i;
              y[c] -= centered(w, {i, j, k}, db);
            }
      }
    }
  }

  int dim_;
  int m_;
  std::size_t size_ = 0;
  double inv_h2_ = 0.0;
  double inv_2h_ = 0.0;
  std::array<std::vector<double>, 3> face_;
  std::array<std::vector<double>, 3> off_;  // a12, a13, a23
  std::array<double, 3> mean_face_{0, 0, 0};
};

void subtract_mean(std::span<double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  const double mean = s / static_cast<double>(v.size());
  for (double& x : v) x -= mean;
}

}  // namespace

double CellField::mean() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double CellField::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

CellField solve_corrector(const TorusField& A, int k, int cell_n, double tol) {
  if (k < 0 || k >= A.dim())
    throw std::invalid_argument("solve_corrector: direction out of range");
  const int m = cell_n > 0 ? cell_n : A.m();
  CellOperator op(A, m);
  const std::size_t size = op.size();

  // Right-hand side d_i(a_ik): diagonal contribution via face differences,
  // off-diagonal via centered differences. Telescoping makes it mean-zero.
  std::vector<double> rhs(size, 0.0);
  const double inv_h = static_cast<double>(m);
  const auto& fk = op.face(k);
  auto add_face_div = [&](std::array<int, 3> id, std::size_t c) {
    std::array<int, 3> up = id;
    up[k] += 1;
    rhs[c] += (fk[op.wrap_index(up)] - fk[c]) * inv_h;
  };
  if (A.dim() == 2) {
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i)
        add_face_div({i, j, 0}, static_cast<std::size_t>(j) * m + i);
    if (op.has_offdiag()) {
      const int other = 1 - k;
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) {
          const std::size_t c = static_cast<std::size_t>(j) * m + i;
          rhs[c] += op.centered(op.off(0), {i, j, 0}, other);
        }
    }
  } else {
    for (int kk = 0; kk < m; ++kk)
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i)
          add_face_div({i, j, kk}, (static_cast<std::size_t>(kk) * m + j) * m + i);
    if (op.has_offdiag()) {
      // a_ik for i != k lives in the pair list {01, 02, 12}.
      for (int i = 0; i < 3; ++i) {
        if (i == k) continue;
        const int p = (i + k == 1) ? 0 : (i + k == 2 ? 1 : 2);
        for (int kk = 0; kk < m; ++kk)
          for (int j = 0; j < m; ++j)
            for (int ii = 0; ii < m; ++ii) {
              const std::size_t c = (static_cast<std::size_t>(kk) * m + j) * m + ii;
              rhs[c] += op.centered(op.off(p), {ii, j, kk}, i);
            }
      }
    }
  }
  subtract_mean(rhs);

  PeriodicFftPreconditioner precond(A.dim(), m, op.mean_face(), 1.0 / m);

  // PCG on the mean-zero subspace.
  std::vector<double> x(size, 0.0), r = rhs, z(size), p(size), Ap(size);
  const double bnorm = norm2(rhs);
  CellField out{A.dim(), m, std::move(x)};
  if (bnorm == 0.0) return out;

  precond.apply(r, z);
  subtract_mean(z);
  p = z;
  double rz = dot(r, z);
  const int max_it = 50 * m;
  for (int it = 1; it <= max_it; ++it) {
    op.apply(p, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0))
      throw std::runtime_error("solve_corrector: singular system beyond the constant mode");
    const double alpha = rz / pAp;
    for (std::size_t i = 0; i < size; ++i) {
      out.values[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    subtract_mean(out.values);
    subtract_mean(r);
    if (norm2(r) / bnorm <= tol) return out;
    precond.apply(r, z);
    subtract_mean(z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < size; ++i) p[i] = z[i] + beta * p[i];
  }
  throw std::runtime_error("solve_corrector: no convergence within iteration cap");
}

Eigen::MatrixXd effective_matrix(const TorusField& A,
                                 const std::vector<CellField>& correctors) {
  const int d = A.dim();
  if (static_cast<int>(correctors.size()) != d)
    throw std::invalid_argument("effective_matrix: need d correctors");
  const int m = correctors[0].m;
  for (const auto& c : correctors)
    if (c.m != m || c.dim != d)
      throw std::invalid_argument("effective_matrix: corrector resolution mismatch");
  CellOperator op(A, m);
  const std::size_t size = op.size();
  const double inv_h = static_cast<double>(m);

  Eigen::MatrixXd abar = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    const auto& chi = correctors[k].values;
    // Diagonal part: mean over i-faces of f_i (delta_ik + D_i chi^k).
    for (int i = 0; i < d; ++i) {
      const auto& f = op.face(i);
      double acc = 0.0;
      if (d == 2) {
        for (int j = 0; j < m; ++j)
          for (int ii = 0; ii < m; ++ii) {
            const std::size_t c = static_cast<std::size_t>(j) * m + ii;
            std::array<int, 3> below{ii, j, 0};
            below[i] -= 1;
            const double grad = (chi[c] - chi[op.wrap_index(below)]) * inv_h;
            acc += f[c] * ((i == k ? 1.0 : 0.0) + grad);
          }
      } else {
        for (int kk = 0; kk < m; ++kk)
          for (int j = 0; j < m; ++j)
            for (int ii = 0; ii < m; ++ii) {
              const std::size_t c = (static_cast<std::size_t>(kk) * m + j) * m + ii;
              std::array<int, 3> below{ii, j, kk};
              below[i] -= 1;
              const double grad = (chi[c] - chi[op.wrap_index(below)]) * inv_h;
              acc += f[c] * ((i == k ? 1.0 : 0.0) + grad);
            }
      }
      abar(i, k) += acc / static_cast<double>(size);
    }
    // Off-diagonal part: node-centered a_ij (delta_jk + S_j chi^k).
    if (op.has_offdiag()) {
      auto pair_index = [](int i, int j) { return (i + j == 1) ? 0 : (i + j == 2 ? 1 : 2); };
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          if (i == j) continue;
          const auto& aij = op.off(pair_index(i, j));
          double acc = 0.0;
          if (d == 2) {
            for (int jj = 0; jj < m; ++jj)
              for (int ii = 0; ii < m; ++ii) {
                const std::size_t c = static_cast<std::size_t>(jj) * m + ii;
                acc += aij[c] * ((j == k ? 1.0 : 0.0) + op.centered(chi, {ii, jj, 0}, j));
              }
          } else {
            for (int kk = 0; kk < m; ++kk)
              for (int jj = 0; jj < m; ++jj)
                for (int ii = 0; ii < m; ++ii) {
                  const std::size_t c = (static_cast<std::size_t>(kk) * m + jj) * m + ii;
                  acc += aij[c] *
                         ((j == k ? 1.0 : 0.0) + op.centered(chi, {ii, jj, kk}, j));
                }
          }
          abar(i, k) += acc / static_cast<double>(size);
        }
    }
  }
  return 0.5 * (abar + abar.transpose());
}

EffectiveModel effective_model(const TorusField& A, double q_bar, int cell_n,
                               double tol) {
  EffectiveModel out;
  out.q_bar = q_bar;
  for (int k = 0; k < A.dim(); ++k)
    out.correctors.push_back(solve_corrector(A, k, cell_n, tol));
  out.a_bar = effective_matrix(A, out.correctors);
  return out;
}

namespace {
Eigen::MatrixXd mean_matrix(const TorusField& A, bool invert) {
  const int d = A.dim();
  const int m = A.m();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd S(d, d);
  std::size_t count = 1;
  for (int a = 0; a < d; ++a) count *= static_cast<std::size_t>(m);
  std::array<int, 3> k{0, 0, 0};
  for (std::size_t c = 0; c < count; ++c) {
    std::size_t rem = c;
    for (int a = 0; a < d; ++a) {
      k[a] = static_cast<int>(rem % m);
      rem /= m;
    }
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) S(i, j) = A.at(k, i, j);
    acc += invert ? S.inverse() : S;
  }
  acc /= static_cast<double>(count);
  return invert ? acc.inverse().eval() : acc;
}
}  // namespace

Eigen::MatrixXd harmonic_mean_matrix(const TorusField& A) { return mean_matrix(A, true); }
Eigen::MatrixXd arithmetic_mean_matrix(const TorusField& A) { return mean_matrix(A, false); }

}  // namespace homlab
