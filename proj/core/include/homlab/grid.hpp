#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace homlab {

// Uniform grid of interior nodes on a d-dimensional box with homogeneous
// Dirichlet boundary. Nodes sit at x_i = (i+1)*h along each axis, i = 0..n-1,
// h = extent/(n+1); the walls x = 0 and x = extent carry the boundary data.
struct Grid {
  int dim = 2;            // d in {2,3}
  int n = 0;              // interior points per axis
  double extent = 1.0;    // axis length (unit box by default)

  Grid() = default;
  Grid(int dim_, int n_, double extent_ = 1.0);

  double h() const { return extent / (n + 1); }
  std::size_t num_nodes() const;
  double cell_volume() const;

  // Physical coordinate of interior node index along one axis.
  double coord(int i) const { return (i + 1) * h(); }

  bool operator==(const Grid&) const = default;
};

using Index2 = std::array<int, 2>;
using Index3 = std::array<int, 3>;

// Scalar field on the interior nodes of a Grid, implied zero on the boundary.
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(const Grid& g, double fill = 0.0)
      : grid_(g), values_(g.num_nodes(), fill) {}

  const Grid& grid() const { return grid_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  // Row-major linearization, first axis fastest.
  std::size_t flat(const Index2& ij) const {
    return static_cast<std::size_t>(ij[1]) * grid_.n + ij[0];
  }
  std::size_t flat3(const Index3& ijk) const {
    return (static_cast<std::size_t>(ijk[2]) * grid_.n + ijk[1]) * grid_.n +
           ijk[0];
  }

  // Fill from a callable of the physical coordinates.
  template <class F>
  static GridFunction sample(const Grid& g, F&& f) {
    GridFunction out(g);
    const int n = g.n;
    if (g.dim == 2) {
      std::size_t idx = 0;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          out.values_[idx++] = f(g.coord(i), g.coord(j), 0.0);
    } else {
      std::size_t idx = 0;
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
          for (int i = 0; i < n; ++i)
            out.values_[idx++] = f(g.coord(i), g.coord(j), g.coord(k));
    }
    return out;
  }

  // Grid L2 norm: sqrt(h^d * sum v^2), the quadrature used everywhere.
  double l2_norm() const;
  double max_norm() const;
  // h^d-weighted inner product.
  double inner(const GridFunction& other) const;

  GridFunction& operator+=(const GridFunction& o);
  GridFunction& operator-=(const GridFunction& o);
  GridFunction& operator*=(double a);

  void write_csv(std::ostream& os) const;
  void write_csv_file(const std::string& path) const;

  // Compact dump: uint32 n, uint32 d, then n^d little-endian float64 values.
  void write_binary(const std::string& path) const;
  static GridFunction read_binary(const std::string& path, double extent = 1.0);

 private:
  Grid grid_;
  std::vector<double> values_;
};

// Plain h^d-weighted vector helpers used by the solvers (which operate on
// raw value arrays rather than GridFunction to avoid copies).
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace homlab
