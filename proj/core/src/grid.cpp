#include "homlab/grid.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>

namespace homlab {

Grid::Grid(int dim_, int n_, double extent_) : dim(dim_), n(n_), extent(extent_) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("Grid: dim must be 2 or 3");
  if (n < 1) throw std::invalid_argument("Grid: n must be >= 1");
  if (!(extent > 0)) throw std::invalid_argument("Grid: extent must be positive");
}

std::size_t Grid::num_nodes() const {
  std::size_t m = 1;
  for (int a = 0; a < dim; ++a) m *= static_cast<std::size_t>(n);
  return m;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim; ++a) v *= h();
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double GridFunction::l2_norm() const {
  return std::sqrt(grid_.cell_volume() * dot(values_, values_));
}

double GridFunction::max_norm() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double GridFunction::inner(const GridFunction& other) const {
  if (other.size() != size()) throw std::invalid_argument("inner: size mismatch");
  return grid_.cell_volume() * dot(values_, other.values_);
}

GridFunction& GridFunction::operator+=(const GridFunction& o) {
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}
GridFunction& GridFunction::operator-=(const GridFunction& o) {
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}
GridFunction& GridFunction::operator*=(double a) {
  for (double& v : values_) v *= a;
  return *this;
}

void GridFunction::write_csv(std::ostream& os) const {
  const int n = grid_.n;
  char buf[128];
  if (grid_.dim == 2) {
    os << "x,y,value\n";
    std::size_t idx = 0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", grid_.coord(i),
                      grid_.coord(j), values_[idx++]);
        os << buf;
      }
  } else {
    os << "x,y,z,value\n";
    std::size_t idx = 0;
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n",
                        grid_.coord(i), grid_.coord(j), grid_.coord(k),
                        values_[idx++]);
          os << buf;
        }
  }
}

void GridFunction::write_csv_file(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_csv(os);
}

void GridFunction::write_binary(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  const std::uint32_t n = static_cast<std::uint32_t>(grid_.n);
  const std::uint32_t d = static_cast<std::uint32_t>(grid_.dim);
  os.write(reinterpret_cast<const char*>(&n), 4);
  os.write(reinterpret_cast<const char*>(&d), 4);
  os.write(reinterpret_cast<const char*>(values_.data()),
           static_cast<std::streamsize>(values_.size() * sizeof(double)));
}

GridFunction GridFunction::read_binary(const std::string& path, double extent) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::uint32_t n = 0, d = 0;
  is.read(reinterpret_cast<char*>(&n), 4);
  is.read(reinterpret_cast<char*>(&d), 4);
  if (!is || d < 2 || d > 3 || n == 0)
    throw std::runtime_error("bad GridFunction dump header: " + path);
  GridFunction out(Grid(static_cast<int>(d), static_cast<int>(n), extent));
  is.read(reinterpret_cast<char*>(out.values_.data()),
          static_cast<std::streamsize>(out.values_.size() * sizeof(double)));
  if (!is) throw std::runtime_error("truncated GridFunction dump: " + path);
  return out;
}

}  // namespace homlab
