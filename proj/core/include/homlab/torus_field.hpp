#pragma once

#include <array>
#include <string>
#include <vector>

namespace homlab {

// Periodic symmetric coefficient matrix A(y) sampled on an m^d unit-cell
// grid (y_k = k/m, wraparound indexing). Evaluation anywhere on the torus is
// by multilinear interpolation of the samples.
class TorusField {
 public:
  TorusField() = default;
  // values: m^d samples, row-major (first axis fastest), each sample a d*d
  // matrix stored row-major. Symmetry and ellipticity are validated.
  TorusField(int dim, int m, std::vector<double> values);

  int dim() const { return dim_; }
  int m() const { return m_; }
  double lambda() const { return lambda_; }   // ellipticity lower bound
  double Lambda() const { return Lambda_; }   // ellipticity upper bound

  // Sample at lattice index (periodic wraparound), entry (i,j).
  double at(const std::array<int, 3>& k, int i, int j) const;

  // Value at a torus point y (coordinates in units of the cell, any real).
  // Multilinear interpolation between the 2^d surrounding samples.
  double eval(const std::array<double, 3>& y, int i, int j) const;

  bool is_diagonal() const { return diagonal_; }

  // Built-in named patterns on an m^d cell grid:
  //   "identity"            A = I
  //   "sin-layered"         A = diag(2 + sin 2*pi*y1, ...) (layers normal to y1)
  //   "checkerboard-smooth" A = (2 + sin 2*pi*y1 * sin 2*pi*y2) * I
  static TorusField pattern(const std::string& name, int dim, int m);

  // Plain-text file: header line "m d", then m^d lines of d*d row-major
  // entries. JSON file (by .json extension): {"m":..,"d":..,"values":[...]}.
  static TorusField load(const std::string& path);
  void save_json(const std::string& path) const;

 private:
  void validate();

  int dim_ = 2;
  int m_ = 0;
  std::vector<double> values_;  // m^d * d * d
  double lambda_ = 0.0;
  double Lambda_ = 0.0;
  bool diagonal_ = true;
};

}  // namespace homlab
