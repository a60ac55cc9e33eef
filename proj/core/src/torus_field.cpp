#include "homlab/torus_field.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace homlab {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::size_t pow_int(int base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
  return r;
}
}  // namespace

TorusField::TorusField(int dim, int m, std::vector<double> values)
    : dim_(dim), m_(m), values_(std::move(values)) {
  if (dim_ != 2 && dim_ != 3) throw std::invalid_argument("TorusField: dim must be 2 or 3");
  if (m_ < 2) throw std::invalid_argument("TorusField: need at least 2 samples per axis");
  const std::size_t expect = pow_int(m_, dim_) * dim_ * dim_;
  if (values_.size() != expect)
    throw std::invalid_argument("TorusField: sample array has wrong length");
  validate();
}

void TorusField::validate() {
  const std::size_t cells = pow_int(m_, dim_);
  const int d = dim_;
  double lo = 1e300, hi = -1e300;
  diagonal_ = true;
  Eigen::MatrixXd A(d, d);
  for (std::size_t c = 0; c < cells; ++c) {
    const double* s = &values_[c * d * d];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        A(i, j) = s[i * d + j];
        if (i != j && std::abs(s[i * d + j] - s[j * d + i]) > 1e-12)
          throw std::invalid_argument("TorusField: sample matrix not symmetric");
        if (i != j && s[i * d + j] != 0.0) diagonal_ = false;
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues().minCoeff());
    hi = std::max(hi, es.eigenvalues().maxCoeff());
  }
  if (!(lo > 0)) throw std::invalid_argument("TorusField: samples are not uniformly elliptic");
  if (hi / lo > 100.0)
    throw std::invalid_argument("TorusField: anisotropy ratio beyond 100 rejected");
  lambda_ = lo;
  Lambda_ = hi;
}

double TorusField::at(const std::array<int, 3>& k, int i, int j) const {
  auto wrap = [this](int v) {
    int r = v % m_;
    return r < 0 ? r + m_ : r;
  };
  std::size_t idx = wrap(k[dim_ - 1]);
  for (int a = dim_ - 2; a >= 0; --a) idx = idx * m_ + wrap(k[a]);
  return values_[(idx * dim_ + i) * dim_ + j];
}

double TorusField::eval(const std::array<double, 3>& y, int i, int j) const {
  std::array<int, 3> base{0, 0, 0};
  std::array<double, 3> frac{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) {
    const double t = y[a] * m_;
    const double fl = std::floor(t);
    base[a] = static_cast<int>(fl);
    frac[a] = t - fl;
  }
  double acc = 0.0;
  const int corners = 1 << dim_;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::array<int, 3> k = base;
    for (int a = 0; a < dim_; ++a) {
      if (c & (1 << a)) {
        k[a] += 1;
        w *= frac[a];
      } else {
        w *= 1.0 - frac[a];
      }
    }
    if (w != 0.0) acc += w * at(k, i, j);
  }
  return acc;
}

TorusField TorusField::pattern(const std::string& name, int dim, int m) {
  const std::size_t cells = pow_int(m, dim);
  std::vector<double> vals(cells * dim * dim, 0.0);
  auto diag_fill = [&](auto&& f) {
    std::array<int, 3> k{0, 0, 0};
    for (std::size_t c = 0; c < cells; ++c) {
      std::size_t rem = c;
      for (int a = 0; a < dim; ++a) {
        k[a] = static_cast<int>(rem % m);
        rem /= m;
      }
      const double a11 = f(k[0] / static_cast<double>(m), k[1] / static_cast<double>(m));
      for (int i = 0; i < dim; ++i) vals[(c * dim + i) * dim + i] = a11;
    }
  };
  if (name == "identity") {
    diag_fill([](double, double) { return 1.0; });
  } else if (name == "sin-layered") {
    diag_fill([](double y1, double) { return 2.0 + std::sin(kTwoPi * y1); });
  } else if (name == "checkerboard-smooth") {
    diag_fill([](double y1, double y2) {
      return 2.0 + std::sin(kTwoPi * y1) * std::sin(kTwoPi * y2);
    });
  } else {
    throw std::invalid_argument("unknown coefficient pattern: " + name);
  }
  return TorusField(dim, m, std::move(vals));
}

TorusField TorusField::load(const std::string& path) {
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    nlohmann::json j;
    is >> j;
    return TorusField(j.at("d").get<int>(), j.at("m").get<int>(),
                      j.at("values").get<std::vector<double>>());
  }
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  int m = 0, d = 0;
  is >> m >> d;
  if (!is) throw std::runtime_error("bad TorusField header in " + path);
  const std::size_t count = pow_int(m, d) * d * d;
  std::vector<double> vals(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!(is >> vals[i])) throw std::runtime_error("truncated TorusField file: " + path);
  }
  return TorusField(d, m, std::move(vals));
}

void TorusField::save_json(const std::string& path) const {
  nlohmann::json j;
  j["m"] = m_;
  j["d"] = dim_;
  j["values"] = values_;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << j.dump() << "\n";
}

}  // namespace homlab
