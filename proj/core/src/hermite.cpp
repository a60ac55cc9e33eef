#include "homlab/hermite.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace homlab {

namespace {
constexpr double kSqrtPi = 1.7724538509055160272981674833411;
constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kSqrt2Pi = 2.5066282746310005024157652848110;
}  // namespace

PhiDescriptor PhiDescriptor::make(const std::string& kind, double amplitude,
                                  double skew) {
  PhiDescriptor p;
  p.kind_ = kind;
  p.amplitude_ = amplitude;
  if (kind == "identity") {
    p.bounded_ = false;
    p.fn_ = [](double s) { return s; };
  } else if (kind == "tanh") {
    p.bounded_ = true;
    p.lo_ = -amplitude;
    p.hi_ = amplitude;
    p.fn_ = [amplitude](double s) { return amplitude * std::tanh(s); };
  } else if (kind == "tanh-skew") {
    // Center the even part so E[phi(g)] = 0 for g ~ N(0,1).
    const auto rule = gauss_hermite(200);
    double c0 = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double s = kSqrt2 * rule.nodes[i];
      c0 += rule.weights[i] * std::tanh(s) * std::tanh(s);
    }
    c0 /= kSqrtPi;  // E[tanh^2(g)]
    p.bounded_ = true;
    p.lo_ = amplitude * (-1.0 - std::abs(skew) * c0);
    p.hi_ = amplitude * (1.0 + std::abs(skew) * (1.0 - c0));
    p.fn_ = [amplitude, skew, c0](double s) {
      const double t = std::tanh(s);
      return amplitude * (t + skew * (t * t - c0));
    };
  } else if (kind == "square") {
    p.bounded_ = false;
    p.fn_ = [](double s) { return s * s - 1.0; };
  } else {
    throw std::invalid_argument("unknown phi descriptor: " + kind);
  }
  return p;
}

// Golub-Welsch on the Jacobi matrix of the (physicists') Hermite recurrence:
// zero diagonal, off-diagonal sqrt(k/2); weights sqrt(pi) * v_{0}^2.
GaussHermiteRule gauss_hermite(int n) {
  if (n < 2) throw std::invalid_argument("gauss_hermite: need n >= 2");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(k / 2.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = kSqrtPi * v0 * v0;
  }
  return rule;
}

HermiteReport hermite_coefficients(const PhiDescriptor& phi, int nodes) {
  const auto rule = gauss_hermite(nodes);
  double m0 = 0.0, m1 = 0.0, mabs = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double s = kSqrt2 * rule.nodes[i];
    const double f = phi(s);
    m0 += rule.weights[i] * f;
    m1 += rule.weights[i] * s * f;
    mabs += rule.weights[i] * std::abs(f);
  }
  // int f(s) e^{-s^2/2} ds = sqrt(2) sum w_i f(sqrt(2) t_i).
  m0 *= kSqrt2;
  m1 *= kSqrt2;
  mabs *= kSqrt2;
  if (!std::isfinite(m0) || !std::isfinite(m1))
    throw std::runtime_error("hermite_coefficients: quadrature diverged (unbounded phi?)");
  HermiteReport rep;
  rep.mean_integral = m0;
  rep.v1_raw = m1;
  rep.v1 = m1 / kSqrt2Pi;
  const double scale = std::max(mabs, 1e-300);
  rep.rank_ok = std::abs(m0) < 1e-10 * scale && std::abs(m1) > 1e-10 * scale;
  return rep;
}

double bivariate_expectation(const PhiDescriptor& phi, double r, int nodes) {
  if (!(r >= -1.0 && r <= 1.0))
    throw std::invalid_argument("bivariate_expectation: correlation out of range");
  const auto rule = gauss_hermite(nodes);
  const double c = std::sqrt(std::max(0.0, 1.0 - r * r));
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double x = kSqrt2 * rule.nodes[i];
    const double fx = phi(x);
    double inner = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double y = r * x + c * kSqrt2 * rule.nodes[j];
      inner += rule.weights[j] * phi(y);
    }
    acc += rule.weights[i] * fx * inner;
  }
  return acc / (kSqrtPi * kSqrtPi);
}

}  // namespace homlab
