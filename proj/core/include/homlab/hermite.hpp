#pragma once

#include <functional>
#include <string>
#include <vector>

namespace homlab {

// Bounded (or sentinel) transforms applied pointwise to a unit Gaussian
// field. Named descriptors keep configs declarative.
class PhiDescriptor {
 public:
  // Kinds:
  //   "identity"   phi(s) = s                        (unbounded; diagnostics)
  //   "tanh"       phi(s) = amplitude * tanh(s)
  //   "tanh-skew"  phi(s) = amplitude*(tanh(s) + skew*(tanh(s)^2 - c0)),
  //                c0 chosen so the Gaussian mean vanishes
  //   "square"     phi(s) = s^2 - 1                  (Hermite rank two sentinel)
  static PhiDescriptor make(const std::string& kind, double amplitude = 1.0,
                            double skew = 0.0);

  double operator()(double s) const { return fn_(s); }
  const std::string& kind() const { return kind_; }
  double amplitude() const { return amplitude_; }
  bool bounded() const { return bounded_; }
  double lower_bound() const { return lo_; }
  double upper_bound() const { return hi_; }

 private:
  std::string kind_;
  double amplitude_ = 1.0;
  bool bounded_ = false;
  double lo_ = 0.0, hi_ = 0.0;
  std::function<double(double)> fn_;
};

// Gauss-Hermite rule for the physicists' weight exp(-t^2); `gauss_hermite`
// returns nodes and weights via Golub-Welsch.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussHermiteRule gauss_hermite(int n);

struct HermiteReport {
  double mean_integral = 0.0;  // int phi(s) e^{-s^2/2} ds
  double v1_raw = 0.0;         // int s phi(s) e^{-s^2/2} ds
  double v1 = 0.0;             // E[g phi(g)] = v1_raw / sqrt(2 pi)
  bool rank_ok = false;        // mean vanishes and v1 != 0 (Hermite rank one)
};

// 200-node quadrature by default; throws if the integrals are not finite.
HermiteReport hermite_coefficients(const PhiDescriptor& phi, int nodes = 200);

// E[phi(X) phi(Y)] for (X, Y) standard bivariate normal with correlation r.
// Tensor Gauss-Hermite; exact autocorrelation transform of the model.
double bivariate_expectation(const PhiDescriptor& phi, double r, int nodes = 80);

}  // namespace homlab
