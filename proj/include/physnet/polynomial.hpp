#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace physnet {

// Cost curve stored ascending by degree: coefficients[k] multiplies x^k.
// Nonnegative coefficients keep every cost convex and nondecreasing on
// x >= 0, which the validator enforces for whole instances.
class Polynomial {
 public:
  static constexpr std::size_t kMaxDegree = 4;

  Polynomial() = default;
  explicit Polynomial(std::vector<double> coefficients)
      : coeffs_(std::move(coefficients)) {}

  const std::vector<double>& coefficients() const { return coeffs_; }

  std::size_t degree() const { return coeffs_.empty() ? 0 : coeffs_.size() - 1; }

  // Horner evaluation. x must be finite and nonnegative.
  double value(double x) const {
    if (!std::isfinite(x) || x < 0.0)
      throw std::domain_error("Polynomial::value: argument must be finite and >= 0");
    double r = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) r = r * x + *it;
    return r;
  }

  Polynomial derivative() const {
    std::vector<double> d;
    for (std::size_t k = 1; k < coeffs_.size(); ++k)
      d.push_back(static_cast<double>(k) * coeffs_[k]);
    return Polynomial(std::move(d));
  }

  // True when the coefficient list satisfies the instance invariants
  // (finite, nonnegative, degree cap). Violations are reported through
  // validate_instance rather than at construction time.
  bool well_formed() const {
    if (coeffs_.size() > kMaxDegree + 1) return false;
    for (double c : coeffs_)
      if (!std::isfinite(c) || c < 0.0) return false;
    return true;
  }

  bool operator==(const Polynomial& other) const { return coeffs_ == other.coeffs_; }

 private:
  std::vector<double> coeffs_;
};

}  // namespace physnet
