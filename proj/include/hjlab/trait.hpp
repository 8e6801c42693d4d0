#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>

namespace hjlab {

/// A point in trait space. Dimension is 1 or 2 and fixed per model.
class Trait {
 public:
  static constexpr std::size_t kMaxDim = 2;

  Trait() = default;
  explicit Trait(double x0) : dim_(1), v_{x0, 0.0} {}
  Trait(double x0, double x1) : dim_(2), v_{x0, x1} {}

  static Trait zeros(std::size_t dim);

  std::size_t dim() const { return dim_; }
  double operator[](std::size_t i) const { return v_[i]; }
  double& operator[](std::size_t i) { return v_[i]; }

  const double* begin() const { return v_.data(); }
  const double* end() const { return v_.data() + dim_; }

  double norm_sq() const;
  double norm() const;
  bool finite() const;

  Trait& operator+=(const Trait& o);
  Trait& operator-=(const Trait& o);
  Trait& operator*=(double a);

  friend bool operator==(const Trait& a, const Trait& b);

 private:
  std::size_t dim_ = 0;
  std::array<double, kMaxDim> v_{};
};

Trait operator+(Trait a, const Trait& b);
Trait operator-(Trait a, const Trait& b);
Trait operator*(double s, Trait a);
Trait operator*(Trait a, double s);
double dot(const Trait& a, const Trait& b);
double distance(const Trait& a, const Trait& b);

std::string to_string(const Trait& x);
std::ostream& operator<<(std::ostream& os, const Trait& x);

/// Symmetric matrix of size dim x dim (dim <= 2). Used for Hessians.
struct SymMatrix {
  std::size_t dim = 1;
  double a00 = 0.0;
  double a01 = 0.0;
  double a11 = 0.0;

  static SymMatrix scaled_identity(std::size_t dim, double s);

  double max_eigenvalue() const;
  double min_eigenvalue() const;
  bool negative_definite() const { return max_eigenvalue() < 0.0; }

  /// Solves (-M) v = g. Throws SolverError unless M is negative definite.
  Trait solve_negated(const Trait& g) const;
};

}  // namespace hjlab
