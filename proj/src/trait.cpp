#include "hjlab/trait.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "hjlab/errors.hpp"

namespace hjlab {

Trait Trait::zeros(std::size_t dim) {
  if (dim == 1) return Trait(0.0);
  if (dim == 2) return Trait(0.0, 0.0);
  throw ConfigError("trait dimension must be 1 or 2, got " + std::to_string(dim));
}

double Trait::norm_sq() const {
  double s = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) s += v_[i] * v_[i];
  return s;
}

double Trait::norm() const { return std::sqrt(norm_sq()); }

bool Trait::finite() const {
  for (std::size_t i = 0; i < dim_; ++i)
    if (!std::isfinite(v_[i])) return false;
  return true;
}

Trait& Trait::operator+=(const Trait& o) {
  for (std::size_t i = 0; i < dim_; ++i) v_[i] += o.v_[i];
  return *this;
}

Trait& Trait::operator-=(const Trait& o) {
  for (std::size_t i = 0; i < dim_; ++i) v_[i] -= o.v_[i];
  return *this;
}

Trait& Trait::operator*=(double a) {
  for (std::size_t i = 0; i < dim_; ++i) v_[i] *= a;
  return *this;
}

bool operator==(const Trait& a, const Trait& b) {
  if (a.dim_ != b.dim_) return false;
  for (std::size_t i = 0; i < a.dim_; ++i)
    if (a.v_[i] != b.v_[i]) return false;
  return true;
}

Trait operator+(Trait a, const Trait& b) { return a += b; }
Trait operator-(Trait a, const Trait& b) { return a -= b; }
Trait operator*(double s, Trait a) { return a *= s; }
Trait operator*(Trait a, double s) { return a *= s; }

double dot(const Trait& a, const Trait& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}

double distance(const Trait& a, const Trait& b) { return (a - b).norm(); }

std::string to_string(const Trait& x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const Trait& x) {
  os << '(' << std::setprecision(10);
  for (std::size_t i = 0; i < x.dim(); ++i) os << (i ? ", " : "") << x[i];
  return os << ')';
}

SymMatrix SymMatrix::scaled_identity(std::size_t dim, double s) {
  return SymMatrix{dim, s, 0.0, dim == 2 ? s : 0.0};
}

double SymMatrix::max_eigenvalue() const {
  if (dim == 1) return a00;
  const double mean = 0.5 * (a00 + a11);
  const double r = std::hypot(0.5 * (a00 - a11), a01);
  return mean + r;
}

double SymMatrix::min_eigenvalue() const {
  if (dim == 1) return a00;
  const double mean = 0.5 * (a00 + a11);
  const double r = std::hypot(0.5 * (a00 - a11), a01);
  return mean - r;
}

Trait SymMatrix::solve_negated(const Trait& g) const {
  if (!(max_eigenvalue() < 0.0))
    throw SolverError("Hessian is not negative definite (max eigenvalue " +
                          std::to_string(max_eigenvalue()) + ")",
                      max_eigenvalue());
  if (dim == 1) return Trait(g[0] / -a00);
  // (-M)^{-1} for the 2x2 case.
  const double p = -a00, q = -a01, r = -a11;
  const double det = p * r - q * q;
  if (!(det > 0.0)) throw SolverError("singular Hessian", det);
  return Trait((r * g[0] - q * g[1]) / det, (-q * g[0] + p * g[1]) / det);
}

}  // namespace hjlab
