#include "conekit/algebra.hpp"

#include <cmath>

#include "conekit/errors.hpp"

namespace conekit {

Algebra Algebra::make(AlgebraKind kind, int size) {
  switch (kind) {
    case AlgebraKind::Real:
      if (size != 1) throw ConfigError("real algebra has size 1, got " + std::to_string(size));
      return Algebra(kind, 1, 1, 1, 0);
    case AlgebraKind::SymReal:
      if (size < 1) throw ConfigError("sym_real needs size >= 1, got " + std::to_string(size));
      return Algebra(kind, size, size, size * (size + 1) / 2, 1);
    case AlgebraKind::Lorentz:
      if (size < 3) throw ConfigError("lorentz needs size >= 3, got " + std::to_string(size));
      return Algebra(kind, size, 2, size, size - 2);
  }
  throw ConfigError("unsupported algebra kind");
}

Algebra Algebra::from_name(const std::string& kind, int size) {
  if (kind == "real") return make(AlgebraKind::Real, size);
  if (kind == "sym_real") return make(AlgebraKind::SymReal, size);
  if (kind == "lorentz") return make(AlgebraKind::Lorentz, size);
  throw ConfigError("unknown algebra kind '" + kind + "'");
}

std::string Algebra::kind_name() const {
  switch (kind_) {
    case AlgebraKind::Real: return "real";
    case AlgebraKind::SymReal: return "sym_real";
    case AlgebraKind::Lorentz: return "lorentz";
  }
  return "?";
}

std::string Algebra::label() const { return kind_name() + "(" + std::to_string(size_) + ")"; }

ConeElement Algebra::identity() const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(dim_);
  if (kind_ == AlgebraKind::Lorentz) {
    c[0] = 1.0;
  } else {
    c.head(rank_).setOnes();
  }
  return ConeElement(*this, std::move(c));
}

std::vector<double> Algebra::weyl_coeffs() const {
  std::vector<double> w(rank_);
  for (int i = 1; i <= rank_; ++i) w[i - 1] = degree_ * (2.0 * i - rank_ - 1) / 4.0;
  return w;
}

void require_same_algebra(const Algebra& a, const Algebra& b, const char* what) {
  if (!(a == b)) {
    throw UsageError(std::string(what) + ": algebra mismatch (" + a.label() + " vs " + b.label() + ")");
  }
}

ConeElement::ConeElement(const Algebra& algebra, Eigen::VectorXd coords)
    : algebra_(algebra), coords_(std::move(coords)) {
  if (coords_.size() != algebra_.dim()) {
    throw UsageError("coordinate vector of length " + std::to_string(coords_.size()) + " for " +
                     algebra_.label() + " (dim " + std::to_string(algebra_.dim()) + ")");
  }
}

ConeElement ConeElement::zero(const Algebra& algebra) {
  return ConeElement(algebra, Eigen::VectorXd::Zero(algebra.dim()));
}

ConeElement ConeElement::operator+(const ConeElement& other) const {
  require_same_algebra(algebra_, other.algebra_, "addition");
  return ConeElement(algebra_, coords_ + other.coords_);
}

ConeElement ConeElement::operator-(const ConeElement& other) const {
  require_same_algebra(algebra_, other.algebra_, "subtraction");
  return ConeElement(algebra_, coords_ - other.coords_);
}

ConeElement ConeElement::operator-() const { return ConeElement(algebra_, -coords_); }

ConeElement ConeElement::operator*(double s) const { return ConeElement(algebra_, coords_ * s); }

ConeElement ConeElement::operator/(double s) const { return ConeElement(algebra_, coords_ / s); }

LinOperator::LinOperator(const Algebra& algebra, Eigen::MatrixXd matrix)
    : algebra_(algebra), matrix_(std::move(matrix)) {
  if (matrix_.rows() != algebra_.dim() || matrix_.cols() != algebra_.dim()) {
    throw UsageError("operator matrix shape does not match " + algebra_.label());
  }
}

LinOperator LinOperator::identity(const Algebra& algebra) {
  return LinOperator(algebra, Eigen::MatrixXd::Identity(algebra.dim(), algebra.dim()));
}

ConeElement LinOperator::operator()(const ConeElement& x) const {
  require_same_algebra(algebra_, x.algebra(), "operator application");
  return ConeElement(algebra_, matrix_ * x.coords());
}

LinOperator LinOperator::operator*(const LinOperator& other) const {
  require_same_algebra(algebra_, other.algebra_, "operator composition");
  return LinOperator(algebra_, matrix_ * other.matrix_);
}

// The ambient basis is orthogonal with a uniform scale, so the adjoint for the
// trace form is the plain transpose.
LinOperator LinOperator::adjoint() const { return LinOperator(algebra_, matrix_.transpose()); }

LinOperator LinOperator::inverse() const {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(matrix_);
  if (!lu.isInvertible()) throw DomainError("operator is singular");
  return LinOperator(algebra_, lu.inverse());
}

double LinOperator::determinant() const { return matrix_.determinant(); }

double LinOperator::op_norm() const {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(matrix_);
  return svd.singularValues()[0];
}

}  // namespace conekit
