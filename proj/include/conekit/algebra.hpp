#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace conekit {

enum class AlgebraKind { Real, SymReal, Lorentz };

class ConeElement;

// One simple Euclidean Jordan algebra. Coordinates are taken in a fixed
// ambient basis:
//   Real     the scalar itself;
//   SymReal  diagonal entries first, then sqrt(2)*X(i,j) for i<j, row-major;
//   Lorentz  the raw vector (x0, x1, ..., x_{n-1}).
// The inner product is always <x,y> = tr(x.y); on Lorentz that is twice the
// coordinate dot product.
class Algebra {
 public:
  static Algebra make(AlgebraKind kind, int size);
  // kind is one of "real", "sym_real", "lorentz".
  static Algebra from_name(const std::string& kind, int size);

  AlgebraKind kind() const { return kind_; }
  int size() const { return size_; }
  int rank() const { return rank_; }
  int dim() const { return dim_; }
  int degree() const { return degree_; }
  // dim/r, the exponent of the invariant measure.
  double dim_over_rank() const { return static_cast<double>(dim_) / rank_; }

  std::string kind_name() const;
  std::string label() const;  // e.g. "sym_real(3)"

  ConeElement identity() const;
  std::vector<double> weyl_coeffs() const;

  // Weight of the coordinate dot product in the inner product (2 on Lorentz).
  double metric() const { return kind_ == AlgebraKind::Lorentz ? 2.0 : 1.0; }

  bool operator==(const Algebra& other) const = default;

 private:
  Algebra(AlgebraKind kind, int size, int rank, int dim, int degree)
      : kind_(kind), size_(size), rank_(rank), dim_(dim), degree_(degree) {}

  AlgebraKind kind_;
  int size_;
  int rank_;
  int dim_;
  int degree_;
};

inline Algebra make_algebra(AlgebraKind kind, int size) { return Algebra::make(kind, size); }

class ConeElement {
 public:
  ConeElement(const Algebra& algebra, Eigen::VectorXd coords);

  static ConeElement zero(const Algebra& algebra);

  const Algebra& algebra() const { return algebra_; }
  const Eigen::VectorXd& coords() const { return coords_; }
  double operator[](int i) const { return coords_[i]; }

  ConeElement operator+(const ConeElement& other) const;
  ConeElement operator-(const ConeElement& other) const;
  ConeElement operator-() const;
  ConeElement operator*(double s) const;
  ConeElement operator/(double s) const;

 private:
  Algebra algebra_;
  Eigen::VectorXd coords_;
};

inline ConeElement operator*(double s, const ConeElement& x) { return x * s; }

// Dense endomorphism of E in the ambient basis.
class LinOperator {
 public:
  LinOperator(const Algebra& algebra, Eigen::MatrixXd matrix);

  static LinOperator identity(const Algebra& algebra);

  const Algebra& algebra() const { return algebra_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

  ConeElement operator()(const ConeElement& x) const;
  LinOperator operator*(const LinOperator& other) const;  // composition
  LinOperator adjoint() const;
  LinOperator inverse() const;
  double determinant() const;
  double op_norm() const;  // spectral norm

 private:
  Algebra algebra_;
  Eigen::MatrixXd matrix_;
};

void require_same_algebra(const Algebra& a, const Algebra& b, const char* what);

}  // namespace conekit
