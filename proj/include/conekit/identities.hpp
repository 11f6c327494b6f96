#pragma once

#include <functional>
#include <string>
#include <vector>

#include "conekit/algebra.hpp"

namespace conekit {

class RngStream;

using ProductFn = std::function<ConeElement(const ConeElement&, const ConeElement&)>;

// Symmetric Gaussian element: coefficients N(0, scale^2) on the orthonormal basis.
ConeElement random_element(const Algebra& algebra, RngStream& rng, double scale = 1.0);
// exp of a random element; eigenvalues spread over roughly exp(+-3*spread).
ConeElement random_cone_element(const Algebra& algebra, RngStream& rng, double spread = 0.6);

// Commutative but non-bilinear perturbation of the Jordan product, used to
// check that the identity suite notices a broken product.
ProductFn corrupted_product(double strength);

struct IdentityResult {
  std::string name;
  double max_error = 0.0;  // relative unless the name says otherwise
  double tolerance = 0.0;
  bool passed() const { return max_error <= tolerance; }
};

struct IdentityReport {
  std::string algebra;
  int draws = 0;
  std::vector<IdentityResult> results;
  bool passed() const;
  std::vector<std::string> failures() const;
};

// Axioms, quadratic-representation identities, determinant formulas,
// cone preservation and the exp/P compatibility on random draws. The axiom
// checks use `product`; everything else uses the library operations.
IdentityReport run_identity_suite(const Algebra& algebra, int draws, RngStream& rng,
                                  const ProductFn& product = nullptr);

// Change of variables (x, y) -> (P(y)x + y, y + x^{-1}) on E x E.
struct JacobianCheck {
  double fd_determinant = 0.0;  // |det| of the central-difference Jacobian
  double predicted = 0.0;       // det(y + x^{-1})^(2 dim/r)
  double operator_det = 0.0;    // |det P(y + x^{-1})| as a dim x dim matrix
  double rel_error = 0.0;
};

JacobianCheck jacobian_lemma_check(const ConeElement& x, const ConeElement& y, double step = 1e-6);

// Matrix exponential of a symmetric matrix via its eigendecomposition.
Eigen::MatrixXd symmetric_expm(const Eigen::MatrixXd& m);

}  // namespace conekit
