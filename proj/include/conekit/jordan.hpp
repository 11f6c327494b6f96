#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "conekit/algebra.hpp"

namespace conekit {

class RngStream;

ConeElement jordan_product(const ConeElement& x, const ConeElement& y);
double inner(const ConeElement& x, const ConeElement& y);
double norm(const ConeElement& x);

// y -> x.y
LinOperator lmul(const ConeElement& x);
// y -> P(x)y = 2x.(x.y) - (x.x).y
LinOperator quad_rep(const ConeElement& x);
// P(x)y without forming the operator.
ConeElement quad_apply(const ConeElement& x, const ConeElement& y);

struct Spectrum {
  Eigen::VectorXd eigenvalues;           // descending
  std::vector<ConeElement> idempotents;  // primitive, one per eigenvalue
};

Spectrum spectral_decompose(const ConeElement& x);
Eigen::VectorXd eigenvalues(const ConeElement& x);  // descending
double min_eigenvalue(const ConeElement& x);
double max_eigenvalue(const ConeElement& x);
// Interior of the cone: min eigenvalue > 1e-12 * max(1, |max eigenvalue|).
bool in_cone(const ConeElement& x);

double det(const ConeElement& x);
double log_det(const ConeElement& x);  // requires positive spectrum
double trace(const ConeElement& x);
ConeElement inverse(const ConeElement& x);
ConeElement exp(const ConeElement& x);
ConeElement log(const ConeElement& x);
ConeElement sqrt(const ConeElement& x);
ConeElement power(const ConeElement& x, double t);
// Applies f to every eigenvalue and reassembles.
ConeElement spectral_map(const ConeElement& x, const std::function<double(double)>& f);

enum class SpectralFn { Det, Trace, Inverse, Exp, Log, Sqrt, Power };
struct CalculusResult {
  bool is_scalar;
  double scalar;
  Eigen::VectorXd coords;
};
CalculusResult functional_calculus(const ConeElement& x, SpectralFn fn, double t = 1.0);

// Orthonormal basis f_i of E for the trace form. Each f_i is a multiple of a
// coordinate unit vector; scales[i] is that multiple.
Eigen::VectorXd orthonormal_scales(const Algebra& algebra);
std::vector<ConeElement> orthonormal_basis(const Algebra& algebra);

// Symmetric matrix view of a SymReal element (Real counts as r=1).
Eigen::MatrixXd to_symmetric(const ConeElement& x);
ConeElement from_symmetric(const Algebra& algebra, const Eigen::MatrixXd& m);

// Element of K = {g : g(e) = e}. u is orthogonal of size r (SymReal),
// n-1 (Lorentz) or 1 (Real, acts trivially).
struct Rotation {
  Eigen::MatrixXd u;
};

int rotation_size(const Algebra& algebra);
ConeElement apply_rotation(const ConeElement& x, const Rotation& rot);
LinOperator rotation_operator(const Algebra& algebra, const Rotation& rot);
Rotation random_rotation(const Algebra& algebra, RngStream& rng);

}  // namespace conekit
