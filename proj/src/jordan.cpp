#include "conekit/jordan.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "conekit/errors.hpp"
#include "conekit/rng.hpp"

namespace conekit {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kTieTolerance = 1e-10;

Eigen::MatrixXd sym_matrix(const Eigen::VectorXd& c, int r) {
  Eigen::MatrixXd m(r, r);
  for (int i = 0; i < r; ++i) m(i, i) = c[i];
  int k = r;
  for (int i = 0; i < r; ++i) {
    for (int j = i + 1; j < r; ++j, ++k) {
      m(i, j) = m(j, i) = c[k] / kSqrt2;
    }
  }
  return m;
}

Eigen::VectorXd sym_coords(const Eigen::MatrixXd& m) {
  const int r = static_cast<int>(m.rows());
  Eigen::VectorXd c(r * (r + 1) / 2);
  for (int i = 0; i < r; ++i) c[i] = m(i, i);
  int k = r;
  for (int i = 0; i < r; ++i) {
    for (int j = i + 1; j < r; ++j, ++k) {
      c[k] = kSqrt2 * 0.5 * (m(i, j) + m(j, i));
    }
  }
  return c;
}

// Averages runs of descending eigenvalues that agree within the tie tolerance.
void merge_ties(Eigen::VectorXd& vals) {
  const int n = static_cast<int>(vals.size());
  int start = 0;
  while (start < n) {
    int end = start + 1;
    while (end < n &&
           vals[end - 1] - vals[end] <= kTieTolerance * std::max(1.0, std::abs(vals[end - 1]))) {
      ++end;
    }
    if (end - start > 1) {
      double mean = vals.segment(start, end - start).mean();
      vals.segment(start, end - start).setConstant(mean);
    }
    start = end;
  }
}

struct SymEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns match values
};

SymEigen sym_eigen(const Eigen::MatrixXd& m, bool with_vectors) {
  const int r = static_cast<int>(m.rows());
  SymEigen out;
  if (r == 1) {
    out.values = Eigen::VectorXd::Constant(1, m(0, 0));
    if (with_vectors) out.vectors = Eigen::MatrixXd::Ones(1, 1);
    return out;
  }
  if (r == 2) {
    const double half = 0.5 * (m(0, 0) - m(1, 1));
    const double b = 0.5 * (m(0, 1) + m(1, 0));
    const double mid = 0.5 * (m(0, 0) + m(1, 1));
    const double rad = std::hypot(half, b);
    out.values.resize(2);
    out.values << mid + rad, mid - rad;
    if (with_vectors) {
      const double theta = 0.5 * std::atan2(b, half);
      const double c = std::cos(theta), s = std::sin(theta);
      out.vectors.resize(2, 2);
      out.vectors << c, -s, s, c;
    }
    merge_ties(out.values);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      m, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  out.values = es.eigenvalues().reverse();
  if (with_vectors) out.vectors = es.eigenvectors().rowwise().reverse();
  merge_ties(out.values);
  return out;
}

// Lorentz frame: unit spatial direction, first axis when the spatial part is 0.
Eigen::VectorXd lorentz_direction(const Eigen::VectorXd& c, double& rho) {
  const int n = static_cast<int>(c.size());
  Eigen::VectorXd u = c.tail(n - 1);
  rho = u.norm();
  if (rho == 0.0) {
    u.setZero();
    u[0] = 1.0;
  } else {
    u /= rho;
  }
  return u;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void require_positive_spectrum(const Eigen::VectorXd& vals, const char* what) {
  for (int i = 0; i < vals.size(); ++i) {
    if (!(vals[i] > 0.0)) {
      throw DomainError(std::string(what) + " requires a positive spectrum; eigenvalue " + fmt(vals[i]) +
                        " is not positive");
    }
  }
}

Eigen::MatrixXd lorentz_lmul(const Eigen::VectorXd& c) {
  const int n = static_cast<int>(c.size());
  Eigen::MatrixXd l = c[0] * Eigen::MatrixXd::Identity(n, n);
  l.block(0, 1, 1, n - 1) = c.tail(n - 1).transpose();
  l.block(1, 0, n - 1, 1) = c.tail(n - 1);
  return l;
}

Eigen::VectorXd lorentz_product(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd z(n);
  z[0] = x.dot(y);
  z.tail(n - 1) = x[0] * y.tail(n - 1) + y[0] * x.tail(n - 1);
  return z;
}

}  // namespace

ConeElement jordan_product(const ConeElement& x, const ConeElement& y) {
  require_same_algebra(x.algebra(), y.algebra(), "jordan_product");
  const Algebra& alg = x.algebra();
  switch (alg.kind()) {
    case AlgebraKind::Real:
      return ConeElement(alg, x.coords().cwiseProduct(y.coords()));
    case AlgebraKind::Lorentz:
      return ConeElement(alg, lorentz_product(x.coords(), y.coords()));
    case AlgebraKind::SymReal: {
      Eigen::MatrixXd a = sym_matrix(x.coords(), alg.rank());
      Eigen::MatrixXd b = sym_matrix(y.coords(), alg.rank());
      Eigen::MatrixXd ab = a * b;
      return ConeElement(alg, sym_coords(0.5 * (ab + ab.transpose())));
    }
  }
  throw UsageError("jordan_product: unsupported algebra");
}

double inner(const ConeElement& x, const ConeElement& y) {
  require_same_algebra(x.algebra(), y.algebra(), "inner");
  return x.algebra().metric() * x.coords().dot(y.coords());
}

double norm(const ConeElement& x) { return std::sqrt(inner(x, x)); }

LinOperator lmul(const ConeElement& x) {
  const Algebra& alg = x.algebra();
  const int n = alg.dim();
  switch (alg.kind()) {
    case AlgebraKind::Real:
      return LinOperator(alg, Eigen::MatrixXd::Constant(1, 1, x[0]));
    case AlgebraKind::Lorentz:
      return LinOperator(alg, lorentz_lmul(x.coords()));
    case AlgebraKind::SymReal: {
      Eigen::MatrixXd l(n, n);
      for (int k = 0; k < n; ++k) {
        l.col(k) = jordan_product(x, ConeElement(alg, Eigen::VectorXd::Unit(n, k))).coords();
      }
      return LinOperator(alg, std::move(l));
    }
  }
  throw UsageError("lmul: unsupported algebra");
}

LinOperator quad_rep(const ConeElement& x) {
  const Algebra& alg = x.algebra();
  const int n = alg.dim();
  switch (alg.kind()) {
    case AlgebraKind::Real:
      return LinOperator(alg, Eigen::MatrixXd::Constant(1, 1, x[0] * x[0]));
    case AlgebraKind::Lorentz: {
      Eigen::MatrixXd l = lorentz_lmul(x.coords());
      Eigen::MatrixXd l2 = lorentz_lmul(lorentz_product(x.coords(), x.coords()));
      return LinOperator(alg, 2.0 * l * l - l2);
    }
    case AlgebraKind::SymReal: {
      // Column for basis element E is the coordinate vector of X E X.
      const int r = alg.rank();
      Eigen::MatrixXd xm = sym_matrix(x.coords(), r);
      Eigen::MatrixXd p(n, n);
      for (int i = 0; i < r; ++i) {
        p.col(i) = sym_coords(xm.col(i) * xm.col(i).transpose());
      }
      int k = r;
      for (int i = 0; i < r; ++i) {
        for (int j = i + 1; j < r; ++j, ++k) {
          Eigen::MatrixXd s = xm.col(i) * xm.col(j).transpose();
          p.col(k) = sym_coords((s + s.transpose()) / kSqrt2);
        }
      }
      return LinOperator(alg, std::move(p));
    }
  }
  throw UsageError("quad_rep: unsupported algebra");
}

ConeElement quad_apply(const ConeElement& x, const ConeElement& y) {
  require_same_algebra(x.algebra(), y.algebra(), "quad_apply");
  const Algebra& alg = x.algebra();
  switch (alg.kind()) {
    case AlgebraKind::Real:
      return ConeElement(alg, x.coords().cwiseProduct(x.coords()).cwiseProduct(y.coords()));
    case AlgebraKind::Lorentz: {
      const Eigen::VectorXd& a = x.coords();
      Eigen::VectorXd xy = lorentz_product(a, y.coords());
      Eigen::VectorXd xx = lorentz_product(a, a);
      return ConeElement(alg, 2.0 * lorentz_product(a, xy) - lorentz_product(xx, y.coords()));
    }
    case AlgebraKind::SymReal: {
      Eigen::MatrixXd a = sym_matrix(x.coords(), alg.rank());
      Eigen::MatrixXd b = sym_matrix(y.coords(), alg.rank());
      return ConeElement(alg, sym_coords(a * b * a));
    }
  }
  throw UsageError("quad_apply: unsupported algebra");
}

Spectrum spectral_decompose(const ConeElement& x) {
  const Algebra& alg = x.algebra();
  Spectrum s;
  switch (alg.kind()) {
    case AlgebraKind::Real:
      s.eigenvalues = x.coords();
      s.idempotents.push_back(alg.identity());
      return s;
    case AlgebraKind::Lorentz: {
      const int n = alg.dim();
      double rho = 0.0;
      Eigen::VectorXd u = lorentz_direction(x.coords(), rho);
      s.eigenvalues.resize(2);
      s.eigenvalues << x[0] + rho, x[0] - rho;
      Eigen::VectorXd cp(n), cm(n);
      cp[0] = cm[0] = 0.5;
      cp.tail(n - 1) = 0.5 * u;
      cm.tail(n - 1) = -0.5 * u;
      s.idempotents.emplace_back(alg, std::move(cp));
      s.idempotents.emplace_back(alg, std::move(cm));
      return s;
    }
    case AlgebraKind::SymReal: {
      SymEigen es = sym_eigen(sym_matrix(x.coords(), alg.rank()), true);
      s.eigenvalues = es.values;
      for (int i = 0; i < alg.rank(); ++i) {
        s.idempotents.emplace_back(alg, sym_coords(es.vectors.col(i) * es.vectors.col(i).transpose()));
      }
      return s;
    }
  }
  throw UsageError("spectral_decompose: unsupported algebra");
}

Eigen::VectorXd eigenvalues(const ConeElement& x) {
  const Algebra& alg = x.algebra();
  switch (alg.kind()) {
    case AlgebraKind::Real:
      return x.coords();
    case AlgebraKind::Lorentz: {
      const double rho = x.coords().tail(alg.dim() - 1).norm();
      Eigen::VectorXd v(2);
      v << x[0] + rho, x[0] - rho;
      return v;
    }
    case AlgebraKind::SymReal:
      return sym_eigen(sym_matrix(x.coords(), alg.rank()), false).values;
  }
  throw UsageError("eigenvalues: unsupported algebra");
}

double min_eigenvalue(const ConeElement& x) {
  Eigen::VectorXd v = eigenvalues(x);
  return v[v.size() - 1];
}

double max_eigenvalue(const ConeElement& x) { return eigenvalues(x)[0]; }

bool in_cone(const ConeElement& x) {
  if (!x.coords().allFinite()) return false;
  Eigen::VectorXd v = eigenvalues(x);
  return v[v.size() - 1] > 1e-12 * std::max(1.0, std::abs(v[0]));
}

double det(const ConeElement& x) { return eigenvalues(x).prod(); }

double log_det(const ConeElement& x) {
  Eigen::VectorXd v = eigenvalues(x);
  require_positive_spectrum(v, "log_det");
  return v.array().log().sum();
}

double trace(const ConeElement& x) {
  const Algebra& alg = x.algebra();
  switch (alg.kind()) {
    case AlgebraKind::Lorentz:
      return 2.0 * x[0];
    default:
      return x.coords().head(alg.rank()).sum();
  }
}

ConeElement spectral_map(const ConeElement& x, const std::function<double(double)>& f) {
  const Algebra& alg = x.algebra();
  switch (alg.kind()) {
    case AlgebraKind::Real:
      return ConeElement(alg, Eigen::VectorXd::Constant(1, f(x[0])));
    case AlgebraKind::Lorentz: {
      const int n = alg.dim();
      double rho = 0.0;
      Eigen::VectorXd u = lorentz_direction(x.coords(), rho);
      const double fp = f(x[0] + rho), fm = f(x[0] - rho);
      Eigen::VectorXd c(n);
      c[0] = 0.5 * (fp + fm);
      c.tail(n - 1) = 0.5 * (fp - fm) * u;
      return ConeElement(alg, std::move(c));
    }
    case AlgebraKind::SymReal: {
      SymEigen es = sym_eigen(sym_matrix(x.coords(), alg.rank()), true);
      Eigen::VectorXd fv = es.values.unaryExpr(f);
      return ConeElement(alg, sym_coords(es.vectors * fv.asDiagonal() * es.vectors.transpose()));
    }
  }
  throw UsageError("spectral_map: unsupported algebra");
}

ConeElement inverse(const ConeElement& x) {
  Eigen::VectorXd v = eigenvalues(x);
  for (int i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) throw DomainError("inverse requires nonzero eigenvalues; eigenvalue 0 found");
  }
  return spectral_map(x, [](double l) { return 1.0 / l; });
}

ConeElement exp(const ConeElement& x) {
  return spectral_map(x, [](double l) { return std::exp(l); });
}

ConeElement log(const ConeElement& x) {
  require_positive_spectrum(eigenvalues(x), "log");
  return spectral_map(x, [](double l) { return std::log(l); });
}

ConeElement sqrt(const ConeElement& x) {
  require_positive_spectrum(eigenvalues(x), "sqrt");
  return spectral_map(x, [](double l) { return std::sqrt(l); });
}

ConeElement power(const ConeElement& x, double t) {
  require_positive_spectrum(eigenvalues(x), "power");
  return spectral_map(x, [t](double l) { return std::pow(l, t); });
}

CalculusResult functional_calculus(const ConeElement& x, SpectralFn fn, double t) {
  switch (fn) {
    case SpectralFn::Det: return {true, det(x), {}};
    case SpectralFn::Trace: return {true, trace(x), {}};
    case SpectralFn::Inverse: return {false, 0.0, inverse(x).coords()};
    case SpectralFn::Exp: return {false, 0.0, exp(x).coords()};
    case SpectralFn::Log: return {false, 0.0, log(x).coords()};
    case SpectralFn::Sqrt: return {false, 0.0, sqrt(x).coords()};
    case SpectralFn::Power: return {false, 0.0, power(x, t).coords()};
  }
  throw UsageError("functional_calculus: unknown function");
}

Eigen::VectorXd orthonormal_scales(const Algebra& algebra) {
  return Eigen::VectorXd::Constant(algebra.dim(), 1.0 / std::sqrt(algebra.metric()));
}

std::vector<ConeElement> orthonormal_basis(const Algebra& algebra) {
  Eigen::VectorXd s = orthonormal_scales(algebra);
  std::vector<ConeElement> basis;
  for (int i = 0; i < algebra.dim(); ++i) {
    basis.emplace_back(algebra, s[i] * Eigen::VectorXd::Unit(algebra.dim(), i));
  }
  return basis;
}

Eigen::MatrixXd to_symmetric(const ConeElement& x) {
  if (x.algebra().kind() == AlgebraKind::Lorentz) throw UsageError("to_symmetric: lorentz element");
  return sym_matrix(x.coords(), x.algebra().rank());
}

ConeElement from_symmetric(const Algebra& algebra, const Eigen::MatrixXd& m) {
  if (algebra.kind() == AlgebraKind::Lorentz) throw UsageError("from_symmetric: lorentz algebra");
  if (m.rows() != algebra.rank() || m.cols() != algebra.rank()) {
    throw UsageError("from_symmetric: matrix size does not match " + algebra.label());
  }
  return ConeElement(algebra, sym_coords(m));
}

int rotation_size(const Algebra& algebra) {
  switch (algebra.kind()) {
    case AlgebraKind::Real: return 1;
    case AlgebraKind::SymReal: return algebra.rank();
    case AlgebraKind::Lorentz: return algebra.dim() - 1;
  }
  return 0;
}

namespace {

void check_rotation(const Algebra& algebra, const Rotation& rot) {
  const int m = rotation_size(algebra);
  if (algebra.kind() == AlgebraKind::Real && rot.u.size() == 0) return;
  if (rot.u.rows() != m || rot.u.cols() != m) {
    throw UsageError("rotation of size " + std::to_string(rot.u.rows()) + "x" + std::to_string(rot.u.cols()) +
                     " for " + algebra.label() + " (expected " + std::to_string(m) + ")");
  }
  const double err = (rot.u.transpose() * rot.u - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff();
  if (!(err <= 1e-10)) throw UsageError("rotation parameter is not orthogonal (error " + fmt(err) + ")");
}

}  // namespace

ConeElement apply_rotation(const ConeElement& x, const Rotation& rot) {
  const Algebra& alg = x.algebra();
  check_rotation(alg, rot);
  switch (alg.kind()) {
    case AlgebraKind::Real:
      return x;
    case AlgebraKind::Lorentz: {
      Eigen::VectorXd c = x.coords();
      c.tail(alg.dim() - 1) = rot.u * x.coords().tail(alg.dim() - 1);
      return ConeElement(alg, std::move(c));
    }
    case AlgebraKind::SymReal: {
      Eigen::MatrixXd m = sym_matrix(x.coords(), alg.rank());
      return ConeElement(alg, sym_coords(rot.u * m * rot.u.transpose()));
    }
  }
  throw UsageError("apply_rotation: unsupported algebra");
}

LinOperator rotation_operator(const Algebra& algebra, const Rotation& rot) {
  const int n = algebra.dim();
  Eigen::MatrixXd m(n, n);
  for (int k = 0; k < n; ++k) {
    m.col(k) = apply_rotation(ConeElement(algebra, Eigen::VectorXd::Unit(n, k)), rot).coords();
  }
  return LinOperator(algebra, std::move(m));
}

Rotation random_rotation(const Algebra& algebra, RngStream& rng) {
  const int m = rotation_size(algebra);
  Eigen::MatrixXd g(m, m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < m; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return Rotation{q};
}

}  // namespace conekit
