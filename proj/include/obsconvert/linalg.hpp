// Dense complex linear algebra kernel: Hermitian eigendecomposition, PSD
// tests and projections, Hadamard products, trace norms, seeded sampling.
// All functions are pure; matrices are Eigen::MatrixXcd throughout.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace obsconvert {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

struct Tolerances {
  double hermiticity = 1e-10;
  double psd = 1e-9;
  double reconstruction = 1e-8;  // scaled by max(1, ||A||)
  double convert = 1e-7;         // certificate residual per theta
};

struct DimensionMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SizeMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct HermiticityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotPsdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

inline double hermiticity_defect(const Matrix& a) {
  return (a - a.adjoint()).norm();
}

inline void require_square(const Matrix& a, const char* who) {
  if (a.rows() != a.cols())
    throw DimensionMismatchError(std::string(who) + ": matrix is not square");
}

inline void require_hermitian(const Matrix& a, double tol = 1e-10) {
  require_square(a, "require_hermitian");
  if (!all_finite(a)) throw HermiticityError("matrix has non-finite entries");
  double scale = std::max(1.0, a.norm());
  if (hermiticity_defect(a) > tol * scale)
    throw HermiticityError("matrix is not Hermitian within tolerance");
}

// Eigenvalues sorted descending, eigenvector columns orthonormal.
struct Spectrum {
  RealVector eigenvalues;
  Matrix eigenvectors;
};

inline Spectrum eig_hermitian(const Matrix& a, double herm_tol = 1e-10) {
  require_hermitian(a, herm_tol);
  Matrix sym = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eig_hermitian: eigensolver failed");
  const Eigen::Index n = a.rows();
  Spectrum s;
  s.eigenvalues = es.eigenvalues().reverse();
  s.eigenvectors = es.eigenvectors().rowwise().reverse();
  (void)n;
  return s;
}

inline double lambda_max(const Matrix& a) {
  return eig_hermitian(a).eigenvalues(0);
}

inline double lambda_min(const Matrix& a) {
  const Spectrum s = eig_hermitian(a);
  return s.eigenvalues(s.eigenvalues.size() - 1);
}

// Operator norm of a Hermitian matrix, max{lambda_max, -lambda_min}.
inline double operator_norm(const Matrix& a) {
  const Spectrum s = eig_hermitian(a);
  return std::max(s.eigenvalues(0), -s.eigenvalues(s.eigenvalues.size() - 1));
}

// sp(A) = lambda_max - lambda_min
inline double spread(const Matrix& a) {
  const Spectrum s = eig_hermitian(a);
  return s.eigenvalues(0) - s.eigenvalues(s.eigenvalues.size() - 1);
}

inline bool psd_check(const Matrix& a, double tol = 1e-9) {
  return lambda_min(a) >= -tol;
}

// Frobenius-nearest PSD matrix: clip negative eigenvalues.
inline Matrix project_psd(const Matrix& a) {
  const Spectrum s = eig_hermitian(a, 1e-6 * std::max(1.0, a.norm()));
  RealVector clipped = s.eigenvalues.cwiseMax(0.0);
  return s.eigenvectors * clipped.asDiagonal() * s.eigenvectors.adjoint();
}

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw SizeMismatchError("hadamard: shape mismatch");
  return a.cwiseProduct(b);
}

// Sum of singular values.
inline double trace_norm(const Matrix& a) {
  require_square(a, "trace_norm");
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues().sum();
}

inline Matrix sqrt_psd(const Matrix& a, double tol = 1e-9) {
  const Spectrum s = eig_hermitian(a);
  if (s.eigenvalues(s.eigenvalues.size() - 1) < -tol * std::max(1.0, s.eigenvalues(0)))
    throw NotPsdError("sqrt_psd: matrix is not PSD");
  RealVector r = s.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  return s.eigenvectors * r.asDiagonal() * s.eigenvectors.adjoint();
}

// Inverse square root on the support; eigenvalues below floor are rejected.
inline Matrix inv_sqrt_pd(const Matrix& a, double floor_rel = 1e-12) {
  const Spectrum s = eig_hermitian(a);
  const double top = s.eigenvalues(0);
  RealVector r(s.eigenvalues.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (s.eigenvalues(i) <= floor_rel * std::max(top, 1e-300))
      throw NotPsdError("inv_sqrt_pd: matrix is singular");
    r(i) = 1.0 / std::sqrt(s.eigenvalues(i));
  }
  return s.eigenvectors * r.asDiagonal() * s.eigenvectors.adjoint();
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Real Hilbert-Schmidt inner product Re tr(A^dag B).
inline double hs_inner(const Matrix& a, const Matrix& b) {
  return (a.adjoint() * b).trace().real();
}

inline cplx hs_inner_c(const Matrix& a, const Matrix& b) {
  return (a.adjoint() * b).trace();
}

// --- seeded sampling ------------------------------------------------------

inline Matrix random_complex(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a(i, j) = cplx(g(rng), g(rng));
  return a;
}

inline Matrix random_hermitian(int dim, std::mt19937_64& rng) {
  Matrix a = random_complex(dim, dim, rng);
  return 0.5 * (a + a.adjoint());
}

inline Matrix random_psd(int dim, std::mt19937_64& rng) {
  Matrix a = random_complex(dim, dim, rng);
  return a * a.adjoint() / double(dim);
}

inline Matrix random_unitary(int dim, std::mt19937_64& rng) {
  Matrix a = random_complex(dim, dim, rng);
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < dim; ++i) {
    cplx d = r(i, i);
    if (std::abs(d) > 0) q.col(i) *= d / std::abs(d);
  }
  return q;
}

inline Vector random_unit_vector(int dim, std::mt19937_64& rng) {
  Vector v = random_complex(dim, 1, rng);
  return v / v.norm();
}

// Uniform point on the real unit sphere in R^n.
inline RealVector random_sphere(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  RealVector x(n);
  for (int i = 0; i < n; ++i) x(i) = g(rng);
  double nn = x.norm();
  return nn > 0 ? RealVector(x / nn) : RealVector(RealVector::Unit(n, 0));
}

// Orthonormal Hermitian basis of L(C^d): diagonal units, then
// (E_ab+E_ba)/sqrt2 and i(E_ab-E_ba)/sqrt2 for a<b.  d^2 elements.
inline std::vector<Matrix> hermitian_basis(int d) {
  std::vector<Matrix> basis;
  basis.reserve(static_cast<size_t>(d) * d);
  const double s = 1.0 / std::sqrt(2.0);
  for (int a = 0; a < d; ++a) {
    Matrix e = Matrix::Zero(d, d);
    e(a, a) = 1.0;
    basis.push_back(e);
  }
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      Matrix e = Matrix::Zero(d, d);
      e(a, b) = s;
      e(b, a) = s;
      basis.push_back(e);
      Matrix f = Matrix::Zero(d, d);
      f(a, b) = cplx(0, s);
      f(b, a) = cplx(0, -s);
      basis.push_back(f);
    }
  return basis;
}

}  // namespace obsconvert
