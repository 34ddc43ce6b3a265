// Closed-form decision for converting two rank-1 qubit operators into two
// qubit operators by a CP unital map, plus the pencil reduction that turns
// an arbitrary positive qubit pair into a rank-1 pair.
#pragma once

#include "obsconvert/choi.hpp"

namespace obsconvert {

struct DegenerateReductionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Region boundary on the z = 0 slice.
inline double f1(double x) {
  const double ax = std::abs(x);
  return ax >= 2.0 ? ax - 1.0 : ax * ax / 4.0;
}

// Region boundary off the z = 0 slice; f2(x, 0) = f1(x).
inline double f2(double x, double z) {
  const double r2 = x * x + z * z;
  return r2 >= 4.0 ? std::sqrt(r2) - 1.0 : r2 / 4.0;
}

// Quartic sign condition accompanying f2.
inline double f3(double x, double z, double w) {
  const double x2 = x * x, x4 = x2 * x2, x6 = x4 * x2;
  const double z2 = z * z, z4 = z2 * z2, z6 = z4 * z2;
  return 16.0 * w * w * w * w + (-8.0 * x2 + 8.0 * z2 + 32.0) * w * w * w +
         (x4 + 2.0 * x2 * z2 - 32.0 * x2 + z4 - 8.0 * z2 + 16.0) * w * w +
         (10.0 * x4 + 2.0 * x2 * z2 - 8.0 * x2 - 8.0 * z4 - 32.0 * z2) * w +
         (x4 - 3.0 * x4 * z2 - x6 - 3.0 * x2 * z4 + 20.0 * x2 * z2 - z6 -
          8.0 * z4 - 16.0 * z2);
}

// Membership in the feasible (x', z, w) region.  Within 10x of the z-zero
// threshold both branches are evaluated and OR-ed.
inline bool f_region(double x, double z, double w, double ztol = 1e-9) {
  const bool cond1 = std::abs(z) <= 10.0 * ztol && w >= f1(x);
  const bool cond2 = w >= f2(x, z) && f3(x, z, w) >= 0.0;
  return cond1 || cond2;
}

// Coordinates of the region test for a given instance.
struct QubitReduction {
  Matrix m0;          // (1/2c) M1^{-1/2} (M1 + M2 - (1-c^2) I) M1^{-1/2}
  double l = 0.0;     // half the spectral gap of M0
  double m = 0.0;     // tr(M0)/2
  double x_prime = 0.0, z = 0.0, w = 0.0;
  bool degenerate = false;  // l below threshold
  Matrix mm;          // M1^{-1/2} M2 M1^{-1/2} - M0^2
};

inline QubitReduction qubit_coordinates(const Matrix& m1, const Matrix& m2,
                                        double c, double tol = 1e-9) {
  if (m1.rows() != 2 || m2.rows() != 2)
    throw DimensionMismatchError("qubit_coordinates: operators must be 2x2");
  const Spectrum s1 = eig_hermitian(m1);
  if (s1.eigenvalues(1) <= tol)
    throw NotPsdError("qubit_coordinates: M1 must be positive definite");
  QubitReduction red;
  const Matrix m1is = inv_sqrt_pd(m1, 1e-14);
  red.m0 = (1.0 / (2.0 * c)) * m1is *
           (m1 + m2 - (1.0 - c * c) * Matrix::Identity(2, 2)) * m1is;
  red.mm = m1is * m2 * m1is - red.m0 * red.m0;
  const Spectrum s0 = eig_hermitian(red.m0);
  red.l = 0.5 * (s0.eigenvalues(0) - s0.eigenvalues(1));
  red.m = 0.5 * red.m0.trace().real();
  const double scale = std::max({red.m0.norm(), red.mm.norm(), 1.0});
  if (red.l <= tol * scale) {
    red.degenerate = true;
    return red;
  }
  const Matrix u = s0.eigenvectors;  // M0 = l sigma_z + m I in this basis
  const Matrix mt = u.adjoint() * red.mm * u;
  const double l2 = red.l * red.l;
  red.x_prime = std::abs(mt(0, 1)) / l2;
  red.z = (mt(0, 0).real() - mt(1, 1).real()) / (2.0 * l2);
  red.w = (mt(0, 0).real() + mt(1, 1).real()) / (2.0 * l2);
  return red;
}

// Decides existence of a CP unital map with |u1><u1| -> M1, |u2><u2| -> M2,
// where u1, u2 are unit vectors with overlap <u1|u2> = c in (0, 1) and
// M1 > 0.  Returns NotApplicable for the delegated c ~ 0 / c ~ 1 cases.
inline Verdict qubit_decide(const Vector& u1, const Vector& u2,
                            const Matrix& m1, const Matrix& m2,
                            double tol = 1e-9) {
  if (u1.size() != 2 || u2.size() != 2)
    throw DimensionMismatchError("qubit_decide: vectors must live on a qubit");
  const cplx ov = u1.dot(u2);  // Eigen dot conjugates the first argument
  if (std::abs(ov.imag()) > 1e-9 || ov.real() < -1e-9)
    throw std::invalid_argument("qubit_decide: require <u1|u2> = c >= 0");
  const double c = std::max(ov.real(), 0.0);
  Verdict v;
  if (c <= tol || c >= 1.0 - tol) {
    v.status = Status::NotApplicable;
    v.evidence = Evidence{"qubit-closed-form",
                          "overlap c at a delegated boundary", std::nullopt};
    return v;
  }
  const QubitReduction red = qubit_coordinates(m1, m2, c, tol);
  if (red.degenerate) {
    const double scale = std::max({red.m0.norm(), red.mm.norm(), 1.0});
    v.status = psd_check(red.mm, tol * scale) ? Status::Feasible
                                              : Status::Infeasible;
    return v;
  }
  v.status = f_region(red.x_prime, red.z, red.w) ? Status::Feasible
                                                 : Status::Infeasible;
  return v;
}

// Pencil reduction of a positive qubit pair (L1, L2), not proportional, to
// an equivalent rank-1 unit-norm pair.  The same affine change applies to
// the targets: M~1 = (M1 - t1 M2)/s1, M~2 = (M2 - t2 M1)/s2.
struct PencilReduction {
  Matrix l1, l2;           // rank-1, unit operator norm
  double t1 = 0, t2 = 0;   // pencil roots used
  double s1 = 1, s2 = 1;   // positive rescaling factors
  bool changed = false;

  Matrix map_target1(const Matrix& m1, const Matrix& m2) const {
    return changed ? ((m1 - t1 * m2) / s1).eval() : m1;
  }
  Matrix map_target2(const Matrix& m1, const Matrix& m2) const {
    return changed ? ((m2 - t2 * m1) / s2).eval() : m2;
  }
};

namespace detail {
// Smaller real root of det(A - t B) = 0 for 2x2 Hermitian A, B.
inline double smaller_pencil_root(const Matrix& a, const Matrix& b,
                                  double tol) {
  const double qa = b.determinant().real();
  const double qb = (a.trace() * b.trace() - (a * b).trace()).real();
  const double qc = a.determinant().real();
  const double sc = std::max({a.norm(), b.norm(), 1e-300});
  if (std::abs(qa) <= tol * sc * sc) {
    if (std::abs(qb) <= tol * sc * sc)
      throw DegenerateReductionError("pencil is degenerate");
    return qc / qb;
  }
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0) throw DegenerateReductionError("pencil roots are complex");
  const double sq = std::sqrt(disc);
  return std::min((qb - sq) / (2.0 * qa), (qb + sq) / (2.0 * qa));
}
}  // namespace detail

inline PencilReduction reduce_rank1(const Matrix& l1, const Matrix& l2,
                                    double tol = 1e-10) {
  if (l1.rows() != 2 || l2.rows() != 2)
    throw DimensionMismatchError("reduce_rank1: operators must be 2x2");
  const double sc = std::max({l1.norm(), l2.norm(), 1e-300});
  if ((l1.norm() * l2 - l2.norm() * l1).norm() <= tol * sc)
    throw DegenerateReductionError("reduce_rank1: L1 proportional to L2");
  PencilReduction red;
  const auto rank1_unit = [&](const Matrix& x) {
    const Spectrum s = eig_hermitian(x);
    return s.eigenvalues(1) <= tol * std::max(s.eigenvalues(0), 1.0) &&
           std::abs(s.eigenvalues(0) - 1.0) <= tol * 10.0;
  };
  if (rank1_unit(l1) && rank1_unit(l2)) {
    red.l1 = l1;
    red.l2 = l2;
    return red;
  }
  red.changed = true;
  red.t1 = detail::smaller_pencil_root(l1, l2, tol);
  red.t2 = detail::smaller_pencil_root(l2, l1, tol);
  Matrix c1 = l1 - red.t1 * l2;
  Matrix c2 = l2 - red.t2 * l1;
  red.s1 = lambda_max(c1);
  red.s2 = lambda_max(c2);
  if (red.s1 <= tol * sc || red.s2 <= tol * sc)
    throw DegenerateReductionError("reduce_rank1: L1 proportional to L2");
  red.l1 = c1 / red.s1;
  red.l2 = c2 / red.s2;
  return red;
}

}  // namespace obsconvert
