// Operator and vector families: Gram matrices, dual systems, rank and
// commutativity classification, rank-1 vector extraction.
#pragma once

#include <optional>

#include "obsconvert/linalg.hpp"

namespace obsconvert {

struct LinearlyDependentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RankMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Ordered family {u_theta} of complex vectors on one space.
struct VectorFamily {
  int dim = 0;
  std::vector<Vector> vectors;

  int size() const { return static_cast<int>(vectors.size()); }
};

// Family {L_theta} of PSD Hermitian operators sharing one space.
struct OperatorFamily {
  int dim = 0;
  std::vector<Matrix> ops;

  int size() const { return static_cast<int>(ops.size()); }
};

inline Matrix outer(const Vector& u) { return u * u.adjoint(); }

inline OperatorFamily family_from_vectors(const VectorFamily& f) {
  OperatorFamily out;
  out.dim = f.dim;
  for (const auto& u : f.vectors) out.ops.push_back(outer(u));
  return out;
}

// Columns are the family vectors ([U] in matrix form).
inline Matrix family_matrix(const VectorFamily& f) {
  Matrix m(f.dim, f.size());
  for (int t = 0; t < f.size(); ++t) m.col(t) = f.vectors[t];
  return m;
}

// G_{tt'} = <u_t|u_t'>, conjugate-linear in the first slot.
inline Matrix gram(const VectorFamily& f) {
  const Matrix m = family_matrix(f);
  return m.adjoint() * m;
}

inline bool linearly_independent(const VectorFamily& f, double rel_tol = 1e-9) {
  const Spectrum s = eig_hermitian(gram(f));
  const double top = s.eigenvalues(0);
  return s.eigenvalues(s.eigenvalues.size() - 1) > rel_tol * top;
}

// Dual system: <u^_t | u_t'> = delta_{tt'}.  Exists iff F is independent.
inline VectorFamily dual_system(const VectorFamily& f) {
  if (!linearly_independent(f))
    throw LinearlyDependentError("dual_system: family is linearly dependent");
  const Matrix m = family_matrix(f);
  const Matrix ginv = gram(f).inverse();
  const Matrix duals = m * ginv;  // column t is the dual of u_t
  VectorFamily out;
  out.dim = f.dim;
  for (int t = 0; t < f.size(); ++t) out.vectors.push_back(duals.col(t));
  return out;
}

// Inverse of a Gram matrix through its spectrum, with an eigenvalue floor.
// Returns nullopt when the family is numerically dependent.
inline std::optional<Matrix> gram_inverse(const Matrix& g,
                                          double floor_rel = 1e-12) {
  const Spectrum s = eig_hermitian(g);
  const double top = s.eigenvalues(0);
  RealVector inv(s.eigenvalues.size());
  for (Eigen::Index i = 0; i < inv.size(); ++i) {
    if (s.eigenvalues(i) <= floor_rel * std::max(top, 1e-300))
      return std::nullopt;
    inv(i) = 1.0 / s.eigenvalues(i);
  }
  return s.eigenvectors * inv.asDiagonal() * s.eigenvectors.adjoint();
}

struct FamilyClass {
  std::vector<int> ranks;
  bool all_rank1 = false;
  bool all_projector_multiple = false;
  bool commutative = false;  // pairwise commuting, hence jointly diagonalizable
  bool vectors_independent = false;  // meaningful when all_rank1
};

inline int numerical_rank(const Matrix& a, double rel_tol = 1e-8) {
  const Spectrum s = eig_hermitian(a);
  const double top = std::abs(s.eigenvalues(0));
  if (top == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i)
    if (std::abs(s.eigenvalues(i)) > rel_tol * top) ++r;
  return r;
}

// Extract u_theta with L_theta = |u><u|; first nonzero component made
// real nonnegative.  Throws RankMismatchError when lambda_2 > tol*lambda_1.
inline VectorFamily vectors_from_rank1(const OperatorFamily& f,
                                       double rel_tol = 1e-8) {
  VectorFamily out;
  out.dim = f.dim;
  for (const auto& l : f.ops) {
    const Spectrum s = eig_hermitian(l);
    const double l1 = s.eigenvalues(0);
    if (l1 <= 0.0) throw RankMismatchError("vectors_from_rank1: zero operator");
    if (s.eigenvalues.size() > 1 && std::abs(s.eigenvalues(1)) > rel_tol * l1)
      throw RankMismatchError("vectors_from_rank1: operator rank exceeds 1");
    Vector u = std::sqrt(l1) * s.eigenvectors.col(0);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (std::abs(u(i)) > 1e-12 * u.norm()) {
        u *= std::conj(u(i)) / std::abs(u(i));
        break;
      }
    }
    out.vectors.push_back(u);
  }
  return out;
}

// Non-throwing variant: nullopt when any operator is not rank-1.
inline std::optional<VectorFamily> try_vectors_from_rank1(
    const OperatorFamily& f, double rel_tol = 1e-8) {
  try {
    return vectors_from_rank1(f, rel_tol);
  } catch (const RankMismatchError&) {
    return std::nullopt;
  }
}

inline FamilyClass classify(const OperatorFamily& f, double rel_tol = 1e-8) {
  FamilyClass c;
  c.all_rank1 = true;
  c.all_projector_multiple = true;
  c.commutative = true;
  double scale = 0.0;
  for (const auto& l : f.ops) scale = std::max(scale, l.norm());
  for (const auto& l : f.ops) {
    c.ranks.push_back(numerical_rank(l, rel_tol));
    const Spectrum s = eig_hermitian(l);
    const double top = s.eigenvalues(0);
    if (c.ranks.back() != 1) c.all_rank1 = false;
    // projector multiple: every eigenvalue is ~0 or ~top
    for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) {
      const double v = s.eigenvalues(i);
      if (std::abs(v) > rel_tol * std::max(top, 1e-300) &&
          std::abs(v - top) > rel_tol * std::max(top, 1e-300))
        c.all_projector_multiple = false;
    }
  }
  for (size_t i = 0; i < f.ops.size(); ++i)
    for (size_t j = i + 1; j < f.ops.size(); ++j) {
      const Matrix comm = f.ops[i] * f.ops[j] - f.ops[j] * f.ops[i];
      if (comm.norm() > rel_tol * std::max(scale * scale, 1e-300))
        c.commutative = false;
    }
  if (c.all_rank1) {
    c.vectors_independent = linearly_independent(vectors_from_rank1(f, rel_tol));
  }
  return c;
}

}  // namespace obsconvert
