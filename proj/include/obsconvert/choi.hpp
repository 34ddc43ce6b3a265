// General decision engine for observable conversion: Choi-matrix
// feasibility via Dykstra alternating projections, Kraus extraction,
// certified linear optimization over map classes, randomization-witness
// checking, and the monotone audit.
#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <sstream>

#include "obsconvert/families.hpp"

namespace obsconvert {

enum class MapClass { CP, CPSubunital, CPUnital, CPTP };

inline const char* map_class_name(MapClass c) {
  switch (c) {
    case MapClass::CP: return "cp";
    case MapClass::CPSubunital: return "subunital";
    case MapClass::CPUnital: return "unital";
    case MapClass::CPTP: return "cptp";
  }
  return "?";
}

// --- Kraus maps -------------------------------------------------------------

struct KrausMap {
  int din = 0, dout = 0;
  std::vector<Matrix> ops;

  Matrix apply(const Matrix& x) const {
    Matrix out = Matrix::Zero(dout, dout);
    for (const auto& w : ops) out += w * x * w.adjoint();
    return out;
  }
  Matrix apply_adjoint(const Matrix& y) const {
    Matrix out = Matrix::Zero(din, din);
    for (const auto& w : ops) out += w.adjoint() * y * w;
    return out;
  }
  Matrix applied_identity() const { return apply(Matrix::Identity(din, din)); }
};

inline KrausMap identity_map(int d) {
  return KrausMap{d, d, {Matrix::Identity(d, d)}};
}

// Choi matrix J = sum_ij Lambda(E_ij) (x) E_ij on K (x) H, index (a*din + i).
inline Matrix choi_of_kraus(const KrausMap& m) {
  const int d = m.din, dp = m.dout;
  Matrix j = Matrix::Zero(dp * d, dp * d);
  Vector omega = Vector::Zero(d * d);
  for (int i = 0; i < d; ++i) omega(i * d + i) = 1.0;
  for (const auto& w : m.ops) {
    Matrix wi = kron(w, Matrix::Identity(d, d));
    Vector psi = wi * omega;
    j += psi * psi.adjoint();
  }
  return j;
}

// Lambda(X) = tr_H [ J (I (x) X^T) ].
inline Matrix apply_choi(const Matrix& j, int din, int dout, const Matrix& x) {
  Matrix out = Matrix::Zero(dout, dout);
  for (int a = 0; a < dout; ++a)
    for (int b = 0; b < dout; ++b) {
      cplx s = 0;
      for (int i = 0; i < din; ++i)
        for (int k = 0; k < din; ++k) s += j(a * din + i, b * din + k) * x(i, k);
      out(a, b) = s;
    }
  return out;
}

inline Matrix choi_trace_in(const Matrix& j, int din, int dout) {
  Matrix out = Matrix::Zero(dout, dout);
  for (int a = 0; a < dout; ++a)
    for (int b = 0; b < dout; ++b)
      for (int i = 0; i < din; ++i) out(a, b) += j(a * din + i, b * din + i);
  return out;
}

inline Matrix choi_trace_out(const Matrix& j, int din, int dout) {
  Matrix out = Matrix::Zero(din, din);
  for (int i = 0; i < din; ++i)
    for (int k = 0; k < din; ++k)
      for (int a = 0; a < dout; ++a) out(i, k) += j(a * din + i, a * din + k);
  return out;
}

// Kraus operators from a PSD Choi matrix; count equals numerical rank.
inline std::vector<Matrix> extract_kraus(const Matrix& j, int din, int dout,
                                         double psd_tol = 1e-7,
                                         double rank_rel = 1e-13) {
  const Spectrum s = eig_hermitian(j);
  const double top = std::max(s.eigenvalues(0), 0.0);
  if (s.eigenvalues(s.eigenvalues.size() - 1) < -psd_tol * std::max(1.0, top))
    throw NotPsdError("extract_kraus: Choi matrix is not PSD");
  std::vector<Matrix> ops;
  for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k) {
    const double lam = s.eigenvalues(k);
    if (lam <= rank_rel * std::max(top, 1e-300)) continue;
    Vector psi = std::sqrt(lam) * s.eigenvectors.col(k);
    Matrix w(dout, din);
    for (int a = 0; a < dout; ++a)
      for (int i = 0; i < din; ++i) w(a, i) = psi(a * din + i);
    ops.push_back(w);
  }
  return ops;
}

// Blocks M_{tt'} = Lambda(|u_t><u_t'|) of the rank-1 Choi-block matrix.
inline std::vector<std::vector<Matrix>> choi_blocks(const KrausMap& m,
                                                    const VectorFamily& u) {
  const int n = u.size();
  std::vector<std::vector<Matrix>> blocks(n, std::vector<Matrix>(n));
  for (int s = 0; s < n; ++s)
    for (int t = 0; t < n; ++t) {
      Matrix b = Matrix::Zero(m.dout, m.dout);
      for (const auto& w : m.ops)
        b += (w * u.vectors[s]) * (w * u.vectors[t]).adjoint();
      blocks[s][t] = b;
    }
  return blocks;
}

// --- affine constraint sets -------------------------------------------------

// Affine set { Y Hermitian : <C_k, Y>_HS = b_k }, rows C_k Hermitian.
struct AffineConstraints {
  std::vector<Matrix> rows;
  RealVector rhs;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> gram_cod;

  void finalize() {
    const int m = static_cast<int>(rows.size());
    Eigen::MatrixXd g(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) g(i, j) = g(j, i) = hs_inner(rows[i], rows[j]);
    gram_cod.compute(g);
  }
  RealVector evaluate(const Matrix& y) const {
    RealVector v(rows.size());
    for (size_t k = 0; k < rows.size(); ++k) v(k) = hs_inner(rows[k], y);
    return v;
  }
  double residual(const Matrix& y) const { return (evaluate(y) - rhs).norm(); }
  Matrix project(const Matrix& y) const {
    const RealVector mu = gram_cod.solve(evaluate(y) - rhs);
    Matrix out = y;
    for (size_t k = 0; k < rows.size(); ++k) out -= mu(k) * rows[k];
    return out;
  }
};

// Variable Y = diag(J, S): Choi block of size jdim, optional PSD slack of
// size sdim (subunital side condition).
struct FeasibilityProblem {
  int din = 0, dout = 0;
  int jdim = 0, sdim = 0;
  AffineConstraints constraints;

  int vdim() const { return jdim + sdim; }
  Matrix embed_j(const Matrix& c) const {
    Matrix e = Matrix::Zero(vdim(), vdim());
    e.topLeftCorner(jdim, jdim) = c;
    return e;
  }
  Matrix embed_s(const Matrix& c) const {
    Matrix e = Matrix::Zero(vdim(), vdim());
    e.bottomRightCorner(sdim, sdim) = c;
    return e;
  }
  // Projection onto the product PSD cone (J and S blocks separately,
  // off-diagonal coupling zeroed).
  Matrix project_cone(const Matrix& y) const {
    Matrix out = Matrix::Zero(vdim(), vdim());
    out.topLeftCorner(jdim, jdim) = project_psd(y.topLeftCorner(jdim, jdim));
    if (sdim > 0)
      out.bottomRightCorner(sdim, sdim) =
          project_psd(y.bottomRightCorner(sdim, sdim));
    return out;
  }
};

inline FeasibilityProblem build_feasibility(const OperatorFamily& src,
                                            const OperatorFamily& tgt,
                                            MapClass cls) {
  FeasibilityProblem p;
  p.din = src.dim;
  p.dout = tgt.dim;
  p.jdim = p.din * p.dout;
  p.sdim = (cls == MapClass::CPSubunital) ? p.dout : 0;
  const auto fout = hermitian_basis(p.dout);
  const auto fin = hermitian_basis(p.din);
  const Matrix id_in = Matrix::Identity(p.din, p.din);
  // conversion rows: <F_m (x) L_t^T, J> = tr(F_m M_t)
  for (int t = 0; t < src.size(); ++t) {
    const Matrix lt = src.ops[t].transpose();
    for (const auto& fm : fout) {
      p.constraints.rows.push_back(p.embed_j(kron(fm, lt)));
      p.constraints.rhs.conservativeResize(p.constraints.rows.size());
      p.constraints.rhs(p.constraints.rows.size() - 1) =
          hs_inner(fm, tgt.ops[t]);
    }
  }
  // side condition
  if (cls == MapClass::CPUnital || cls == MapClass::CPSubunital) {
    for (const auto& fm : fout) {
      Matrix row = p.embed_j(kron(fm, id_in));
      if (p.sdim > 0) row += p.embed_s(fm);
      p.constraints.rows.push_back(row);
      p.constraints.rhs.conservativeResize(p.constraints.rows.size());
      p.constraints.rhs(p.constraints.rows.size() - 1) = fm.trace().real();
    }
  } else if (cls == MapClass::CPTP) {
    const Matrix id_out = Matrix::Identity(p.dout, p.dout);
    for (const auto& gm : fin) {
      p.constraints.rows.push_back(p.embed_j(kron(id_out, gm)));
      p.constraints.rhs.conservativeResize(p.constraints.rows.size());
      p.constraints.rhs(p.constraints.rows.size() - 1) = gm.trace().real();
    }
  }
  p.constraints.finalize();
  return p;
}

struct SolveResult {
  bool converged = false;
  Matrix y;  // cone-feasible iterate (PSD blocks)
  double residual = 0.0;
  int iterations = 0;
};

// Douglas-Rachford splitting between the product PSD cone and the affine
// constraint set.  On success returns a cone point with small affine
// residual; when the sets do not intersect the residual stays large (the
// solver never certifies infeasibility by itself).
inline SolveResult solve_feasibility(const FeasibilityProblem& p,
                                     int max_iters = 20000, double tol = 1e-9,
                                     const Matrix* warm = nullptr) {
  const int n = p.vdim();
  Matrix y = warm ? *warm : Matrix(Matrix::Identity(n, n));
  SolveResult res;
  const double scale = std::max(1.0, p.constraints.rhs.norm());
  double best = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iters; ++it) {
    const Matrix zc = p.project_cone(y);
    const Matrix za = p.constraints.project((2.0 * zc - y).eval());
    y += za - zc;
    const double r = p.constraints.residual(zc);
    res.iterations = it + 1;
    if (r < best) {
      best = r;
      res.y = zc;
      res.residual = r;
    }
    if (r <= tol * scale) {
      res.converged = true;
      return res;
    }
  }
  return res;
}

// Projection onto the map-class spectrahedron {J >= 0, side condition}
// (no conversion rows) by Dykstra; used by optimize_linear and the
// witness search.
struct SpectrahedronProjector {
  FeasibilityProblem p;  // constraints hold only the side condition

  SpectrahedronProjector(int din, int dout, MapClass cls) {
    OperatorFamily empty_src, empty_tgt;
    empty_src.dim = din;
    empty_tgt.dim = dout;
    p = build_feasibility(empty_src, empty_tgt, cls);
  }
  // Returns a cone point approximately on the affine slice.
  Matrix project(const Matrix& y, int iters = 400, double tol = 1e-12) const {
    if (p.constraints.rows.empty()) return p.project_cone(y);
    Matrix x = y;
    Matrix inc_cone = Matrix::Zero(p.vdim(), p.vdim());
    Matrix inc_aff = Matrix::Zero(p.vdim(), p.vdim());
    Matrix z;
    for (int it = 0; it < iters; ++it) {
      z = p.project_cone(x + inc_cone);
      inc_cone = x + inc_cone - z;
      x = p.constraints.project(z + inc_aff);
      inc_aff = z + inc_aff - x;
      if (p.constraints.residual(z) < tol && (z - x).norm() < tol) break;
    }
    return z;
  }
};

// --- certified linear optimization over map classes --------------------------

// Upper bound on sup { <Q, J> : J in class spectrahedron } via an explicit
// dual certificate Z (unital: Z (x) I >= Q gives sup <= tr Z; subunital
// additionally Z >= 0; CPTP: I (x) Z >= Q).  Every subgradient iterate is
// corrected to a feasible Z, so the returned bound is always valid.
inline double dual_upper_bound(const Matrix& q, int din, int dout,
                               MapClass cls, int iters = 1500) {
  const bool z_on_out = (cls != MapClass::CPTP);
  const int zd = z_on_out ? dout : din;
  const int other = z_on_out ? din : dout;
  auto lifted = [&](const Matrix& z) {
    return z_on_out ? kron(z, Matrix::Identity(other, other))
                    : kron(Matrix::Identity(other, other), z);
  };
  auto corrected_value = [&](Matrix z) -> double {
    if (cls == MapClass::CPSubunital) z = project_psd(z);
    const double gap = lambda_max(q - lifted(z));
    if (gap > 0) z += gap * Matrix::Identity(zd, zd);
    return z.trace().real();
  };
  const double lm = lambda_max(q);
  Matrix z = std::max(lm, cls == MapClass::CPSubunital ? 0.0 : lm) *
             Matrix::Identity(zd, zd);
  if (cls == MapClass::CPSubunital && lm < 0) z = Matrix::Zero(zd, zd);
  double best = corrected_value(z);
  const double scale = std::max(1.0, q.norm());
  for (int it = 1; it <= iters; ++it) {
    // subgradient of tr Z + zd * max(0, lambda_max(Q - lift(Z)))
    Matrix g = Matrix::Identity(zd, zd);
    const Spectrum s = eig_hermitian(q - lifted(z));
    if (s.eigenvalues(0) > -1e-14 * scale) {
      const Vector v = s.eigenvectors.col(0);
      // partial trace of vv^dag over the identity factor
      Matrix pt = Matrix::Zero(zd, zd);
      for (int a = 0; a < zd; ++a)
        for (int b = 0; b < zd; ++b)
          for (int i = 0; i < other; ++i) {
            const int ia = z_on_out ? a * other + i : i * zd + a;
            const int ib = z_on_out ? b * other + i : i * zd + b;
            pt(a, b) += v(ia) * std::conj(v(ib));
          }
      g -= double(zd) * pt;
    }
    z -= (0.5 * scale / std::sqrt(double(it))) * g;
    best = std::min(best, corrected_value(z));
  }
  return best;
}

struct LinearOptimum {
  double value = 0.0;      // certified primal lower bound
  double upper = 0.0;      // certified dual upper bound
  double gap() const { return upper - value; }
  Matrix argmax;           // cone-feasible J attaining `value` approximately
};

// Approximately maximize <Q, J> over the class spectrahedron by projected
// gradient ascent; certifies the result with dual_upper_bound.
inline LinearOptimum optimize_linear(const Matrix& q, int din, int dout,
                                     MapClass cls, int iters = 800) {
  if (cls == MapClass::CP)
    throw std::invalid_argument("optimize_linear: CP cone is unbounded");
  SpectrahedronProjector proj(din, dout, cls);
  const int n = proj.p.vdim();
  Matrix qe = proj.p.embed_j(q);
  Matrix y = proj.project(Matrix::Identity(n, n));
  const double scale = std::max(q.norm(), 1e-12);
  double best = -1e300;
  Matrix best_y = y;
  for (int it = 1; it <= iters; ++it) {
    y = proj.project(y + (1.0 / scale) * qe);
    const double v = hs_inner(qe, y);
    if (v > best) {
      best = v;
      best_y = y;
    }
  }
  LinearOptimum out;
  out.argmax = best_y.topLeftCorner(q.rows(), q.cols());
  // correct for the tiny affine residual of the Dykstra projection
  const double slack = proj.p.constraints.residual(best_y);
  out.value = best - slack * scale;
  out.upper = dual_upper_bound(q, din, dout, cls);
  return out;
}

// --- verdicts ----------------------------------------------------------------

enum class Status { Feasible, Infeasible, Undecided, NotApplicable };

inline const char* status_name(Status s) {
  switch (s) {
    case Status::Feasible: return "feasible";
    case Status::Infeasible: return "infeasible";
    case Status::Undecided: return "undecided";
    case Status::NotApplicable: return "not-applicable";
  }
  return "?";
}

struct Certificate {
  KrausMap map;
  Matrix choi;
  double conversion_residual = 0.0;  // max_t ||Lambda(L_t) - M_t||
  double side_residual = 0.0;
};

struct RandomizationWitness {
  std::vector<int> theta0;
  std::vector<double> p;
  std::vector<Matrix> x;
  double lhs_upper = 0.0;  // certified sup_L1 sum p tr L1(L)X
  double rhs_lower = 0.0;  // certified sup_L2 sum p tr L2(M)X
};

struct Evidence {
  std::string kind;         // "lambda-monotone", "norm-monotone", ...
  std::string description;
  std::optional<RandomizationWitness> witness;
};

struct Verdict {
  Status status = Status::Undecided;
  std::optional<Certificate> certificate;
  std::optional<Evidence> evidence;
  double residual = 0.0;
  int iterations = 0;
};

struct ConversionQuery {
  OperatorFamily source;
  OperatorFamily target;
  MapClass cls = MapClass::CPUnital;
  double tol = 1e-7;
  std::uint64_t seed = 0;
  int max_iters = 20000;
  int witness_restarts = 32;
};

// --- necessary-condition prechecks -------------------------------------------

struct MonotoneViolation {
  RealVector x;
  std::string condition;
  double lhs = 0.0, rhs = 0.0;
};

// Samples real combinations sum x_t L_t and checks the Appendix-A /
// commutative-case monotone inequalities for the given class.  Returns the
// first violation found, if any.  Deterministic directions (+-coordinate,
// +-all-ones) are always tried first.
inline std::optional<MonotoneViolation> monotone_precheck(
    const OperatorFamily& src, const OperatorFamily& tgt, MapClass cls,
    int samples, std::uint64_t seed, double tol = 1e-8) {
  const int n = src.size();
  std::vector<RealVector> dirs;
  for (int t = 0; t < n; ++t) {
    dirs.push_back(RealVector::Unit(n, t));
    dirs.push_back(-RealVector::Unit(n, t));
  }
  dirs.push_back(RealVector::Ones(n));
  dirs.push_back(-RealVector::Ones(n));
  std::mt19937_64 rng(seed);
  for (int s = 0; s < samples; ++s) dirs.push_back(random_sphere(n, rng));

  double scale = 1.0;
  for (const auto& l : src.ops) scale = std::max(scale, l.norm());
  for (const auto& m : tgt.ops) scale = std::max(scale, m.norm());
  const double eps = tol * scale;

  for (const auto& x : dirs) {
    Matrix cl = Matrix::Zero(src.dim, src.dim);
    Matrix cm = Matrix::Zero(tgt.dim, tgt.dim);
    for (int t = 0; t < n; ++t) {
      cl += x(t) * src.ops[t];
      cm += x(t) * tgt.ops[t];
    }
    const Spectrum sl = eig_hermitian(cl), sm = eig_hermitian(cm);
    const double lmaxL = sl.eigenvalues(0),
                 lminL = sl.eigenvalues(sl.eigenvalues.size() - 1);
    const double lmaxM = sm.eigenvalues(0),
                 lminM = sm.eigenvalues(sm.eigenvalues.size() - 1);
    if (cls == MapClass::CPUnital) {
      if (lmaxL < lmaxM - eps)
        return MonotoneViolation{x, "lambda-max-monotone", lmaxL, lmaxM};
      if (lminL > lminM + eps)
        return MonotoneViolation{x, "lambda-min-monotone", lminL, lminM};
    } else if (cls == MapClass::CPSubunital) {
      if (std::max(lmaxL, 0.0) < std::max(lmaxM, 0.0) - eps)
        return MonotoneViolation{x, "lambda-max-monotone-subunital",
                                 std::max(lmaxL, 0.0), std::max(lmaxM, 0.0)};
      if (std::min(lminL, 0.0) > std::min(lminM, 0.0) + eps)
        return MonotoneViolation{x, "lambda-min-monotone-subunital",
                                 std::min(lminL, 0.0), std::min(lminM, 0.0)};
      const double nl = std::max(lmaxL, -lminL), nm = std::max(lmaxM, -lminM);
      if (nl < nm - eps)
        return MonotoneViolation{x, "infty-monotone", nl, nm};
    } else if (cls == MapClass::CPTP) {
      if (trace_norm(cl) < trace_norm(cm) - eps)
        return MonotoneViolation{x, "trace-norm-monotone", trace_norm(cl),
                                 trace_norm(cm)};
    }
  }
  if (cls == MapClass::CPTP) {
    for (int t = 0; t < n; ++t) {
      const double tl = src.ops[t].trace().real(),
                   tm = tgt.ops[t].trace().real();
      if (std::abs(tl - tm) > eps)
        return MonotoneViolation{RealVector::Unit(n, t), "trace-preservation",
                                 tl, tm};
    }
  }
  return std::nullopt;
}

// --- certificate polish -------------------------------------------------------

// Enforce the side condition exactly on a Kraus list (unital / CPTP by
// congruence with an inverse square root, subunital by rescaling).
inline void polish_side_condition(KrausMap& m, MapClass cls) {
  if (m.ops.empty()) return;
  if (cls == MapClass::CPUnital) {
    Matrix a = m.applied_identity();
    Matrix corr = inv_sqrt_pd(a, 1e-14);
    for (auto& w : m.ops) w = corr * w;
  } else if (cls == MapClass::CPTP) {
    Matrix a = Matrix::Zero(m.din, m.din);
    for (const auto& w : m.ops) a += w.adjoint() * w;
    Matrix corr = inv_sqrt_pd(a, 1e-14);
    for (auto& w : m.ops) w = w * corr;
  } else if (cls == MapClass::CPSubunital) {
    const double lm = lambda_max(m.applied_identity());
    if (lm > 1.0) {
      const double f = 1.0 / std::sqrt(lm);
      for (auto& w : m.ops) w *= f;
    }
  }
}

inline double side_condition_residual(const KrausMap& m, MapClass cls) {
  if (cls == MapClass::CP) return 0.0;
  if (cls == MapClass::CPUnital)
    return (m.applied_identity() - Matrix::Identity(m.dout, m.dout)).norm();
  if (cls == MapClass::CPSubunital)
    return std::max(0.0, lambda_max(m.applied_identity()) - 1.0);
  Matrix a = Matrix::Zero(m.din, m.din);
  for (const auto& w : m.ops) a += w.adjoint() * w;
  return (a - Matrix::Identity(m.din, m.din)).norm();
}

inline double conversion_residual(const KrausMap& m, const OperatorFamily& src,
                                  const OperatorFamily& tgt) {
  double r = 0.0;
  for (int t = 0; t < src.size(); ++t)
    r = std::max(r, (m.apply(src.ops[t]) - tgt.ops[t]).norm());
  return r;
}

// --- randomization witness ----------------------------------------------------

struct WitnessReport {
  bool violation = false;
  double lhs_lower = 0.0, lhs_upper = 0.0;  // sup_L1 side, plus error budgets
  double rhs_lower = 0.0, rhs_upper = 0.0;  // sup_L2 side
};

// Evaluates both sides of the randomization inequality
//   sup_L1 sum_t p_t (tr L1(L_t) X_t + e_t)  >=  sup_L2 sum_t p_t tr L2(M_t) X_t
// for maps of the query's class.  A reported violation is certified:
// lhs_upper < rhs_lower with certified bounds on both sides.
inline WitnessReport randomization_check(const ConversionQuery& query,
                                         const std::vector<int>& theta0,
                                         const std::vector<double>& p,
                                         const std::vector<Matrix>& x,
                                         const std::vector<double>& e) {
  if (theta0.size() != p.size() || theta0.size() != x.size())
    throw SizeMismatchError("randomization_check: subset/p/X size mismatch");
  double psum = 0.0;
  for (double pi : p) psum += pi;
  if (std::abs(psum - 1.0) > 1e-9)
    throw std::invalid_argument("randomization_check: p must sum to 1");
  for (const auto& xt : x)
    if (trace_norm(xt) > 1.0 + 1e-9)
      throw std::invalid_argument("randomization_check: ||X||_1 exceeds 1");
  const MapClass cls =
      (query.cls == MapClass::CPUnital) ? MapClass::CPUnital : MapClass::CPSubunital;
  const int d = query.source.dim, dp = query.target.dim;
  Matrix q1 = Matrix::Zero(dp * d, dp * d);
  Matrix q2 = Matrix::Zero(dp * dp, dp * dp);
  double ebudget = 0.0;
  for (size_t k = 0; k < theta0.size(); ++k) {
    const int t = theta0[k];
    q1 += p[k] * kron(x[k], query.source.ops[t].transpose());
    q2 += p[k] * kron(x[k], query.target.ops[t].transpose());
    if (!e.empty()) ebudget += p[k] * e[k];
  }
  WitnessReport rep;
  const LinearOptimum o1 = optimize_linear(q1, d, dp, cls);
  rep.lhs_lower = o1.value + ebudget;
  rep.lhs_upper = o1.upper + ebudget;
  // identity map is always in the Lambda_2 class (K -> K)
  double ident = 0.0;
  for (size_t k = 0; k < theta0.size(); ++k)
    ident += p[k] * hs_inner(x[k].adjoint(), query.target.ops[theta0[k]]);
  const LinearOptimum o2 = optimize_linear(q2, dp, dp, cls);
  rep.rhs_lower = std::max(ident, o2.value);
  rep.rhs_upper = o2.upper;
  rep.violation = rep.lhs_upper < rep.rhs_lower - 1e-9;
  return rep;
}

// Search for a randomization witness proving infeasibility.  Candidate X
// families come from operator-norm subgradients of the best approximate
// converter found by projected gradient, plus seeded random restarts; each
// candidate is verified with certified bounds before being accepted.
inline std::optional<RandomizationWitness> witness_search(
    const ConversionQuery& query) {
  if (query.cls != MapClass::CPUnital && query.cls != MapClass::CPSubunital)
    return std::nullopt;
  const int n = query.source.size();
  const int d = query.source.dim, dp = query.target.dim;
  std::vector<int> theta0(n);
  for (int t = 0; t < n; ++t) theta0[t] = t;

  // approximate best converter: minimize sum_t p_t ||Lambda(L_t)-M_t||_F^2
  SpectrahedronProjector proj(d, dp, query.cls);
  auto best_converter = [&](const std::vector<double>& p) {
    Matrix y = proj.project(Matrix::Identity(proj.p.vdim(), proj.p.vdim()));
    double lips = 0.0;
    for (int t = 0; t < n; ++t)
      lips += query.source.ops[t].squaredNorm();
    const double step = 0.5 / std::max(lips, 1e-12);
    for (int it = 0; it < 600; ++it) {
      Matrix j = y.topLeftCorner(dp * d, dp * d);
      Matrix g = Matrix::Zero(dp * d, dp * d);
      for (int t = 0; t < n; ++t) {
        const Matrix r = apply_choi(j, d, dp, query.source.ops[t]) -
                         query.target.ops[t];
        g += 2.0 * p[t] * kron(r, query.source.ops[t].transpose());
      }
      y = proj.project(y - step * proj.p.embed_j(g));
    }
    return y.topLeftCorner(dp * d, dp * d).eval();
  };

  auto verify = [&](const std::vector<double>& p,
                    const std::vector<Matrix>& x)
      -> std::optional<RandomizationWitness> {
    const WitnessReport rep = randomization_check(query, theta0, p, x, {});
    const double margin =
        std::max(query.tol, 1e-6 * std::max(1.0, rep.rhs_lower));
    if (rep.lhs_upper < rep.rhs_lower - margin) {
      RandomizationWitness w;
      w.theta0 = theta0;
      w.p = p;
      w.x = x;
      w.lhs_upper = rep.lhs_upper;
      w.rhs_lower = rep.rhs_lower;
      return w;
    }
    return std::nullopt;
  };

  // subgradient candidate from the residuals of the best converter
  std::vector<double> p(n, 1.0 / n);
  for (int round = 0; round < 3; ++round) {
    const Matrix j = best_converter(p);
    std::vector<Matrix> x(n);
    std::vector<double> rnorm(n);
    for (int t = 0; t < n; ++t) {
      const Matrix r =
          apply_choi(j, d, dp, query.source.ops[t]) - query.target.ops[t];
      const Spectrum s = eig_hermitian(r);
      const double top = s.eigenvalues(0),
                   bot = s.eigenvalues(s.eigenvalues.size() - 1);
      rnorm[t] = std::max(top, -bot);
      const bool use_top = top >= -bot;
      const Vector v = s.eigenvectors.col(use_top ? 0 : s.eigenvalues.size() - 1);
      x[t] = (use_top ? -1.0 : 1.0) * (v * v.adjoint());
    }
    if (auto w = verify(p, x)) return w;
    // reweight toward the worst-converted operator
    double tot = 0.0;
    for (int t = 0; t < n; ++t) tot += rnorm[t];
    if (tot <= 1e-14) break;
    for (int t = 0; t < n; ++t) p[t] = std::max(rnorm[t] / tot, 1e-3);
    double ps = 0.0;
    for (double v : p) ps += v;
    for (double& v : p) v /= ps;
  }

  // seeded random restarts in the trace-norm ball
  std::mt19937_64 rng(query.seed ^ 0x9e3779b97f4a7c15ull);
  for (int restart = 0; restart < query.witness_restarts; ++restart) {
    std::vector<double> pr(n);
    double ps = 0.0;
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int t = 0; t < n; ++t) ps += (pr[t] = u(rng));
    for (double& v : pr) v /= ps;
    std::vector<Matrix> x(n);
    for (int t = 0; t < n; ++t) {
      Matrix h = random_hermitian(dp, rng);
      const double tn = trace_norm(h);
      x[t] = h / std::max(tn, 1e-12);
    }
    if (auto w = verify(pr, x)) return w;
  }
  return std::nullopt;
}

// --- decide -------------------------------------------------------------------

inline Verdict decide(const ConversionQuery& query) {
  const OperatorFamily& src = query.source;
  const OperatorFamily& tgt = query.target;
  if (src.size() != tgt.size())
    throw SizeMismatchError("decide: families differ in |Theta|");
  if (src.dim < 1 || tgt.dim < 1)
    throw DimensionMismatchError("decide: dimensions must be >= 1");

  Verdict v;
  // identity shortcut
  if (src.dim == tgt.dim) {
    bool same = true;
    for (int t = 0; t < src.size(); ++t)
      if ((src.ops[t] - tgt.ops[t]).norm() >
          query.tol * std::max(1.0, src.ops[t].norm()))
        same = false;
    if (same) {
      Certificate c;
      c.map = identity_map(src.dim);
      c.choi = choi_of_kraus(c.map);
      c.conversion_residual = conversion_residual(c.map, src, tgt);
      c.side_residual = side_condition_residual(c.map, query.cls);
      v.status = Status::Feasible;
      v.certificate = std::move(c);
      return v;
    }
  }

  // quick necessary conditions
  if (auto viol = monotone_precheck(src, tgt, query.cls, 200, query.seed)) {
    std::ostringstream os;
    os << viol->condition << " violated: source value " << viol->lhs
       << " vs target value " << viol->rhs;
    v.status = Status::Infeasible;
    v.evidence = Evidence{viol->condition, os.str(), std::nullopt};
    return v;
  }

  // alternating-projection feasibility
  const FeasibilityProblem prob = build_feasibility(src, tgt, query.cls);
  const SolveResult sol = solve_feasibility(prob, query.max_iters, 1e-10);
  v.iterations = sol.iterations;
  v.residual = sol.residual;
  if (sol.converged) {
    Certificate c;
    c.choi = sol.y.topLeftCorner(prob.jdim, prob.jdim);
    c.map.din = src.dim;
    c.map.dout = tgt.dim;
    c.map.ops = extract_kraus(c.choi, src.dim, tgt.dim, query.tol);
    polish_side_condition(c.map, query.cls);
    c.choi = choi_of_kraus(c.map);
    c.conversion_residual = conversion_residual(c.map, src, tgt);
    c.side_residual = side_condition_residual(c.map, query.cls);
    if (c.conversion_residual <= query.tol &&
        c.side_residual <= query.tol) {
      v.status = Status::Feasible;
      v.certificate = std::move(c);
      return v;
    }
  }

  // witness-certified infeasibility
  if (auto w = witness_search(query)) {
    std::ostringstream os;
    os << "randomization witness: sup over converters of source payoff "
       << w->lhs_upper << " < target payoff " << w->rhs_lower;
    v.status = Status::Infeasible;
    v.evidence = Evidence{"randomization-witness", os.str(), std::move(w)};
    return v;
  }

  v.status = Status::Undecided;
  return v;
}

// --- monotone audit -------------------------------------------------------------

struct AuditReport {
  int samples = 0;
  int failures = 0;
  std::vector<std::string> failure_notes;
};

// Checks the Appendix-A monotone functional bounds on random Hermitian
// inputs against a certificate map.
inline AuditReport monotone_audit(const KrausMap& map, MapClass cls,
                                  int samples, std::uint64_t seed,
                                  double tol = 1e-8) {
  AuditReport rep;
  rep.samples = samples;
  std::mt19937_64 rng(seed);
  for (int s = 0; s < samples; ++s) {
    const Matrix c = random_hermitian(map.din, rng);
    const Matrix lc = map.apply(c);
    const Spectrum sc = eig_hermitian(c), slc = eig_hermitian(lc);
    const double cmax = sc.eigenvalues(0),
                 cmin = sc.eigenvalues(sc.eigenvalues.size() - 1);
    const double lmax = slc.eigenvalues(0),
                 lmin = slc.eigenvalues(slc.eigenvalues.size() - 1);
    auto fail = [&](const std::string& what) {
      ++rep.failures;
      if (rep.failure_notes.size() < 16) rep.failure_notes.push_back(what);
    };
    if (cls == MapClass::CPUnital) {
      if (lmax > cmax + tol) fail("lambda-max bound");
      if (lmin < cmin - tol) fail("lambda-min bound");
    } else if (cls == MapClass::CPSubunital) {
      if (cmax >= 0 && cmin <= 0) {
        if (lmax > cmax + tol) fail("lambda-max bound (mixed-sign input)");
        if (lmin < cmin - tol) fail("lambda-min bound (mixed-sign input)");
      }
      if (std::max(lmax, -lmin) > std::max(cmax, -cmin) + tol)
        fail("operator-norm bound");
    }
  }
  return rep;
}

}  // namespace obsconvert
