// Commutative (simultaneously diagonal) families: exact decision through
// (sub)stochastic-matrix feasibility solved by a rational phase-1 simplex,
// plus the sampled eigenvalue / norm / spread necessary-condition checks
// that apply to arbitrary families.
#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include "obsconvert/choi.hpp"

namespace obsconvert {

using Rational = boost::multiprecision::cpp_rational;

struct NegativeCoefficientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Diagonal coefficients of a commutative family in its joint eigenbasis.
struct ClassicalFamily {
  int dim = 0;                                // number of basis labels
  std::vector<RealVector> coeffs;             // coeffs[t](i) = l_{t,i} >= 0

  int size() const { return static_cast<int>(coeffs.size()); }
  void validate() const {
    for (const auto& c : coeffs) {
      if (c.size() != dim)
        throw DimensionMismatchError("ClassicalFamily: coefficient length");
      if (c.minCoeff() < 0)
        throw NegativeCoefficientError("ClassicalFamily: negative coefficient");
    }
  }
};

// P is indexed (target j, source i); rows are normalized over the source
// index: sum_i P(j,i) = 1 (stochastic) or <= 1 (substochastic).
struct StochasticCertificate {
  Eigen::MatrixXd p;
  bool substochastic = false;
};

struct ClassicalVerdict {
  Status status = Status::Undecided;
  std::optional<StochasticCertificate> certificate;
  std::optional<RealVector> farkas;  // dual infeasibility certificate
  std::string detail;
};

namespace detail {

// Exact phase-1 simplex for {Ax = b, x >= 0} over the rationals with
// Bland's rule.  Returns the solution, or a Farkas vector y with
// y^T A <= 0 and y^T b > 0 when infeasible.
struct SimplexResult {
  bool feasible = false;
  std::vector<Rational> x;
  std::vector<Rational> farkas;
};

inline SimplexResult phase1_simplex(std::vector<std::vector<Rational>> a,
                                    std::vector<Rational> b) {
  const int m = static_cast<int>(a.size());
  const int n = m ? static_cast<int>(a[0].size()) : 0;
  for (int i = 0; i < m; ++i)
    if (b[i] < 0) {
      b[i] = -b[i];
      for (auto& v : a[i]) v = -v;
    }
  // tableau columns: n originals + m artificials + rhs
  std::vector<std::vector<Rational>> t(m, std::vector<Rational>(n + m + 1));
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) t[i][j] = a[i][j];
    t[i][n + i] = 1;
    t[i][n + m] = b[i];
    basis[i] = n + i;
  }
  // reduced-cost row for minimizing the artificial sum
  std::vector<Rational> cost(n + m + 1);
  for (int j = 0; j <= n + m; ++j) {
    Rational s = 0;
    for (int i = 0; i < m; ++i) s += t[i][j];
    cost[j] = (j >= n && j < n + m) ? Rational(1) - s : -s;
  }
  auto pivot = [&](int pr, int pc) {
    const Rational piv = t[pr][pc];
    for (auto& v : t[pr]) v /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == pr || t[i][pc] == 0) continue;
      const Rational f = t[i][pc];
      for (int j = 0; j <= n + m; ++j) t[i][j] -= f * t[pr][j];
    }
    const Rational fc = cost[pc];
    if (fc != 0)
      for (int j = 0; j <= n + m; ++j) cost[j] -= fc * t[pr][j];
    basis[pr] = pc;
  };
  while (true) {
    int pc = -1;
    for (int j = 0; j < n + m; ++j)
      if (cost[j] < 0) {
        pc = j;
        break;
      }
    if (pc < 0) break;
    int pr = -1;
    for (int i = 0; i < m; ++i) {
      if (t[i][pc] <= 0) continue;
      if (pr < 0 || t[i][n + m] / t[i][pc] < t[pr][n + m] / t[pr][pc] ||
          (t[i][n + m] / t[i][pc] == t[pr][n + m] / t[pr][pc] &&
           basis[i] < basis[pr]))
        pr = i;
    }
    if (pr < 0) break;  // unbounded cannot happen in phase 1
    pivot(pr, pc);
  }
  SimplexResult res;
  const Rational obj = -cost[n + m];
  if (obj == 0) {
    // drive any residual artificials out of the basis (degenerate rows)
    for (int i = 0; i < m; ++i) {
      if (basis[i] < n) continue;
      int pc = -1;
      for (int j = 0; j < n; ++j)
        if (t[i][j] != 0) {
          pc = j;
          break;
        }
      if (pc >= 0) pivot(i, pc);
    }
    res.feasible = true;
    res.x.assign(n, Rational(0));
    for (int i = 0; i < m; ++i)
      if (basis[i] < n) res.x[basis[i]] = t[i][n + m];
    return res;
  }
  // y_i = c_B^T (B^{-1})_{.,i}; artificial column i of the final tableau
  // holds B^{-1} e_i and c_B is 1 exactly on artificial basic rows.
  res.farkas.assign(m, Rational(0));
  for (int r = 0; r < m; ++r) {
    if (basis[r] < n || basis[r] >= n + m) continue;
    for (int i = 0; i < m; ++i) res.farkas[i] += t[r][n + i];
  }
  return res;
}

inline Rational to_rational(double v) {
  return static_cast<Rational>(v);  // exact binary-rational conversion
}

}  // namespace detail

// Decides existence of a positive (sub)unital map between commutative
// families: m_{t,j} = sum_i P(j,i) l_{t,i} with entrywise-nonnegative P and
// row normalization sum_i P(j,i) = 1 (unital) or <= 1 (subunital).
inline ClassicalVerdict classical_decide(const ClassicalFamily& l,
                                         const ClassicalFamily& m,
                                         MapClass cls) {
  if (cls != MapClass::CPUnital && cls != MapClass::CPSubunital)
    throw std::invalid_argument("classical_decide: class must be (sub)unital");
  if (l.size() != m.size())
    throw SizeMismatchError("classical_decide: families differ in |Theta|");
  l.validate();
  m.validate();
  const int d = l.dim, dp = m.dim, nth = l.size();
  const bool sub = (cls == MapClass::CPSubunital);
  const int nvars = dp * d + (sub ? dp : 0);  // P entries + slack per row
  std::vector<std::vector<Rational>> a;
  std::vector<Rational> b;
  auto var = [&](int j, int i) { return j * d + i; };
  for (int t = 0; t < nth; ++t)
    for (int j = 0; j < dp; ++j) {
      std::vector<Rational> row(nvars, Rational(0));
      for (int i = 0; i < d; ++i)
        row[var(j, i)] = detail::to_rational(l.coeffs[t](i));
      a.push_back(std::move(row));
      b.push_back(detail::to_rational(m.coeffs[t](j)));
    }
  for (int j = 0; j < dp; ++j) {
    std::vector<Rational> row(nvars, Rational(0));
    for (int i = 0; i < d; ++i) row[var(j, i)] = 1;
    if (sub) row[dp * d + j] = 1;
    a.push_back(std::move(row));
    b.push_back(Rational(1));
  }
  const auto res = detail::phase1_simplex(std::move(a), std::move(b));
  ClassicalVerdict v;
  if (res.feasible) {
    StochasticCertificate cert;
    cert.substochastic = sub;
    cert.p.resize(dp, d);
    for (int j = 0; j < dp; ++j)
      for (int i = 0; i < d; ++i)
        cert.p(j, i) = static_cast<double>(res.x[var(j, i)]);
    v.status = Status::Feasible;
    v.certificate = std::move(cert);
    v.detail = "stochastic-matrix feasibility (exact LP)";
  } else {
    v.status = Status::Infeasible;
    RealVector y(res.farkas.size());
    for (size_t i = 0; i < res.farkas.size(); ++i)
      y(i) = static_cast<double>(res.farkas[i]);
    v.farkas = y;
    v.detail = "exact LP infeasible (Farkas certificate attached)";
  }
  return v;
}

// Diagonal coefficients of a commuting operator family in a joint
// eigenbasis (found from a random real combination).
inline std::optional<ClassicalFamily> diagonalize_commuting(
    const OperatorFamily& fam, std::uint64_t seed = 1, double tol = 1e-8) {
  if (!classify(fam).commutative) return std::nullopt;
  std::mt19937_64 rng(seed);
  double scale = 1.0;
  for (const auto& op : fam.ops) scale = std::max(scale, op.norm());
  std::normal_distribution<double> g;
  // a random combination almost surely separates the joint eigenspaces;
  // retry on the measure-zero coincidences
  for (int attempt = 0; attempt < 5; ++attempt) {
    Matrix comb = Matrix::Zero(fam.dim, fam.dim);
    for (const auto& op : fam.ops) comb += g(rng) * op;
    const Spectrum s = eig_hermitian(comb);
    ClassicalFamily out;
    out.dim = fam.dim;
    bool ok = true;
    for (const auto& op : fam.ops) {
      const Matrix rot = s.eigenvectors.adjoint() * op * s.eigenvectors;
      RealVector diag(fam.dim);
      for (int i = 0; i < fam.dim; ++i)
        diag(i) = std::max(rot(i, i).real(), 0.0);
      if ((rot - Matrix(diag.cast<cplx>().asDiagonal())).norm() > tol * scale) {
        ok = false;
        break;
      }
      out.coeffs.push_back(diag);
    }
    if (ok) return out;
  }
  return std::nullopt;
}

// --- sampled necessary conditions --------------------------------------------

struct SampleViolation {
  RealVector x;
  std::string condition;
  double lhs = 0.0, rhs = 0.0;
};

struct SampleReport {
  int samples = 0;
  std::vector<SampleViolation> violations;
  bool clean() const { return violations.empty(); }
};

namespace detail {
inline std::vector<RealVector> sample_directions(int n, int samples,
                                                 std::uint64_t seed) {
  std::vector<RealVector> dirs;
  for (int t = 0; t < n; ++t) {
    dirs.push_back(RealVector::Unit(n, t));
    dirs.push_back(-RealVector::Unit(n, t));
  }
  dirs.push_back(RealVector::Ones(n).normalized());
  dirs.push_back(-RealVector::Ones(n).normalized());
  std::mt19937_64 rng(seed);
  for (int s = 0; s < samples; ++s) dirs.push_back(random_sphere(n, rng));
  return dirs;
}
}  // namespace detail

// Extreme-eigenvalue monotonicity along sampled directions; for commutative
// families a violation proves infeasibility, otherwise it is evidence from
// the general necessary conditions.
inline SampleReport lambda_condition_sample(const OperatorFamily& l,
                                            const OperatorFamily& m,
                                            MapClass cls, int samples,
                                            std::uint64_t seed,
                                            double tol = 1e-8) {
  SampleReport rep;
  double scale = 1.0;
  for (const auto& op : l.ops) scale = std::max(scale, op.norm());
  for (const auto& op : m.ops) scale = std::max(scale, op.norm());
  const double eps = tol * scale;
  for (const auto& x : detail::sample_directions(l.size(), samples, seed)) {
    ++rep.samples;
    Matrix cl = Matrix::Zero(l.dim, l.dim), cm = Matrix::Zero(m.dim, m.dim);
    for (int t = 0; t < l.size(); ++t) {
      cl += x(t) * l.ops[t];
      cm += x(t) * m.ops[t];
    }
    const Spectrum sl = eig_hermitian(cl), sm = eig_hermitian(cm);
    const double lmaxL = sl.eigenvalues(0),
                 lminL = sl.eigenvalues(sl.eigenvalues.size() - 1);
    const double lmaxM = sm.eigenvalues(0),
                 lminM = sm.eigenvalues(sm.eigenvalues.size() - 1);
    if (cls == MapClass::CPUnital) {
      if (lmaxL < lmaxM - eps)
        rep.violations.push_back({x, "lambda-max", lmaxL, lmaxM});
      if (lminL > lminM + eps)
        rep.violations.push_back({x, "lambda-min", lminL, lminM});
    } else {
      if (std::max(lmaxL, 0.0) < std::max(lmaxM, 0.0) - eps)
        rep.violations.push_back({x, "lambda-max-clamped",
                                  std::max(lmaxL, 0.0), std::max(lmaxM, 0.0)});
      if (std::min(lminL, 0.0) > std::min(lminM, 0.0) + eps)
        rep.violations.push_back({x, "lambda-min-clamped",
                                  std::min(lminL, 0.0), std::min(lminM, 0.0)});
    }
  }
  return rep;
}

// Operator-norm monotonicity plus both reading directions of the spectral
// spread comparison, reported as separate conditions.
inline SampleReport norm_spread_conditions(const OperatorFamily& l,
                                           const OperatorFamily& m,
                                           int samples, std::uint64_t seed,
                                           double tol = 1e-8) {
  SampleReport rep;
  double scale = 1.0;
  for (const auto& op : l.ops) scale = std::max(scale, op.norm());
  for (const auto& op : m.ops) scale = std::max(scale, op.norm());
  const double eps = tol * scale;
  for (const auto& x : detail::sample_directions(l.size(), samples, seed)) {
    ++rep.samples;
    Matrix cl = Matrix::Zero(l.dim, l.dim), cm = Matrix::Zero(m.dim, m.dim);
    for (int t = 0; t < l.size(); ++t) {
      cl += x(t) * l.ops[t];
      cm += x(t) * m.ops[t];
    }
    const double nl = operator_norm(cl), nm = operator_norm(cm);
    const double spl = spread(cl), spm = spread(cm);
    if (nl < nm - eps)
      rep.violations.push_back({x, "operator-norm", nl, nm});
    if (spl < spm - eps)
      rep.violations.push_back({x, "spread-source-dominates", spl, spm});
    if (spm < spl - eps)
      rep.violations.push_back({x, "spread-target-dominates", spm, spl});
  }
  return rep;
}

}  // namespace obsconvert
