// Closed-form convertibility criteria for rank-1 operator families: the
// state-conversion Gram criterion, two-way (unitary-equivalence) tests,
// the unital / subunital inverse-Gram criteria, the two-element closed
// form, the subset-determinant necessary condition, and the equal-norm
// criterion.
#pragma once

#include "obsconvert/qubit.hpp"

namespace obsconvert {

struct SubsetBlowupError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CriterionReport {
  Status verdict = Status::Undecided;
  std::string criterion;
  std::optional<Matrix> h;  // PSD unit-diagonal witness when Feasible
  std::string detail;
};

namespace detail {

inline CriterionReport report(Status s, std::string name, std::string detail,
                              std::optional<Matrix> h = std::nullopt) {
  return CriterionReport{s, std::move(name), std::move(h), std::move(detail)};
}

// PSD completion with unit diagonal: entries marked in `forced` are fixed
// to the given values, the rest are free.  Alternating Dykstra projections
// between the PSD cone and the affine set; nullopt if not converged.
inline std::optional<Matrix> complete_psd_unit_diag(
    const Matrix& forced_vals, const std::vector<std::vector<bool>>& forced,
    int iters = 10000, double tol = 1e-9) {
  const int n = static_cast<int>(forced_vals.rows());
  auto affine = [&](Matrix x) {
    for (int i = 0; i < n; ++i) {
      x(i, i) = 1.0;
      for (int j = 0; j < n; ++j)
        if (j != i && forced[i][j]) x(i, j) = forced_vals(i, j);
    }
    return x;
  };
  Matrix y = affine(Matrix::Identity(n, n));
  Matrix inc = Matrix::Zero(n, n);
  for (int it = 0; it < iters; ++it) {
    Matrix z = project_psd(y + inc);
    inc = y + inc - z;
    y = affine(z);
    if ((y - z).norm() <= tol) {
      // final polish: tiny eigenvalue lift keeps PSD after re-fixing entries
      return affine(z);
    }
  }
  return std::nullopt;
}

// Checks whether phases d_t exist with Gv = D Gu D^dag, D = diag(d); used
// to test unitary equivalence of families defined up to per-vector phase.
inline std::optional<std::vector<cplx>> phase_match(const Matrix& gu,
                                                    const Matrix& gv,
                                                    double tol) {
  const int n = static_cast<int>(gu.rows());
  const double scale = std::max({gu.norm(), gv.norm(), 1e-300});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(std::abs(gu(i, j)) - std::abs(gv(i, j))) > tol * scale)
        return std::nullopt;
  // spanning forest over the nonzero pattern, potentials phi with
  // arg(gv/gu)_{ij} = phi_i - phi_j
  std::vector<double> phi(n, 0.0);
  std::vector<int> comp(n, -1);
  const double zero_cut = tol * scale;
  for (int root = 0; root < n; ++root) {
    if (comp[root] >= 0) continue;
    comp[root] = root;
    std::vector<int> stack{root};
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      for (int j = 0; j < n; ++j) {
        if (comp[j] >= 0 || std::abs(gu(i, j)) <= zero_cut) continue;
        comp[j] = root;
        phi[j] = phi[i] - std::arg(gv(i, j) / gu(i, j));
        stack.push_back(j);
      }
    }
  }
  // verify every nonzero edge
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (std::abs(gu(i, j)) <= zero_cut) continue;
      const cplx d = std::polar(1.0, phi[i]) * std::conj(std::polar(1.0, phi[j]));
      if (std::abs(d * gu(i, j) - gv(i, j)) > 10.0 * tol * scale)
        return std::nullopt;
    }
  std::vector<cplx> d(n);
  for (int i = 0; i < n; ++i) d[i] = std::polar(1.0, phi[i]);
  return d;
}

// Entrywise-ratio construction shared by the state criterion (H such that
// A = B o H) with unit diagonal; free where B vanishes.
struct RatioResult {
  bool zero_pattern_ok = true;
  Matrix ratios;
  std::vector<std::vector<bool>> forced;
};

inline RatioResult forced_ratios(const Matrix& a, const Matrix& b,
                                 double tol) {
  const int n = static_cast<int>(a.rows());
  RatioResult r;
  r.ratios = Matrix::Zero(n, n);
  r.forced.assign(n, std::vector<bool>(n, false));
  const double scale = std::max({a.norm(), b.norm(), 1e-300});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (std::abs(b(i, j)) > tol * scale) {
        r.ratios(i, j) = a(i, j) / b(i, j);
        r.forced[i][j] = true;
      } else if (std::abs(a(i, j)) > tol * scale) {
        r.zero_pattern_ok = false;
      }
    }
  return r;
}

inline bool psd_unit_diag(const Matrix& h, double tol = 1e-9) {
  for (Eigen::Index i = 0; i < h.rows(); ++i)
    if (std::abs(h(i, i) - 1.0) > tol) return false;
  return psd_check(h, tol * std::max(1.0, h.norm()));
}

}  // namespace detail

// CPTP state-conversion criterion: a trace-preserving CP map with
// |u_t><u_t| -> |v_t><v_t| exists iff some PSD unit-diagonal H satisfies
// G_U = G_V o H.  Requires both families linearly independent.
inline CriterionReport cjw_state_criterion(const VectorFamily& u,
                                           const VectorFamily& v,
                                           double tol = 1e-8) {
  static const char* kName = "cjw-gram-hadamard";
  if (u.size() != v.size())
    throw SizeMismatchError("cjw_state_criterion: family sizes differ");
  if (!linearly_independent(u) || !linearly_independent(v))
    return detail::report(Status::NotApplicable, kName,
                          "requires linearly independent families");
  const Matrix gu = gram(u), gv = gram(v);
  const double scale = std::max({gu.norm(), gv.norm(), 1e-300});
  for (int t = 0; t < u.size(); ++t)
    if (std::abs(gu(t, t) - gv(t, t)) > tol * scale)
      return detail::report(Status::Infeasible, kName,
                            "diagonal (norm) mismatch forces H_tt != 1");
  const auto rr = detail::forced_ratios(gu, gv, tol);
  if (!rr.zero_pattern_ok)
    return detail::report(Status::Infeasible, kName,
                          "zero-pattern mismatch between Gram matrices");
  bool all_forced = true;
  for (const auto& row : rr.forced)
    for (bool f : row) all_forced = all_forced && f;
  if (all_forced) {
    Matrix h = rr.ratios;
    for (int i = 0; i < u.size(); ++i) h(i, i) = 1.0;
    if (detail::psd_unit_diag(h))
      return detail::report(Status::Feasible, kName, "forced ratios are PSD",
                            h);
    return detail::report(Status::Infeasible, kName,
                          "forced ratio matrix is not PSD");
  }
  if (auto h = detail::complete_psd_unit_diag(rr.ratios, rr.forced))
    return detail::report(Status::Feasible, kName,
                          "PSD completion of forced ratios", *h);
  return detail::report(Status::Undecided, kName,
                        "PSD completion did not converge");
}

// Two-way state conversion: feasible in both directions iff the families
// are unitarily equivalent up to per-vector phases.
inline CriterionReport cjw_two_way(const VectorFamily& u,
                                   const VectorFamily& v, double tol = 1e-8) {
  static const char* kName = "cjw-two-way";
  if (u.size() != v.size())
    throw SizeMismatchError("cjw_two_way: family sizes differ");
  if (!linearly_independent(u) || !linearly_independent(v))
    return detail::report(Status::NotApplicable, kName,
                          "requires linearly independent families");
  if (detail::phase_match(gram(u), gram(v), tol))
    return detail::report(Status::Feasible, kName,
                          "families unitarily equivalent up to phases",
                          Matrix::Ones(u.size(), u.size()));
  return detail::report(Status::Infeasible, kName,
                        "Gram matrices not phase-equivalent");
}

// Unital criterion for independent spanning rank-1 families:
// feasible iff some PSD unit-diagonal H satisfies Ginv_V = H o Ginv_U.
inline CriterionReport unital_rank1(const VectorFamily& u,
                                    const VectorFamily& v, double tol = 1e-8) {
  static const char* kName = "unital-inverse-gram";
  if (u.size() != v.size())
    throw SizeMismatchError("unital_rank1: family sizes differ");
  if (!linearly_independent(v) || v.size() != v.dim)
    return detail::report(Status::NotApplicable, kName,
                          "target family must be an independent spanning set");
  if (!linearly_independent(u))
    return detail::report(Status::Infeasible, kName,
                          "source dependent while target independent");
  if (u.size() != u.dim)
    return detail::report(Status::NotApplicable, kName,
                          "source family must span its space");
  const auto giu = gram_inverse(gram(u)), giv = gram_inverse(gram(v));
  if (!giu || !giv)
    return detail::report(Status::NotApplicable, kName,
                          "Gram matrix numerically singular");
  const double scale = std::max({giu->norm(), giv->norm(), 1e-300});
  for (int t = 0; t < u.size(); ++t)
    if (std::abs((*giu)(t, t) - (*giv)(t, t)) > tol * scale)
      return detail::report(Status::Infeasible, kName,
                            "inverse-Gram diagonal mismatch");
  const auto rr = detail::forced_ratios(*giv, *giu, tol);
  if (!rr.zero_pattern_ok)
    return detail::report(Status::Infeasible, kName,
                          "zero-pattern mismatch between inverse Grams");
  bool all_forced = true;
  for (const auto& row : rr.forced)
    for (bool f : row) all_forced = all_forced && f;
  if (all_forced) {
    Matrix h = rr.ratios;
    for (int i = 0; i < u.size(); ++i) h(i, i) = 1.0;
    if (detail::psd_unit_diag(h))
      return detail::report(Status::Feasible, kName,
                            "forced inverse-Gram ratios are PSD", h);
    return detail::report(Status::Infeasible, kName,
                          "forced ratio matrix is not PSD");
  }
  if (auto h = detail::complete_psd_unit_diag(rr.ratios, rr.forced))
    return detail::report(Status::Feasible, kName,
                          "PSD completion of forced ratios", *h);
  return detail::report(Status::Undecided, kName,
                        "PSD completion did not converge");
}

// Two-element subunital closed form: with a_F := <f1|f2>/det G_F and
// b_F,t := ||f_t||^2/det G_F, feasibility is
//   b_{V,2} - b_{U,2} >= 0, b_{V,1} - b_{U,1} >= 0, and
//   max(0, |a_V| - |a_U|)^2 <= (b_{V,2} - b_{U,2})(b_{V,1} - b_{U,1}).
namespace detail {
inline CriterionReport two_element_subunital(const VectorFamily& u,
                                             const VectorFamily& v,
                                             const char* name, double tol) {
  const Matrix gu = gram(u), gv = gram(v);
  const double du = gu.determinant().real(), dv = gv.determinant().real();
  const double a1 = gv(1, 1).real() / dv - gu(1, 1).real() / du;  // uses f_2
  const double a2 = gv(0, 0).real() / dv - gu(0, 0).real() / du;  // uses f_1
  const cplx av = gv(0, 1) / dv, au = gu(0, 1) / du;
  const double scale =
      std::max({std::abs(a1), std::abs(a2), std::abs(av), std::abs(au), 1.0});
  const double eps = tol * scale;
  const double rem = std::max(0.0, std::abs(av) - std::abs(au));
  if (a1 >= -eps && a2 >= -eps && rem * rem <= a1 * a2 + eps * scale) {
    // eta minimizing |a_V - eta a_U| over |eta| <= 1 yields the witness H
    cplx eta;
    if (std::abs(au) <= 1e-300)
      eta = 0.0;
    else if (std::abs(av) <= std::abs(au))
      eta = av / au;
    else
      eta = (av / std::abs(av)) * (std::abs(au) / au);
    Matrix h(2, 2);
    h << 1.0, eta, std::conj(eta), 1.0;
    return report(Status::Feasible, name, "two-element closed form", h);
  }
  return report(Status::Infeasible, name, "two-element closed form violated");
}
}  // namespace detail

// Subunital criterion for rank-1 families with independent targets:
// feasible iff some PSD unit-diagonal H satisfies Ginv_V >= H o Ginv_U.
// |Theta| = 2 is decided in closed form; larger families delegate to the
// Choi engine and re-derive H from the certificate's Kraus operators.
inline CriterionReport subunital_rank1(const VectorFamily& u,
                                       const VectorFamily& v,
                                       double tol = 1e-8,
                                       std::uint64_t seed = 0) {
  static const char* kName = "subunital-inverse-gram";
  if (u.size() != v.size())
    throw SizeMismatchError("subunital_rank1: family sizes differ");
  if (!linearly_independent(v) || !linearly_independent(u))
    return detail::report(Status::NotApplicable, kName,
                          "criterion requires independent families");
  if (u.size() == 2)
    return detail::two_element_subunital(u, v, kName, tol);

  ConversionQuery q;
  q.source = family_from_vectors(u);
  q.target = family_from_vectors(v);
  q.cls = MapClass::CPSubunital;
  q.seed = seed;
  const Verdict verdict = decide(q);
  if (verdict.status == Status::Infeasible)
    return detail::report(Status::Infeasible, kName,
                          verdict.evidence ? verdict.evidence->description
                                           : "engine infeasibility");
  if (verdict.status != Status::Feasible || !verdict.certificate)
    return detail::report(Status::Undecided, kName, "engine undecided");
  // H_{tt'} = sum_i alpha_{t,i} conj(alpha_{t',i}),
  // alpha_{t,i} = <v_t| W_i |u_t> / ||v_t||^2
  const int n = u.size();
  Matrix h = Matrix::Zero(n, n);
  for (const auto& w : verdict.certificate->map.ops) {
    Vector alpha(n);
    for (int t = 0; t < n; ++t)
      alpha(t) = v.vectors[t].dot(w * u.vectors[t]) /
                 v.vectors[t].squaredNorm();
    h += alpha * alpha.adjoint();
  }
  // numerical cleanup: exact unit diagonal
  for (int t = 0; t < n; ++t) {
    const double dt = std::sqrt(std::max(h(t, t).real(), 1e-300));
    for (int s = 0; s < n; ++s) {
      h(t, s) /= dt;
      h(s, t) /= dt;
    }
  }
  const auto giu = gram_inverse(gram(u)), giv = gram_inverse(gram(v));
  if (giu && giv &&
      psd_check(*giv - hadamard(h, *giu),
                100.0 * tol * std::max(giu->norm(), giv->norm())) &&
      detail::psd_unit_diag(h, 1e-6))
    return detail::report(Status::Feasible, kName,
                          "engine certificate verifies the inequality", h);
  return detail::report(Status::Feasible, kName,
                        "engine certificate (H reconstruction inexact)");
}

// Necessary determinant condition for the unital criterion: every subset
// S must satisfy det [G_U]_S >= det [G_V]_S.
inline CriterionReport det_necessary(const VectorFamily& u,
                                     const VectorFamily& v,
                                     double tol = 1e-9) {
  static const char* kName = "subset-determinant";
  if (u.size() != v.size())
    throw SizeMismatchError("det_necessary: family sizes differ");
  const int n = u.size();
  if (n > 12)
    throw SubsetBlowupError("det_necessary: |Theta| > 12");
  const Matrix gu = gram(u), gv = gram(v);
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> idx;
    for (int t = 0; t < n; ++t)
      if (mask & (1u << t)) idx.push_back(t);
    const int k = static_cast<int>(idx.size());
    Matrix su(k, k), sv(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        su(i, j) = gu(idx[i], idx[j]);
        sv(i, j) = gv(idx[i], idx[j]);
      }
    const double du = su.determinant().real(), dv = sv.determinant().real();
    if (du < dv - tol) {
      std::ostringstream os;
      os << "subset {";
      for (size_t i = 0; i < idx.size(); ++i)
        os << (i ? "," : "") << idx[i];
      os << "} determinant " << du << " < " << dv;
      return detail::report(Status::Infeasible, kName, os.str());
    }
  }
  return detail::report(Status::Undecided, kName,
                        "all subset determinants consistent (necessary only)");
}

// Equal-norm families: subunital conversion exists iff the families are
// unitarily equivalent up to per-vector phases; exact decision.
inline CriterionReport equi_norm_criterion(const VectorFamily& u,
                                           const VectorFamily& v,
                                           double tol = 1e-8) {
  static const char* kName = "equal-norm-unitary";
  if (u.size() != v.size())
    throw SizeMismatchError("equi_norm_criterion: family sizes differ");
  double scale = 1.0;
  for (int t = 0; t < u.size(); ++t)
    scale = std::max({scale, u.vectors[t].norm(), v.vectors[t].norm()});
  for (int t = 0; t < u.size(); ++t)
    if (std::abs(u.vectors[t].norm() - v.vectors[t].norm()) > tol * scale)
      return detail::report(Status::NotApplicable, kName,
                            "vector norms differ");
  if (detail::phase_match(gram(u), gram(v), tol))
    return detail::report(Status::Feasible, kName,
                          "families unitarily equivalent up to phases",
                          Matrix::Ones(u.size(), u.size()));
  return detail::report(Status::Infeasible, kName,
                        "Gram matrices not phase-equivalent");
}

}  // namespace obsconvert
