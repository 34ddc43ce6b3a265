// Finite-dimensional *-algebra machinery: Hilbert-Schmidt-orthonormal
// basis of the algebra generated by a family, block decomposition into
// full matrix algebras tensor identity, multiplicative-domain membership,
// the Schwarz-inequality audit, and the projector-shaped family decisions.
#pragma once

#include "obsconvert/rank1.hpp"

namespace obsconvert {

struct AlgebraBlock {
  int n = 0;  // irreducible block size
  int d = 0;  // multiplicity
  Matrix isometry;  // ambient_dim x (n*d), column index a*d + j
};

struct StarAlgebra {
  int ambient_dim = 0;
  std::vector<Matrix> basis;  // HS-orthonormal, spans the algebra
  std::vector<AlgebraBlock> blocks;
  Matrix support;  // orthonormal columns spanning the support space

  int algebra_dim() const { return static_cast<int>(basis.size()); }
  int support_dim() const { return static_cast<int>(support.cols()); }
  // coordinates of a family element inside block k: the n x n matrix A
  // with isometry^dag X isometry = A (x) I_d
  Matrix compress(int k, const Matrix& x) const {
    const auto& b = blocks[k];
    const Matrix full = b.isometry.adjoint() * x * b.isometry;
    Matrix a = Matrix::Zero(b.n, b.n);
    for (int i = 0; i < b.n; ++i)
      for (int j = 0; j < b.n; ++j) {
        cplx s = 0;
        for (int t = 0; t < b.d; ++t) s += full(i * b.d + t, j * b.d + t);
        a(i, j) = s / double(b.d);
      }
    return a;
  }
};

namespace detail {

// Gram-Schmidt append under the HS inner product; returns false if the
// candidate lies in the current span.
inline bool hs_append(std::vector<Matrix>& basis, Matrix cand,
                      double tol = 1e-10) {
  for (const auto& b : basis) cand -= hs_inner_c(b, cand) * b;
  // re-orthogonalize once for numerical stability
  for (const auto& b : basis) cand -= hs_inner_c(b, cand) * b;
  const double n = cand.norm();
  if (n <= tol) return false;
  basis.push_back(cand / n);
  return true;
}

// Orthonormal basis of {X : X G_r = G_r X for all generators G_r},
// represented on the support coordinates.
inline std::vector<Matrix> commutant_basis(const std::vector<Matrix>& gens,
                                           int s) {
  const int k = static_cast<int>(gens.size());
  Matrix stacked(k * s * s, s * s);
  const Matrix id = Matrix::Identity(s, s);
  for (int r = 0; r < k; ++r)
    stacked.middleRows(r * s * s, s * s) =
        kron(gens[r].transpose(), id) - kron(id, gens[r]);
  Eigen::JacobiSVD<Matrix> svd(stacked, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cut = 1e-9 * std::max(sv.size() ? sv(0) : 1.0, 1.0);
  std::vector<Matrix> out;
  for (Eigen::Index c = sv.size() - 1; c >= 0; --c) {
    if (sv(c) > cut) break;
    Vector v = svd.matrixV().col(c);
    Matrix x(s, s);
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j) x(i, j) = v(j * s + i);  // vec by columns
    out.push_back(x);
  }
  return out;
}

inline Matrix random_commutant_hermitian(const std::vector<Matrix>& cbasis,
                                         std::mt19937_64& rng) {
  const int s = static_cast<int>(cbasis.front().rows());
  Matrix n = Matrix::Zero(s, s);
  std::normal_distribution<double> g;
  for (const auto& b : cbasis) n += cplx(g(rng), g(rng)) * b;
  return ((n + n.adjoint()) / 2.0).eval();
}

}  // namespace detail

// *-algebra generated by the family (no identity adjoined) with its block
// decomposition.  Randomized decomposition with fixed seed; validation
// retries with fresh randomness up to 5 rounds.
inline StarAlgebra generate_algebra(const OperatorFamily& fam,
                                    std::uint64_t seed = 7,
                                    double tol = 1e-8) {
  if (fam.size() == 0)
    throw SizeMismatchError("generate_algebra: empty family");
  StarAlgebra alg;
  alg.ambient_dim = fam.dim;
  double scale = 0.0;
  for (const auto& op : fam.ops) scale = std::max(scale, op.norm());
  if (scale <= 0.0)
    throw NotPsdError("generate_algebra: family is identically zero");
  // support of the family
  Matrix total = Matrix::Zero(fam.dim, fam.dim);
  for (const auto& op : fam.ops) total += op / scale;
  const Spectrum st = eig_hermitian(total);
  int s = 0;
  while (s < fam.dim && st.eigenvalues(s) > 1e-10 * st.eigenvalues(0)) ++s;
  alg.support = st.eigenvectors.leftCols(s);

  // generators restricted to support coordinates
  std::vector<Matrix> gens;
  for (const auto& op : fam.ops)
    gens.push_back(alg.support.adjoint() * (op / scale) * alg.support);

  // closure under products, degree by degree, capped by s^2
  std::vector<Matrix> basis;
  for (const auto& g : gens) detail::hs_append(basis, g);
  size_t frontier_begin = 0;
  while (static_cast<int>(basis.size()) < s * s) {
    const size_t frontier_end = basis.size();
    bool grew = false;
    for (size_t i = 0; i < frontier_end; ++i)
      for (size_t j = (i < frontier_begin ? frontier_begin : 0);
           j < frontier_end; ++j) {
        if (detail::hs_append(basis, basis[i] * basis[j])) grew = true;
        if (static_cast<int>(basis.size()) >= s * s) break;
      }
    frontier_begin = frontier_end;
    if (!grew) break;
  }
  for (const auto& b : basis)
    alg.basis.push_back(alg.support * b * alg.support.adjoint());

  const auto cbasis = detail::commutant_basis(gens, s);
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 5; ++attempt) {
    const Matrix n1 = detail::random_commutant_hermitian(cbasis, rng);
    const Matrix n2 = detail::random_commutant_hermitian(cbasis, rng);
    const Spectrum sn = eig_hermitian(n1);
    const double gap = 1e-7 * std::max(1.0, sn.eigenvalues.cwiseAbs().maxCoeff());
    // group eigenvalues into eigenspaces
    std::vector<std::pair<int, int>> spans;  // [begin, end) column ranges
    int b = 0;
    for (int i = 1; i <= s; ++i)
      if (i == s || std::abs(sn.eigenvalues(i) - sn.eigenvalues(i - 1)) > gap) {
        spans.emplace_back(b, i);
        b = i;
      }
    const int m = static_cast<int>(spans.size());
    std::vector<Matrix> esp(m);
    for (int i = 0; i < m; ++i)
      esp[i] = sn.eigenvectors.middleCols(spans[i].first,
                                          spans[i].second - spans[i].first);
    // link eigenspaces through a second commutant element
    std::vector<int> parent(m);
    for (int i = 0; i < m; ++i) parent[i] = i;
    std::function<int(int)> find = [&](int i) {
      return parent[i] == i ? i : parent[i] = find(parent[i]);
    };
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j)
        if ((esp[i].adjoint() * n2 * esp[j]).norm() > 1e-7)
          parent[find(i)] = find(j);
    std::vector<std::vector<int>> classes;
    for (int root = 0; root < m; ++root) {
      if (find(root) != root) continue;
      std::vector<int> cls;
      for (int i = 0; i < m; ++i)
        if (find(i) == root) cls.push_back(i);
      classes.push_back(std::move(cls));
    }
    // assemble blocks with intertwiners aligned to the first eigenspace
    std::vector<AlgebraBlock> blocks;
    bool valid = true;
    int total_nd = 0;
    for (const auto& cls : classes) {
      const int n = static_cast<int>(esp[cls[0]].cols());
      const int d = static_cast<int>(cls.size());
      for (int idx : cls)
        if (esp[idx].cols() != n) valid = false;
      if (!valid) break;
      AlgebraBlock blk;
      blk.n = n;
      blk.d = d;
      blk.isometry = Matrix::Zero(fam.dim, n * d);
      for (int j = 0; j < d; ++j) {
        Matrix u;
        if (j == 0) {
          u = Matrix::Identity(n, n);
        } else {
          const Matrix t = esp[cls[j]].adjoint() * n2 * esp[cls[0]];
          Eigen::JacobiSVD<Matrix> svd(
              t, Eigen::ComputeFullU | Eigen::ComputeFullV);
          if (svd.singularValues()(n - 1) < 1e-9) {
            valid = false;
            break;
          }
          u = svd.matrixU() * svd.matrixV().adjoint();  // polar unitary
        }
        const Matrix cols = alg.support * (esp[cls[j]] * u);
        for (int a = 0; a < n; ++a)
          blk.isometry.col(a * d + j) = cols.col(a);
      }
      if (!valid) break;
      total_nd += n * d;
      blocks.push_back(std::move(blk));
    }
    if (valid && total_nd != s) valid = false;
    // validation: block projectors commute with the generators, and the
    // compressed coordinates reproduce the generators
    if (valid) {
      alg.blocks = blocks;
      for (const auto& blk : alg.blocks) {
        const Matrix p = blk.isometry * blk.isometry.adjoint();
        for (const auto& op : fam.ops)
          if ((p * op - op * p).norm() > tol * std::max(1.0, op.norm()))
            valid = false;
      }
      if (valid) {
        for (int t = 0; t < fam.size() && valid; ++t) {
          Matrix rebuilt = Matrix::Zero(fam.dim, fam.dim);
          for (size_t k = 0; k < alg.blocks.size(); ++k) {
            const auto& blk = alg.blocks[k];
            rebuilt += blk.isometry *
                       kron(alg.compress(static_cast<int>(k),
                                         fam.ops[t]),
                            Matrix::Identity(blk.d, blk.d)) *
                       blk.isometry.adjoint();
          }
          if ((rebuilt - fam.ops[t]).norm() >
              tol * std::max(1.0, fam.ops[t].norm()) * 10.0)
            valid = false;
        }
      }
      if (valid) return alg;
      alg.blocks.clear();
    }
  }
  throw std::runtime_error("generate_algebra: block decomposition failed");
}

// --- multiplicative domain ----------------------------------------------------

// Two-sided multiplicative-domain membership for a CP map given by Kraus
// operators; the map norm is ||Lambda(I)||.
struct DomainMembership {
  bool member = false;
  double residual_left = 0.0, residual_right = 0.0;
};

inline DomainMembership multiplicative_domain_member(const KrausMap& map,
                                                     const Matrix& l,
                                                     double tol = 1e-8) {
  if (l.rows() != map.din)
    throw DimensionMismatchError("multiplicative_domain_member: dimension");
  const double nrm = operator_norm(map.applied_identity());
  const Matrix la = map.apply(l.adjoint().eval());
  const Matrix ll = map.apply(l);
  DomainMembership r;
  r.residual_left = (la * ll - nrm * map.apply((l.adjoint() * l).eval())).norm();
  r.residual_right = (ll * la - nrm * map.apply((l * l.adjoint()).eval())).norm();
  const double scale =
      tol * std::max({1.0, l.squaredNorm() * nrm, nrm * nrm});
  r.member = r.residual_left <= scale && r.residual_right <= scale;
  return r;
}

// Schwarz-inequality audit Lambda(L^dag) Lambda(L) <= ||Lambda|| Lambda(L^dag L)
// on random inputs.  The generic overload allows injecting non-CP linear
// maps (e.g. the transpose) for negative testing.
inline AuditReport schwarz_audit(const std::function<Matrix(const Matrix&)>& map,
                                 int din, int samples, std::uint64_t seed,
                                 double tol = 1e-8) {
  AuditReport rep;
  rep.samples = samples;
  std::mt19937_64 rng(seed);
  const Matrix lam_id = map(Matrix::Identity(din, din));
  const double nrm = operator_norm(lam_id);
  for (int s = 0; s < samples; ++s) {
    Matrix l = random_complex(din, din, rng);
    const Matrix lhs = map(l.adjoint().eval()) * map(l);
    const Matrix rhs = nrm * map((l.adjoint() * l).eval());
    const double scale = std::max(1.0, l.squaredNorm() * std::max(nrm, 1.0));
    if (!psd_check(rhs - lhs, tol * scale)) {
      ++rep.failures;
      if (rep.failure_notes.size() < 16)
        rep.failure_notes.push_back("Schwarz inequality violated at sample " +
                                    std::to_string(s));
    }
  }
  return rep;
}

inline AuditReport schwarz_audit(const KrausMap& map, int samples,
                                 std::uint64_t seed, double tol = 1e-8) {
  return schwarz_audit([&](const Matrix& x) { return map.apply(x); }, map.din,
                       samples, seed, tol);
}

// --- projector-shaped decisions -------------------------------------------------

namespace detail {

// Partition of theta indices into chains linked by L_t L_t' != 0.
inline std::vector<std::vector<int>> product_components(
    const OperatorFamily& fam, double tol = 1e-10) {
  const int n = fam.size();
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int i) {
    return parent[i] == i ? i : parent[i] = find(parent[i]);
  };
  double scale = 1.0;
  for (const auto& op : fam.ops) scale = std::max(scale, op.norm());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((fam.ops[i] * fam.ops[j]).norm() > tol * scale * scale)
        parent[find(i)] = find(j);
  std::vector<std::vector<int>> comps;
  for (int root = 0; root < n; ++root) {
    if (find(root) != root) continue;
    std::vector<int> c;
    for (int i = 0; i < n; ++i)
      if (find(i) == root) c.push_back(i);
    comps.push_back(std::move(c));
  }
  return comps;
}

inline OperatorFamily subfamily(const OperatorFamily& fam,
                                const std::vector<int>& idx) {
  OperatorFamily out;
  out.dim = fam.dim;
  for (int i : idx) out.ops.push_back(fam.ops[i]);
  return out;
}

}  // namespace detail

// Decision for rank-1 sources against projector-multiple targets with
// matched norms (subunital class): feasible iff on every product-linked
// component the targets are a common tensor-identity inflation of a vector
// family phase-unitarily equivalent to the sources.
inline Verdict projector_case_decide(const OperatorFamily& src,
                                     const OperatorFamily& tgt,
                                     double tol = 1e-8,
                                     std::uint64_t seed = 7) {
  Verdict v;
  const FamilyClass cls_src = classify(src);
  const FamilyClass cls_tgt = classify(tgt);
  if (!cls_src.all_rank1 || !cls_tgt.all_projector_multiple) {
    v.status = Status::NotApplicable;
    v.evidence = Evidence{"projector-case", "family shapes do not match",
                          std::nullopt};
    return v;
  }
  for (int t = 0; t < src.size(); ++t)
    if (std::abs(operator_norm(src.ops[t]) - operator_norm(tgt.ops[t])) >
        tol * std::max(1.0, operator_norm(src.ops[t]))) {
      v.status = Status::NotApplicable;
      v.evidence =
          Evidence{"projector-case", "operator norms differ", std::nullopt};
      return v;
    }
  const auto u = try_vectors_from_rank1(src);
  if (!u) {
    v.status = Status::NotApplicable;
    v.evidence = Evidence{"projector-case", "source not rank-1", std::nullopt};
    return v;
  }
  // sources in different product-linked components are orthogonal, so a
  // globally unitary-equivalent target family needs orthogonal supports
  // across components as well
  const auto comps = detail::product_components(src);
  double scale = 1.0;
  for (const auto& op : tgt.ops) scale = std::max(scale, op.norm());
  for (size_t a = 0; a < comps.size(); ++a)
    for (size_t b = a + 1; b < comps.size(); ++b)
      for (int i : comps[a])
        for (int j : comps[b])
          if ((tgt.ops[i] * tgt.ops[j]).norm() > tol * scale * scale) {
            v.status = Status::Infeasible;
            v.evidence = Evidence{
                "projector-case",
                "targets of orthogonal sources are not orthogonal",
                std::nullopt};
            return v;
          }
  for (const auto& comp : comps) {
    const OperatorFamily tsub = detail::subfamily(tgt, comp);
    StarAlgebra alg;
    try {
      alg = generate_algebra(tsub, seed);
    } catch (const std::runtime_error&) {
      v.status = Status::Undecided;
      return v;
    }
    if (alg.blocks.size() != 1) {
      v.status = Status::Infeasible;
      v.evidence = Evidence{
          "projector-case",
          "target component is not a single tensor-identity block",
          std::nullopt};
      return v;
    }
    // compressed coordinates must be a rank-1 family matching the sources
    OperatorFamily comp_tgt;
    comp_tgt.dim = alg.blocks[0].n;
    for (int t = 0; t < tsub.size(); ++t)
      comp_tgt.ops.push_back(alg.compress(0, tsub.ops[t]));
    const auto vv = try_vectors_from_rank1(comp_tgt);
    if (!vv) {
      v.status = Status::Infeasible;
      v.evidence = Evidence{"projector-case",
                            "compressed targets are not rank-1", std::nullopt};
      return v;
    }
    VectorFamily usub;
    usub.dim = u->dim;
    for (int i : comp) usub.vectors.push_back(u->vectors[i]);
    const CriterionReport rep = equi_norm_criterion(usub, *vv, tol);
    if (rep.verdict != Status::Feasible) {
      v.status = Status::Infeasible;
      v.evidence = Evidence{"projector-case",
                            "component Gram data not phase-equivalent",
                            std::nullopt};
      return v;
    }
  }
  v.status = Status::Feasible;
  v.evidence = Evidence{"projector-case",
                        "all components phase-equivalent after compression",
                        std::nullopt};
  return v;
}

namespace detail {

// Orthonormal basis of the intertwiner space {X : m_t X = X l_t}.
inline std::vector<Matrix> intertwiners(const std::vector<Matrix>& m,
                                        const std::vector<Matrix>& l) {
  const int rows_m = static_cast<int>(m.front().rows());
  const int rows_l = static_cast<int>(l.front().rows());
  const int k = static_cast<int>(m.size());
  Matrix stacked(k * rows_m * rows_l, rows_m * rows_l);
  for (int r = 0; r < k; ++r)
    stacked.middleRows(r * rows_m * rows_l, rows_m * rows_l) =
        kron(Matrix::Identity(rows_l, rows_l), m[r]) -
        kron(l[r].transpose(), Matrix::Identity(rows_m, rows_m));
  Eigen::JacobiSVD<Matrix> svd(stacked, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cut = 1e-8 * std::max(sv.size() ? sv(0) : 1.0, 1.0);
  std::vector<Matrix> out;
  for (Eigen::Index c = sv.size() - 1; c >= 0; --c) {
    if (sv(c) > cut) break;
    Matrix x(rows_m, rows_l);
    for (int i = 0; i < rows_m; ++i)
      for (int j = 0; j < rows_l; ++j)
        x(i, j) = svd.matrixV()(j * rows_m + i, c);
    out.push_back(x);
  }
  return out;
}

}  // namespace detail

// Decision for projector-multiple source and target families (subunital
// class), via block decomposition of both generated algebras: feasible iff
// every irreducible compressed target family is unitarily equivalent, as a
// family, to some irreducible compressed source family.
inline Verdict projector_projector_decide(const OperatorFamily& src,
                                          const OperatorFamily& tgt,
                                          double tol = 1e-8,
                                          std::uint64_t seed = 7) {
  Verdict v;
  const FamilyClass cs = classify(src), ct = classify(tgt);
  if (!cs.all_projector_multiple || !ct.all_projector_multiple) {
    v.status = Status::NotApplicable;
    v.evidence = Evidence{"projector-projector",
                          "families are not projector multiples", std::nullopt};
    return v;
  }
  StarAlgebra sa, ta;
  try {
    sa = generate_algebra(src, seed);
    ta = generate_algebra(tgt, seed + 1);
  } catch (const std::runtime_error&) {
    v.status = Status::Undecided;
    return v;
  }
  auto compressed = [&](const StarAlgebra& alg, const OperatorFamily& fam,
                        int k) {
    std::vector<Matrix> out;
    for (int t = 0; t < fam.size(); ++t) out.push_back(alg.compress(k, fam.ops[t]));
    return out;
  };
  for (size_t kt = 0; kt < ta.blocks.size(); ++kt) {
    const auto mblk = compressed(ta, tgt, static_cast<int>(kt));
    bool matched = false;
    for (size_t ks = 0; ks < sa.blocks.size() && !matched; ++ks) {
      if (sa.blocks[ks].n != ta.blocks[kt].n) continue;
      const auto lblk = compressed(sa, src, static_cast<int>(ks));
      for (const auto& x : detail::intertwiners(mblk, lblk)) {
        const Matrix xx = x.adjoint() * x;
        const double c = xx.trace().real() / double(x.cols());
        if (c > 1e-8 &&
            (xx - c * Matrix::Identity(x.cols(), x.cols())).norm() <
                tol * std::max(1.0, c) * x.cols()) {
          matched = true;
          break;
        }
      }
    }
    if (!matched) {
      v.status = Status::Infeasible;
      std::ostringstream os;
      os << "target block " << kt
         << " has no unitarily equivalent source block";
      v.evidence = Evidence{"projector-projector", os.str(), std::nullopt};
      return v;
    }
  }
  v.status = Status::Feasible;
  v.evidence = Evidence{"projector-projector",
                        "every target block matches a source block",
                        std::nullopt};
  return v;
}

}  // namespace obsconvert
