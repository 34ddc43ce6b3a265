// Decision dispatch: route a conversion problem to the cheapest exact
// criterion that applies (identity, commutative LP, rank-1 Gram criteria,
// projector-shaped decisions, qubit closed form), falling back to the
// general Choi engine.
#pragma once

#include "obsconvert/algebra.hpp"
#include "obsconvert/bridge.hpp"
#include "obsconvert/classical.hpp"
#include "obsconvert/problem_io.hpp"

namespace obsconvert {

struct Decision {
  Status status = Status::Undecided;
  std::string criterion;
  std::string detail;
  std::optional<Certificate> certificate;
  std::optional<Evidence> evidence;
  std::optional<Matrix> h;  // correlation-matrix witness when available
};

namespace dispatch_detail {

inline Decision from_verdict(const Verdict& v, std::string criterion) {
  Decision d;
  d.status = v.status;
  d.criterion = std::move(criterion);
  d.certificate = v.certificate;
  d.evidence = v.evidence;
  if (v.evidence) d.detail = v.evidence->description;
  return d;
}

inline Decision from_report(const CriterionReport& r) {
  Decision d;
  d.status = r.verdict;
  d.criterion = r.criterion;
  d.detail = r.detail;
  d.h = r.h;
  return d;
}

inline bool families_equal(const OperatorFamily& a, const OperatorFamily& b,
                           double tol) {
  if (a.dim != b.dim || a.size() != b.size()) return false;
  for (int t = 0; t < a.size(); ++t)
    if ((a.ops[t] - b.ops[t]).norm() > tol * std::max(1.0, a.ops[t].norm()))
      return false;
  return true;
}

inline Decision trivial_identity(const ProblemFile& p) {
  Decision d;
  d.criterion = "trivial-identity";
  if (!families_equal(p.source, p.target, p.tol)) {
    d.status = Status::NotApplicable;
    d.detail = "families differ";
    return d;
  }
  Certificate c;
  c.map = identity_map(p.source.dim);
  c.choi = choi_of_kraus(c.map);
  d.status = Status::Feasible;
  d.detail = "identity map converts the family to itself";
  d.certificate = std::move(c);
  return d;
}

// Measure-and-prepare Kraus operators realizing a (sub)stochastic matrix
// between the joint eigenbases.
inline KrausMap kraus_from_stochastic(const Eigen::MatrixXd& p,
                                      const Matrix& src_basis,
                                      const Matrix& tgt_basis) {
  KrausMap m;
  m.din = static_cast<int>(src_basis.rows());
  m.dout = static_cast<int>(tgt_basis.rows());
  for (int j = 0; j < p.rows(); ++j)
    for (int i = 0; i < p.cols(); ++i) {
      if (p(j, i) <= 0) continue;
      m.ops.push_back(std::sqrt(p(j, i)) * tgt_basis.col(j) *
                      src_basis.col(i).adjoint());
    }
  return m;
}

inline Decision commutative_lp(const ProblemFile& p) {
  Decision d;
  d.criterion = "commutative-lp";
  if (p.cls != MapClass::CPUnital && p.cls != MapClass::CPSubunital) {
    d.status = Status::NotApplicable;
    d.detail = "classical reduction covers (sub)unital classes only";
    return d;
  }
  if (!classify(p.source).commutative || !classify(p.target).commutative) {
    d.status = Status::NotApplicable;
    d.detail = "families are not commutative";
    return d;
  }
  // joint eigenbases (kept for the certificate construction)
  std::mt19937_64 rng(p.seed + 11);
  auto diagonalize = [&](const OperatorFamily& fam)
      -> std::optional<std::pair<ClassicalFamily, Matrix>> {
    for (int attempt = 0; attempt < 5; ++attempt) {
      Matrix comb = Matrix::Zero(fam.dim, fam.dim);
      std::normal_distribution<double> g;
      for (const auto& op : fam.ops) comb += g(rng) * op;
      const Spectrum s = eig_hermitian(comb);
      ClassicalFamily cf;
      cf.dim = fam.dim;
      bool ok = true;
      double scale = 1.0;
      for (const auto& op : fam.ops) scale = std::max(scale, op.norm());
      for (const auto& op : fam.ops) {
        const Matrix rot = s.eigenvectors.adjoint() * op * s.eigenvectors;
        RealVector diag(fam.dim);
        for (int i = 0; i < fam.dim; ++i)
          diag(i) = std::max(rot(i, i).real(), 0.0);
        if ((rot - Matrix(diag.cast<cplx>().asDiagonal())).norm() >
            1e-8 * scale) {
          ok = false;
          break;
        }
        cf.coeffs.push_back(diag);
      }
      if (ok) return std::make_pair(cf, s.eigenvectors);
    }
    return std::nullopt;
  };
  auto ds = diagonalize(p.source);
  auto dt = diagonalize(p.target);
  if (!ds || !dt) {
    d.status = Status::NotApplicable;
    d.detail = "joint diagonalization failed";
    return d;
  }
  // Rotated eigenvalues carry O(1e-16) noise, which the exact rational LP
  // cannot absorb: snap near-equal coefficients across both families to a
  // shared representative so genuine equalities become exact.
  {
    double scale = 1.0;
    std::vector<double*> slots;
    for (auto* fam : {&ds->first, &dt->first})
      for (auto& c : fam->coeffs)
        for (int i = 0; i < c.size(); ++i) {
          slots.push_back(&c(i));
          scale = std::max(scale, std::abs(c(i)));
        }
    std::sort(slots.begin(), slots.end(),
              [](double* a, double* b) { return *a < *b; });
    const double eps = 1e-9 * scale;
    for (size_t lo = 0; lo < slots.size();) {
      size_t hi = lo + 1;
      double sum = *slots[lo];
      while (hi < slots.size() && *slots[hi] - *slots[hi - 1] <= eps)
        sum += *slots[hi++];
      const double rep = sum / static_cast<double>(hi - lo);
      for (size_t k = lo; k < hi; ++k) *slots[k] = rep;
      lo = hi;
    }
  }
  const ClassicalVerdict cv = classical_decide(ds->first, dt->first, p.cls);
  d.status = cv.status;
  d.detail = cv.detail;
  if (cv.status == Status::Feasible && cv.certificate) {
    Certificate c;
    c.map = kraus_from_stochastic(cv.certificate->p, ds->second, dt->second);
    c.choi = choi_of_kraus(c.map);
    c.conversion_residual = conversion_residual(c.map, p.source, p.target);
    c.side_residual = side_condition_residual(c.map, p.cls);
    d.certificate = std::move(c);
  }
  return d;
}

inline Decision rank1_path(const ProblemFile& p) {
  Decision d;
  d.criterion = "rank1";
  const auto u = p.source_vectors ? p.source_vectors
                                  : try_vectors_from_rank1(p.source);
  const auto v = p.target_vectors ? p.target_vectors
                                  : try_vectors_from_rank1(p.target);
  if (!u || !v) {
    d.status = Status::NotApplicable;
    d.detail = "families are not rank-1";
    return d;
  }
  if (p.cls == MapClass::CPTP) {
    const CriterionReport rep = cjw_state_criterion(*u, *v);
    if (rep.verdict != Status::NotApplicable) return from_report(rep);
  } else if (p.cls == MapClass::CPUnital) {
    const CriterionReport rep = unital_rank1(*u, *v);
    if (rep.verdict != Status::NotApplicable) return from_report(rep);
  } else if (p.cls == MapClass::CPSubunital) {
    const CriterionReport en = equi_norm_criterion(*u, *v);
    if (en.verdict != Status::NotApplicable) return from_report(en);
    const CriterionReport rep = subunital_rank1(*u, *v, 1e-8, p.seed);
    if (rep.verdict != Status::NotApplicable) return from_report(rep);
  }
  d.status = Status::NotApplicable;
  d.detail = "no rank-1 criterion applies";
  return d;
}

inline Decision projector_path(const ProblemFile& p) {
  Decision d;
  d.criterion = "projector-case";
  if (p.cls != MapClass::CPSubunital) {
    d.status = Status::NotApplicable;
    d.detail = "projector decisions cover the subunital class";
    return d;
  }
  const FamilyClass cs = classify(p.source), ct = classify(p.target);
  if (cs.all_rank1 && ct.all_projector_multiple && !ct.all_rank1) {
    const Verdict v = projector_case_decide(p.source, p.target, 1e-8, p.seed + 3);
    if (v.status != Status::NotApplicable)
      return from_verdict(v, "projector-case");
  }
  if (cs.all_projector_multiple && ct.all_projector_multiple && !cs.all_rank1) {
    const Verdict v =
        projector_projector_decide(p.source, p.target, 1e-8, p.seed + 5);
    if (v.status != Status::NotApplicable)
      return from_verdict(v, "projector-projector");
  }
  d.status = Status::NotApplicable;
  d.detail = "family shapes do not match the projector criteria";
  return d;
}

inline Decision qubit_path(const ProblemFile& p) {
  Decision d;
  d.criterion = "qubit-closed-form";
  if (p.cls != MapClass::CPUnital || p.source.dim != 2 || p.target.dim != 2 ||
      p.source.size() != 2) {
    d.status = Status::NotApplicable;
    d.detail = "closed form covers unital qubit pairs";
    return d;
  }
  for (const auto& op : p.source.ops)
    if (!psd_check(op, 1e-9 * std::max(1.0, op.norm()))) {
      d.status = Status::NotApplicable;
      d.detail = "sources must be positive";
      return d;
    }
  PencilReduction red;
  try {
    red = reduce_rank1(p.source.ops[0], p.source.ops[1]);
  } catch (const DegenerateReductionError&) {
    d.status = Status::NotApplicable;
    d.detail = "source pencil degenerate";
    return d;
  }
  const Matrix m1 = red.map_target1(p.target.ops[0], p.target.ops[1]);
  const Matrix m2 = red.map_target2(p.target.ops[0], p.target.ops[1]);
  // a CP map sends the reduced positive sources to m1, m2; positivity of
  // the transformed targets is therefore necessary
  if (!psd_check(m1, 1e-9 * std::max(1.0, m1.norm())) ||
      !psd_check(m2, 1e-9 * std::max(1.0, m2.norm()))) {
    d.status = Status::Infeasible;
    d.detail = "transformed targets are not positive";
    return d;
  }
  OperatorFamily rsrc;
  rsrc.dim = 2;
  rsrc.ops = {red.l1, red.l2};
  const auto uv = try_vectors_from_rank1(rsrc);
  if (!uv) {
    d.status = Status::NotApplicable;
    d.detail = "reduced sources not rank-1";
    return d;
  }
  // align phases so the overlap is a nonnegative real c
  Vector u1 = uv->vectors[0], u2 = uv->vectors[1];
  const cplx ov = u1.dot(u2);
  if (std::abs(ov) > 1e-12) u2 *= std::conj(ov) / std::abs(ov);
  const Spectrum sm1 = eig_hermitian(m1);
  if (sm1.eigenvalues(1) <= 1e-9 * std::max(1.0, sm1.eigenvalues(0))) {
    d.status = Status::NotApplicable;
    d.detail = "first transformed target not positive definite";
    return d;
  }
  const Verdict v = qubit_decide(u1, u2, m1, m2);
  if (v.status == Status::NotApplicable) {
    d.status = Status::NotApplicable;
    d.detail = v.evidence ? v.evidence->description : "delegated overlap";
    return d;
  }
  d.status = v.status;
  d.detail = v.status == Status::Feasible ? "region membership holds"
                                          : "region membership fails";
  return d;
}

inline Decision choi_path(const ProblemFile& p) {
  ConversionQuery q;
  q.source = p.source;
  q.target = p.target;
  q.cls = p.cls;
  q.tol = p.tol;
  q.seed = p.seed;
  return from_verdict(decide(q), "choi-ap");
}

}  // namespace dispatch_detail

// Runs the decision pipeline.  `forced` restricts to a single criterion
// ("choi-ap" acts as the oracle override); an inapplicable forced
// criterion reports NotApplicable.
inline Decision dispatch(const ProblemFile& p,
                         const std::string& forced = std::string()) {
  using namespace dispatch_detail;
  if (!forced.empty()) {
    if (forced == "trivial-identity") return trivial_identity(p);
    if (forced == "commutative-lp") return commutative_lp(p);
    if (forced == "qubit-closed-form") return qubit_path(p);
    if (forced == "choi-ap") return choi_path(p);
    if (forced == "projector-case" || forced == "projector-projector")
      return projector_path(p);
    const auto u = p.source_vectors ? p.source_vectors
                                    : try_vectors_from_rank1(p.source);
    const auto v = p.target_vectors ? p.target_vectors
                                    : try_vectors_from_rank1(p.target);
    auto na = [&](const char* why) {
      Decision d;
      d.status = Status::NotApplicable;
      d.criterion = forced;
      d.detail = why;
      return d;
    };
    if (!u || !v) return na("families are not rank-1");
    if (forced == "cjw-gram-hadamard") return from_report(cjw_state_criterion(*u, *v));
    if (forced == "cjw-two-way") return from_report(cjw_two_way(*u, *v));
    if (forced == "unital-inverse-gram") return from_report(unital_rank1(*u, *v));
    if (forced == "subunital-inverse-gram")
      return from_report(subunital_rank1(*u, *v, 1e-8, p.seed));
    if (forced == "equal-norm-unitary") return from_report(equi_norm_criterion(*u, *v));
    if (forced == "subset-determinant") return from_report(det_necessary(*u, *v));
    throw std::invalid_argument("unknown criterion: " + forced);
  }
  Decision d = trivial_identity(p);
  if (d.status != Status::NotApplicable) return d;
  d = commutative_lp(p);
  if (d.status != Status::NotApplicable) return d;
  d = rank1_path(p);
  if (d.status != Status::NotApplicable && d.status != Status::Undecided)
    return d;
  d = projector_path(p);
  if (d.status != Status::NotApplicable) return d;
  d = qubit_path(p);
  if (d.status != Status::NotApplicable) return d;
  return choi_path(p);
}

// Attaches a Kraus certificate to a Feasible decision that lacks one by
// solving the feasibility problem; returns false if no verified
// certificate could be produced.
inline bool attach_certificate(Decision& d, const ProblemFile& p) {
  if (d.status != Status::Feasible) return false;
  if (d.certificate) return true;
  ConversionQuery q;
  q.source = p.source;
  q.target = p.target;
  q.cls = p.cls;
  q.tol = p.tol;
  q.seed = p.seed;
  const Verdict v = decide(q);
  if (v.status == Status::Feasible && v.certificate) {
    d.certificate = v.certificate;
    return true;
  }
  return false;
}

}  // namespace obsconvert
