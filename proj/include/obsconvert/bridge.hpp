// Bridge between state conversion and observable conversion: the S/T
// factorizations of the state sums, the induced transforms between the
// state-side map Phi and the observable-side map Lambda, the
// trace-preservation criterion, and the dephasing construction from a
// correlation matrix.
#pragma once

#include "obsconvert/rank1.hpp"

namespace obsconvert {

struct RankDeficientSumError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BridgePair {
  Matrix s, t;            // S S^dag = sum rho, T T^dag = sum sigma
  Matrix s_inv, t_inv;
  OperatorFamily source_observables;  // L_t = S^{-1} rho_t S^{-dag}
  OperatorFamily target_observables;  // M_t = T^{-1} sigma_t T^{-dag}
};

namespace detail {
inline Matrix factor_state_sum(const OperatorFamily& states,
                               const char* side) {
  Matrix total = Matrix::Zero(states.dim, states.dim);
  for (const auto& r : states.ops) total += r;
  const Spectrum sp = eig_hermitian(total);
  if (sp.eigenvalues(sp.eigenvalues.size() - 1) <=
      1e-10 * std::max(sp.eigenvalues(0), 1e-300))
    throw RankDeficientSumError(std::string("build_bridge: ") + side +
                                " state sum lacks full support");
  return sqrt_psd(total);
}
}  // namespace detail

// Builds S and T and the transformed observable families.  When both
// state families are rank-1 with independent vectors, S is taken as
// sum_t |u_t><e_t| so the transformed sources are the coordinate
// projections |e_t><e_t|.
inline BridgePair build_bridge(const OperatorFamily& rho,
                               const OperatorFamily& sigma) {
  if (rho.size() != sigma.size())
    throw SizeMismatchError("build_bridge: families differ in |Theta|");
  BridgePair b;
  const auto ru = try_vectors_from_rank1(rho);
  if (ru && rho.size() == rho.dim && linearly_independent(*ru)) {
    b.s = Matrix::Zero(rho.dim, rho.dim);
    for (int t = 0; t < rho.size(); ++t) b.s.col(t) = ru->vectors[t];
  } else {
    b.s = detail::factor_state_sum(rho, "source");
  }
  const auto sv = try_vectors_from_rank1(sigma);
  if (sv && sigma.size() == sigma.dim && linearly_independent(*sv)) {
    b.t = Matrix::Zero(sigma.dim, sigma.dim);
    for (int t = 0; t < sigma.size(); ++t) b.t.col(t) = sv->vectors[t];
  } else {
    b.t = detail::factor_state_sum(sigma, "target");
  }
  Eigen::PartialPivLU<Matrix> lus(b.s), lut(b.t);
  b.s_inv = lus.inverse();
  b.t_inv = lut.inverse();
  if (!b.s_inv.allFinite() || !b.t_inv.allFinite())
    throw RankDeficientSumError("build_bridge: singular S or T factor");
  b.source_observables.dim = rho.dim;
  b.target_observables.dim = sigma.dim;
  for (const auto& r : rho.ops)
    b.source_observables.ops.push_back(
        ((b.s_inv * r * b.s_inv.adjoint() +
          (b.s_inv * r * b.s_inv.adjoint()).adjoint()) /
         2.0)
            .eval());
  for (const auto& r : sigma.ops)
    b.target_observables.ops.push_back(
        ((b.t_inv * r * b.t_inv.adjoint() +
          (b.t_inv * r * b.t_inv.adjoint()).adjoint()) /
         2.0)
            .eval());
  return b;
}

// Observable-side map from the state-side map: Kraus T^{-1} K_i S.
inline KrausMap lambda_from_phi(const KrausMap& phi, const BridgePair& b) {
  KrausMap lam;
  lam.din = phi.din;
  lam.dout = phi.dout;
  for (const auto& k : phi.ops) lam.ops.push_back(b.t_inv * k * b.s);
  return lam;
}

// State-side map from the observable-side map: Kraus T W_i S^{-1}.
inline KrausMap phi_from_lambda(const KrausMap& lam, const BridgePair& b) {
  KrausMap phi;
  phi.din = lam.din;
  phi.dout = lam.dout;
  for (const auto& w : lam.ops) phi.ops.push_back(b.t * w * b.s_inv);
  return phi;
}

// Phi = T Lambda(...) is trace-preserving iff Lambda^* (T^dag T) = S^dag S.
inline bool bridge_trace_preserving(const KrausMap& lam, const BridgePair& b,
                                    double tol = 1e-8) {
  const Matrix lhs = lam.apply_adjoint((b.t.adjoint() * b.t).eval());
  const Matrix rhs = b.s.adjoint() * b.s;
  return (lhs - rhs).norm() <= tol * std::max(1.0, rhs.norm());
}

// Dephasing map defined by a correlation matrix H on coordinate units:
// Lambda(|e_t><e_t'|) = H_{t t'} |f_t><f_t'|.  Its Choi matrix is
// sum_{t t'} H_{t t'} |f_t><f_t'| (x) |e_t><e_t'|, PSD exactly when H is.
inline KrausMap dephasing_map(const Matrix& h, int dout,
                              const std::vector<Vector>& f) {
  const int n = static_cast<int>(h.rows());
  if (static_cast<int>(f.size()) != n)
    throw SizeMismatchError("dephasing_map: H size and basis count differ");
  Matrix j = Matrix::Zero(dout * n, dout * n);
  for (int t = 0; t < n; ++t)
    for (int s = 0; s < n; ++s) {
      const Matrix block = h(t, s) * (f[t] * f[s].adjoint());
      for (int a = 0; a < dout; ++a)
        for (int bb = 0; bb < dout; ++bb)
          j(a * n + t, bb * n + s) += block(a, bb);
    }
  KrausMap m;
  m.din = n;
  m.dout = dout;
  m.ops = extract_kraus(j, n, dout, 1e-7);
  return m;
}

}  // namespace obsconvert
