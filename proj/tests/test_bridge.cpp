#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "obsconvert/bridge.hpp"
#include "obsconvert/choi.hpp"

using namespace obsconvert;

namespace {
OperatorFamily fam(int dim, std::vector<Matrix> ops) {
  OperatorFamily f;
  f.dim = dim;
  f.ops = std::move(ops);
  return f;
}
Matrix pure(const Vector& v) { return (v * v.adjoint()).eval(); }
Vector vec2(cplx a, cplx b) {
  Vector v(2);
  v << a, b;
  return v;
}
OperatorFamily random_states(int dim, int n, std::mt19937_64& rng) {
  OperatorFamily f;
  f.dim = dim;
  for (int t = 0; t < n; ++t) {
    const Matrix a = random_hermitian(dim, rng);
    Matrix r = (a * a.adjoint()).eval();
    f.ops.push_back((r / r.trace().real()).eval());
  }
  return f;
}
}  // namespace

TEST_CASE("build_bridge with orthonormal pure states gives S = I") {
  const auto rho = fam(2, {pure(vec2(1, 0)), pure(vec2(0, 1))});
  const auto b = build_bridge(rho, rho);
  CHECK((b.s - Matrix::Identity(2, 2)).norm() <= 1e-12);
  CHECK((b.t - Matrix::Identity(2, 2)).norm() <= 1e-12);
  for (int t = 0; t < 2; ++t) {
    CHECK((b.source_observables.ops[t] - rho.ops[t]).norm() <= 1e-12);
    CHECK((b.target_observables.ops[t] - rho.ops[t]).norm() <= 1e-12);
  }
}

TEST_CASE("build_bridge rank-1 path produces coordinate projections") {
  // independent non-orthogonal pure states: transformed sources are |e_t><e_t|
  const double c = 0.6, s = std::sqrt(1 - c * c);
  const auto rho = fam(2, {pure(vec2(1, 0)), pure(vec2(c, s))});
  std::mt19937_64 rng(81);
  const auto sigma = random_states(2, 2, rng);
  const auto b = build_bridge(rho, sigma);
  for (int t = 0; t < 2; ++t) {
    Matrix et = Matrix::Zero(2, 2);
    et(t, t) = 1;
    CHECK((b.source_observables.ops[t] - et).norm() <= 1e-10);
  }
  // general path on the target side: T T^dag reproduces the state sum
  Matrix total = sigma.ops[0] + sigma.ops[1];
  CHECK((b.t * b.t.adjoint() - total).norm() <= 1e-10);
}

TEST_CASE("build_bridge rejects rank-deficient sums") {
  const auto rho = fam(2, {pure(vec2(1, 0)), pure(vec2(1, 0))});
  const auto good = fam(2, {pure(vec2(1, 0)), pure(vec2(0, 1))});
  CHECK_THROWS_AS(build_bridge(rho, good), RankDeficientSumError);
  CHECK_THROWS_AS(build_bridge(good, rho), RankDeficientSumError);
  CHECK_THROWS_AS(
      build_bridge(good, fam(2, {pure(vec2(1, 0))})), SizeMismatchError);
}

TEST_CASE("lambda/phi transforms invert each other") {
  std::mt19937_64 rng(82);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rho = random_states(2, 2, rng);
    const auto sigma = random_states(3, 2, rng);
    const auto b = build_bridge(rho, sigma);
    KrausMap phi;
    phi.din = 2;
    phi.dout = 3;
    std::normal_distribution<double> g;
    for (int k = 0; k < 2; ++k) {
      Matrix w(3, 2);
      for (int a = 0; a < 3; ++a)
        for (int i = 0; i < 2; ++i) w(a, i) = cplx(g(rng), g(rng));
      phi.ops.push_back(w);
    }
    const KrausMap lam = lambda_from_phi(phi, b);
    const KrausMap back = phi_from_lambda(lam, b);
    for (size_t k = 0; k < phi.ops.size(); ++k)
      CHECK((back.ops[k] - phi.ops[k]).norm() <= 1e-9);
    // the conjugation identity: Lambda(L_t) = T^{-1} Phi(rho_t) T^{-dag}
    for (int t = 0; t < 2; ++t) {
      const Matrix lhs = lam.apply(b.source_observables.ops[t]);
      const Matrix rhs =
          b.t_inv * phi.apply(rho.ops[t]) * b.t_inv.adjoint();
      CHECK((lhs - rhs).norm() <= 1e-9);
    }
  }
}

TEST_CASE("bridge_trace_preserving characterizes TP of the state map") {
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rho = random_states(2, 2, rng);
    const auto sigma = random_states(2, 2, rng);
    const auto b = build_bridge(rho, sigma);
    // a genuinely trace-preserving Phi (random isometric dilation channel)
    KrausMap phi;
    phi.din = phi.dout = 2;
    const Matrix u = random_unitary(4, rng);
    for (int k = 0; k < 2; ++k)
      phi.ops.push_back(u.block(2 * k, 0, 2, 2));
    const Matrix check = phi.apply_adjoint(Matrix::Identity(2, 2));
    REQUIRE((check - Matrix::Identity(2, 2)).norm() <= 1e-10);
    const KrausMap lam = lambda_from_phi(phi, b);
    CHECK(bridge_trace_preserving(lam, b));
    // scaling breaks trace preservation
    KrausMap lam_bad = lam;
    for (auto& w : lam_bad.ops) w *= 1.05;
    CHECK_FALSE(bridge_trace_preserving(lam_bad, b));
  }
}

TEST_CASE("dephasing_map acts as a Schur multiplier on coordinate units") {
  // H PSD with unit diagonal
  Matrix h(2, 2);
  h << 1.0, cplx(0.3, 0.4), cplx(0.3, -0.4), 1.0;
  std::vector<Vector> f = {Vector(3), Vector(3)};
  f[0] << 1, 0, 0;
  f[1] << 0, 1, 0;
  const KrausMap m = dephasing_map(h, 3, f);
  for (int t = 0; t < 2; ++t)
    for (int s = 0; s < 2; ++s) {
      Matrix ets = Matrix::Zero(2, 2);
      ets(t, s) = 1;
      const Matrix expect = h(t, s) * (f[t] * f[s].adjoint());
      CHECK((m.apply(ets) - expect).norm() <= 1e-10);
    }

  CHECK_THROWS_AS(dephasing_map(h, 3, {f[0]}), SizeMismatchError);
}

TEST_CASE("state conversion end to end through the bridge") {
  // pure states with matching Gram ratio feasible for CPTP rank-1
  // conversion: overlap 0.5 -> 0.8 admits H with |H12| = 0.625 <= 1
  std::mt19937_64 rng(84);
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_real_distribution<double> dc(0.1, 0.8);
    const double cu = dc(rng);
    const double cv = cu + 0.1;
    VectorFamily u, v;
    u.dim = v.dim = 2;
    u.vectors = {vec2(1, 0), vec2(cu, std::sqrt(1 - cu * cu))};
    v.vectors = {vec2(1, 0), vec2(cv, std::sqrt(1 - cv * cv))};
    const CriterionReport rep = cjw_state_criterion(u, v);
    REQUIRE(rep.verdict == Status::Feasible);
    REQUIRE(rep.h.has_value());

    // dephasing on bridge coordinates realizes the conversion
    const auto rho = family_from_vectors(u);
    const auto sigma = family_from_vectors(v);
    const auto b = build_bridge(rho, sigma);
    std::vector<Vector> f;
    for (int t = 0; t < 2; ++t) f.push_back(Vector::Unit(2, t));
    const KrausMap lam = dephasing_map(*rep.h, 2, f);
    const KrausMap phi = phi_from_lambda(lam, b);
    // Phi is trace preserving and converts the states
    CHECK(bridge_trace_preserving(lam, b));
    const Matrix tp = phi.apply_adjoint(Matrix::Identity(2, 2));
    CHECK((tp - Matrix::Identity(2, 2)).norm() <= 1e-8);
    for (int t = 0; t < 2; ++t)
      CHECK(trace_norm((phi.apply(rho.ops[t]) - sigma.ops[t]).eval()) <=
            1e-7);
  }
}
