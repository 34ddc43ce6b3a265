#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "obsconvert/families.hpp"

using namespace obsconvert;

namespace {
Vector vec2(cplx a, cplx b) {
  Vector v(2);
  v << a, b;
  return v;
}
VectorFamily make_family(int dim, std::vector<Vector> vs) {
  VectorFamily f;
  f.dim = dim;
  f.vectors = std::move(vs);
  return f;
}
}  // namespace

TEST_CASE("gram matrix examples") {
  const auto ortho = make_family(2, {vec2(1, 0), vec2(0, 1)});
  CHECK((gram(ortho) - Matrix::Identity(2, 2)).norm() <= 1e-14);

  const auto repeated = make_family(2, {vec2(1, 0), vec2(1, 0)});
  CHECK((gram(repeated) - Matrix::Ones(2, 2)).norm() <= 1e-14);

  const double s = 1.0 / std::sqrt(2.0);
  const auto pair = make_family(2, {vec2(1, 0), vec2(s, s)});
  Matrix expect(2, 2);
  expect << 1, s, s, 1;
  CHECK((gram(pair) - expect).norm() <= 1e-12);
}

TEST_CASE("dual system examples and Gram identity") {
  const auto ortho = make_family(2, {vec2(1, 0), vec2(0, 1)});
  const auto dual_o = dual_system(ortho);
  for (int t = 0; t < 2; ++t)
    CHECK((dual_o.vectors[t] - ortho.vectors[t]).norm() <= 1e-12);

  const auto fam = make_family(2, {vec2(1, 0), vec2(1, 1)});
  const auto dual = dual_system(fam);
  CHECK((dual.vectors[0] - vec2(1, -1)).norm() <= 1e-10);
  CHECK((dual.vectors[1] - vec2(0, 1)).norm() <= 1e-10);
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < 2; ++t) {
      const cplx ip = dual.vectors[s].dot(fam.vectors[t]);
      CHECK(std::abs(ip - (s == t ? cplx(1, 0) : cplx(0, 0))) <= 1e-10);
    }

  CHECK_THROWS_AS(dual_system(make_family(2, {vec2(1, 0), vec2(2, 0)})),
                  LinearlyDependentError);
}

TEST_CASE("gram of dual system inverts the gram matrix") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    VectorFamily f;
    f.dim = 3;
    for (int t = 0; t < 3; ++t)
      f.vectors.push_back(random_unit_vector(3, rng) * (0.5 + 0.001 * t));
    if (!linearly_independent(f)) continue;
    const Matrix g = gram(f);
    const Matrix gd = gram(dual_system(f));
    CHECK((g * gd - Matrix::Identity(3, 3)).norm() <= 1e-8 * gd.norm());
  }
}

TEST_CASE("classify examples") {
  OperatorFamily comm;
  comm.dim = 2;
  Matrix e00 = Matrix::Zero(2, 2), e11 = Matrix::Zero(2, 2);
  e00(0, 0) = 1;
  e11(1, 1) = 1;
  comm.ops = {e00, e11};
  const auto c1 = classify(comm);
  CHECK(c1.all_rank1);
  CHECK(c1.commutative);
  CHECK(c1.vectors_independent);

  OperatorFamily idf;
  idf.dim = 2;
  idf.ops = {Matrix::Identity(2, 2)};
  const auto c2 = classify(idf);
  CHECK(c2.all_projector_multiple);
  CHECK(c2.commutative);
  CHECK_FALSE(c2.all_rank1);

  OperatorFamily noncomm;
  noncomm.dim = 2;
  Matrix plus = 0.5 * Matrix::Ones(2, 2);
  noncomm.ops = {e00, plus};
  const auto c3 = classify(noncomm);
  CHECK(c3.all_rank1);
  CHECK_FALSE(c3.commutative);
}

TEST_CASE("classify is unitary-conjugation invariant") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    OperatorFamily f;
    f.dim = 3;
    f.ops.push_back(random_psd(3, rng));
    const Vector u = random_unit_vector(3, rng);
    f.ops.push_back((u * u.adjoint()).eval());
    const auto before = classify(f);
    const Matrix w = random_unitary(3, rng);
    OperatorFamily g;
    g.dim = 3;
    for (const auto& op : f.ops) g.ops.push_back(w * op * w.adjoint());
    const auto after = classify(g);
    CHECK(before.all_rank1 == after.all_rank1);
    CHECK(before.all_projector_multiple == after.all_projector_multiple);
    CHECK(before.commutative == after.commutative);
    CHECK(before.ranks == after.ranks);
  }
}

TEST_CASE("vectors_from_rank1 examples") {
  OperatorFamily f;
  f.dim = 2;
  Matrix e00 = Matrix::Zero(2, 2);
  e00(0, 0) = 1;
  f.ops = {e00};
  const auto v = vectors_from_rank1(f);
  CHECK((v.vectors[0] - vec2(1, 0)).norm() <= 1e-12);

  OperatorFamily g;
  g.dim = 2;
  g.ops = {Matrix(2.0 * Matrix::Ones(2, 2))};  // 4 |+><+|
  const auto w = vectors_from_rank1(g);
  const double r2 = std::sqrt(2.0);
  CHECK((w.vectors[0] - vec2(r2, r2)).norm() <= 1e-10);
  CHECK(w.vectors[0].norm() == doctest::Approx(2.0));

  OperatorFamily h;
  h.dim = 2;
  h.ops = {Matrix::Identity(2, 2)};
  CHECK_THROWS_AS(vectors_from_rank1(h), RankMismatchError);
}

TEST_CASE("rank-1 extraction round trip with phase convention") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    OperatorFamily f;
    f.dim = 4;
    std::vector<Vector> orig;
    for (int t = 0; t < 3; ++t) {
      Vector u = 2.0 * random_unit_vector(4, rng);
      orig.push_back(u);
      f.ops.push_back((u * u.adjoint()).eval());
    }
    const auto v = vectors_from_rank1(f);
    for (int t = 0; t < 3; ++t) {
      const Matrix rec = v.vectors[t] * v.vectors[t].adjoint();
      CHECK((rec - f.ops[t]).norm() <= 1e-8 * f.ops[t].norm());
      // first nonzero component real nonnegative
      for (Eigen::Index i = 0; i < 4; ++i) {
        if (std::abs(v.vectors[t](i)) > 1e-9) {
          CHECK(v.vectors[t](i).imag() == doctest::Approx(0.0).epsilon(1e-9));
          CHECK(v.vectors[t](i).real() >= 0.0);
          break;
        }
      }
    }
  }
}

TEST_CASE("gram_inverse and independence thresholds") {
  const auto dep = make_family(2, {vec2(1, 0), vec2(1 + 1e-14, 0)});
  CHECK_FALSE(linearly_independent(dep));
  CHECK_FALSE(gram_inverse(gram(dep)).has_value());

  const auto ind = make_family(2, {vec2(1, 0), vec2(1, 1)});
  CHECK(linearly_independent(ind));
  const auto gi = gram_inverse(gram(ind));
  REQUIRE(gi.has_value());
  CHECK((*gi * gram(ind) - Matrix::Identity(2, 2)).norm() <= 1e-10);
}
