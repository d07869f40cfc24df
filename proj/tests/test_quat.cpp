#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "bowtn/quat.hpp"

using namespace bowtn;

namespace {
double mnorm(const Eigen::MatrixXcd& m) { return m.norm(); }
}  // namespace

TEST_CASE("pauli and quaternion unit tables") {
  const auto& s = pauli();
  const auto& e = qunits();
  CHECK(mnorm(s[0] * s[1] - cxd(0, 1) * s[2]) < 1e-15);
  CHECK(mnorm(e[3] - Mat2::Identity()) < 1e-15);
  for (int j = 0; j < 3; ++j) {
    CHECK(mnorm(e[j] + cxd(0, 1) * s[j]) < 1e-15);
    CHECK(mnorm(e[j] * e[j] + Mat2::Identity()) < 1e-15);  // e_j^2 = -1
  }
  // e1 e2 e3 = -1
  CHECK(mnorm(e[0] * e[1] * e[2] + Mat2::Identity()) < 1e-15);
  // anticommutation
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      CHECK(mnorm(e[i] * e[j] + e[j] * e[i]) < 1e-15);
  // sunits share the table
  for (int a = 0; a < 4; ++a) CHECK(mnorm(sunits()[a] - e[a]) < 1e-15);
}

TEST_CASE("charge conjugation") {
  Vec2 z;
  z << 1.0, 0.0;
  Vec2 c = charge_conjugate(z);
  CHECK(std::abs(c(0)) < 1e-15);
  CHECK(std::abs(c(1) - cxd(1, 0)) < 1e-15);

  z << 1.0, cxd(0, 1);
  c = charge_conjugate(z);
  CHECK(std::abs(c(0) - cxd(0, 1)) < 1e-15);
  CHECK(std::abs(c(1) - cxd(1, 0)) < 1e-15);

  // squares to -1, preserves norm, antilinear
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int it = 0; it < 50; ++it) {
    Vec2 w;
    w << cxd(u(rng), u(rng)), cxd(u(rng), u(rng));
    CHECK((charge_conjugate(charge_conjugate(w)) + w).norm() < 1e-14);
    CHECK(std::abs(charge_conjugate(w).norm() - w.norm()) < 1e-14);
    const cxd a(u(rng), u(rng));
    CHECK((charge_conjugate(a * w) - std::conj(a) * charge_conjugate(w))
              .norm() < 1e-13);
    // (e_j z)^c = e_j z^c
    for (int j = 0; j < 3; ++j)
      CHECK((charge_conjugate(qunits()[j] * w) -
             qunits()[j] * charge_conjugate(w))
                .norm() < 1e-13);
  }
}

TEST_CASE("fierz contraction = 2 tr(X) id") {
  CHECK(mnorm(fierz_contract(qunits()[0])) < 1e-15);  // traceless
  CHECK(mnorm(fierz_contract(Mat2::Identity()) - 4.0 * Mat2::Identity()) <
        1e-15);
  Mat2 x;
  x << 1.0, 2.0, 3.0, 4.0;
  CHECK(mnorm(fierz_contract(x) - 10.0 * Mat2::Identity()) < 1e-14);
  // Sum_a I_a z w^dag I_a = -2 w^c z^{c dag}
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int it = 0; it < 50; ++it) {
    Vec2 z, w;
    z << cxd(u(rng), u(rng)), cxd(u(rng), u(rng));
    w << cxd(u(rng), u(rng)), cxd(u(rng), u(rng));
    Mat2 lhs = Mat2::Zero();
    for (int a = 0; a < 4; ++a)
      lhs += sunits()[a] * (z * w.adjoint()) * sunits()[a];
    const Mat2 rhs =
        -2.0 * charge_conjugate(w) * charge_conjugate(z).adjoint();
    CHECK(mnorm(lhs - rhs) < 1e-13);
  }
}

TEST_CASE("tensor identity on random quaternionic matrices") {
  for (unsigned seed = 1; seed <= 20; ++seed) {
    QuatMatrix X = QuatMatrix::Random(3, seed);
    CHECK(tensor_identity_check(X) < 1e-12);
  }
}

TEST_CASE("quaternionic imaginary part") {
  QuatMatrix X = QuatMatrix::Random(4, 3);
  QuatMatrix im = quaternionic_im(X);
  // kills the e4 component, keeps e1..e3
  CHECK(mnorm(im.comp[3]) < 1e-13);
  for (int j = 0; j < 3; ++j) CHECK(mnorm(im.comp[j] - X.comp[j]) < 1e-13);
  // idempotent on the dense realization
  const Eigen::MatrixXcd d = im.dense();
  CHECK(mnorm(quaternionic_im_dense(d) - d) < 1e-12);
}

TEST_CASE("decompose inverts dense") {
  QuatMatrix X = QuatMatrix::Random(3, 17);
  QuatMatrix Y = quat_decompose(X.dense());
  for (int a = 0; a < 4; ++a) CHECK(mnorm(Y.comp[a] - X.comp[a]) < 1e-13);
}
