#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "bowtn/geometry.hpp"

using namespace bowtn;

namespace {

TNConfig one_center() {
  TNConfig c;
  c.ell = 1.0;
  c.centers = {Vec3(0, 0, 0)};
  return c;
}

ChartPoint at(double x, double y, double z, double tau = 0.0) {
  ChartPoint p;
  p.t = Vec3(x, y, z);
  p.tau = tau;
  return p;
}

// random point kept away from all centers and string axes
ChartPoint random_point(const TNConfig& cfg, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (;;) {
    const Vec3 t(u(rng), u(rng), u(rng));
    bool ok = true;
    for (const Vec3& nu : cfg.centers) {
      const Vec3 d = t - nu;
      if (d.norm() < 0.3) ok = false;
      if (std::hypot(d.x(), d.y()) < 0.05 * d.norm()) ok = false;
    }
    if (ok) return at(t.x(), t.y(), t.z());
  }
}

}  // namespace

TEST_CASE("potential values") {
  CHECK(potential(one_center(), Vec3(1, 0, 0)) == doctest::Approx(1.5));
  TNConfig c2 = one_center();
  c2.centers.push_back(Vec3(2, 0, 0));
  CHECK(potential(c2, Vec3(1, 0, 0)) == doctest::Approx(2.0));
  TNConfig ch = one_center();
  ch.ell = 0.5;
  CHECK(potential(ch, Vec3(1e7, 0, 0)) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK_THROWS_AS(potential(one_center(), Vec3(0, 0, 0)), CenterCollision);
  // analytic gradient vs FD
  const Vec3 t(0.7, -0.4, 0.9);
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    Vec3 tp = t, tm = t;
    tp[i] += h;
    tm[i] -= h;
    const double fd =
        (potential(one_center(), tp) - potential(one_center(), tm)) / (2 * h);
    CHECK(potential_grad(one_center(), t)[i] == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("omega: chart pole, d omega = *3 dV, chart transition") {
  // north chart is regular on the +z axis: omega = 0 there
  CHECK(omega(one_center(), at(0, 0, 2)).norm() < 1e-14);
  CHECK_THROWS_AS(eta_center(one_center(), 0, Vec3(0, 0, -2), Chart::North),
                  OnDiracString);

  // d omega = *_3 dV by central differences
  TNConfig cfg = one_center();
  const Vec3 t(0.8, 0.5, 0.6);
  const double h = 1e-4;
  auto om = [&](const Vec3& x) {
    ChartPoint p;
    p.t = x;
    return omega(cfg, p);
  };
  Eigen::Matrix3d J;  // J(i,j) = d_i omega_j
  for (int i = 0; i < 3; ++i) {
    Vec3 tp = t, tm = t;
    tp[i] += h;
    tm[i] -= h;
    J.row(i) = ((om(tp) - om(tm)) / (2 * h)).transpose();
  }
  const Vec3 curl(J(1, 2) - J(2, 1), J(2, 0) - J(0, 2), J(0, 1) - J(1, 0));
  CHECK((curl - potential_grad(cfg, t)).norm() < 1e-6);

  // eta_N - eta_S = d(azimuth) (closed, equals the gradient of atan2(y,x))
  const Vec3 q(0.4, 0.7, 0.2);
  const Vec3 dN = eta_center(cfg, 0, q, Chart::North);
  const Vec3 dS = eta_center(cfg, 0, q, Chart::South);
  const double rho2 = q.x() * q.x() + q.y() * q.y();
  const Vec3 dphi(-q.y() / rho2, q.x() / rho2, 0.0);
  CHECK((dN - dS + dphi).norm() < 1e-12);
}

TEST_CASE("frame orthonormality and flat limit") {
  TNConfig cfg = one_center();
  ChartPoint p = at(0.9, -0.3, 0.4, 0.7);
  const FramePoint fp = frame_at(cfg, p);
  const Eigen::Matrix4d g = metric(cfg, p);
  // coframe rows theta^a are orthonormal in g^{-1}; frame rows in g
  CHECK((fp.coframe * g.inverse() * fp.coframe.transpose() -
         Eigen::Matrix4d::Identity())
            .norm() < 1e-12);
  CHECK((fp.frame * g * fp.frame.transpose() - Eigen::Matrix4d::Identity())
            .norm() < 1e-12);
  CHECK(fp.coframe.determinant() == doctest::Approx(fp.V));  // wedge = V vol

  TNConfig flat;
  flat.ell = 2.0;
  const FramePoint ff = frame_at(flat, at(1, 1, 1));
  Eigen::Matrix4d expect = Eigen::Matrix4d::Zero();
  expect.diagonal() << std::sqrt(2.0), std::sqrt(2.0), std::sqrt(2.0),
      1.0 / std::sqrt(2.0);
  CHECK((ff.coframe - expect).norm() < 1e-13);
}

TEST_CASE("clifford algebra at a point") {
  const FramePoint fp = frame_at(one_center(), at(0.5, 0.8, -0.2));
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const Eigen::Matrix4cd anti =
          fp.clifford[a] * fp.clifford[b] + fp.clifford[b] * fp.clifford[a];
      const double target = (a == b) ? -2.0 : 0.0;
      CHECK((anti - target * Eigen::Matrix4cd::Identity()).norm() < 1e-12);
    }
  CHECK((fp.gamma + fp.clifford[0] * fp.clifford[1] * fp.clifford[2] *
                        fp.clifford[3])
            .norm() < 1e-12);
  CHECK((fp.gamma * fp.gamma - Eigen::Matrix4cd::Identity()).norm() < 1e-12);
}

TEST_CASE("hodge star on 2-forms") {
  // *(theta1^theta4) = theta2^theta3: pair order (12),(13),(14),(23),(24),(34)
  TwoForm f;
  f.c[2] = 1.0;  // theta1^theta4
  CHECK(hodge_star2(f).c[3] == doctest::Approx(1.0));
  CHECK(hodge_star2(f).c.norm() == doctest::Approx(1.0));
  // w^2 self-dual
  const TwoForm w2 = w_form(2);
  CHECK((hodge_star2(w2).c - w2.c).norm() < 1e-14);
  // ASD combination theta1^theta2 - theta3^theta4
  TwoForm a;
  a.c[0] = 1.0;
  a.c[5] = -1.0;
  CHECK((hodge_star2(a).c + a.c).norm() < 1e-14);
  // involution, +1 eigenspace is exactly span{w^i}
  const Eigen::Matrix<double, 6, 6> S = hodge_star_matrix();
  CHECK((S * S - Eigen::Matrix<double, 6, 6>::Identity()).norm() < 1e-14);
  CHECK(S.trace() == doctest::Approx(0.0));

  // Cl(*eta) = gamma Cl(eta); self-dual forms annihilate S^-
  const FramePoint fp = frame_at(one_center(), at(0.6, -0.9, 0.3));
  for (int i = 0; i < 6; ++i) {
    TwoForm b;
    b.c[i] = 1.0;
    CHECK((clifford_of(hodge_star2(b), fp) - fp.gamma * clifford_of(b, fp))
              .norm() < 1e-12);
  }
  const Eigen::Matrix4cd Pm =
      0.5 * (Eigen::Matrix4cd::Identity() - fp.gamma);
  const Eigen::Matrix4cd Pp =
      0.5 * (Eigen::Matrix4cd::Identity() + fp.gamma);
  for (int i = 1; i <= 3; ++i)
    CHECK((Pm * clifford_of(w_form(i), fp) * Pm).norm() < 1e-12);
  // I_j = Cl(w^j) (1+gamma)/2 with I1 I2 = I3 on S+
  const Eigen::Matrix4cd I1 = clifford_of(w_form(1), fp) * Pp;
  const Eigen::Matrix4cd I2 = clifford_of(w_form(2), fp) * Pp;
  const Eigen::Matrix4cd I3 = clifford_of(w_form(3), fp) * Pp;
  CHECK((I1 * I2 - I3).norm() < 1e-12);
}

TEST_CASE("curvature: flat exact, k=1 ASD, parallel w^i") {
  TNConfig flat;
  flat.ell = 1.0;
  CHECK(curvature_checks(flat, at(1, 0.5, 0.2), 1e-3).riemann_asd_residual <
        1e-8);

  TNConfig cfg = one_center();
  ChartPoint p = at(1.2, 0.9, 1.1);
  const CurvatureReport r1 = curvature_checks(cfg, p, 1e-3);
  CHECK(r1.riemann_asd_residual < 1e-4);
  CHECK(r1.sympl_const_residual < 1e-4);
  // measured FD order >= 1.8 under step halving
  const CurvatureReport r2 = curvature_checks(cfg, p, 5e-4);
  const double order = std::log2(r1.riemann_asd_residual /
                                 std::max(r2.riemann_asd_residual, 1e-300));
  CHECK(order >= 1.8);
}

TEST_CASE("random points, k = 1..3: orthonormality and ASD") {
  std::mt19937 rng(2024);
  for (int k = 1; k <= 3; ++k) {
    TNConfig cfg;
    cfg.ell = 1.0;
    cfg.centers = {Vec3(0.3, -0.2, 0.1)};
    if (k > 1) cfg.centers.push_back(Vec3(-1.1, 0.8, -0.5));
    if (k > 2) cfg.centers.push_back(Vec3(0.9, 1.2, 0.7));
    for (int it = 0; it < 5; ++it) {
      const ChartPoint p = random_point(cfg, rng);
      const FramePoint fp = frame_at(cfg, p);
      const Eigen::Matrix4d g = metric(cfg, p);
      CHECK((fp.frame * g * fp.frame.transpose() -
             Eigen::Matrix4d::Identity())
                .norm() < 1e-12);
      const CurvatureReport cr = curvature_checks(cfg, p, 1e-3);
      CHECK(cr.riemann_asd_residual <
            1e-4 * std::max(1.0, cr.riemann_scale));
      CHECK(cr.sympl_const_residual < 1e-4);
    }
  }
}
