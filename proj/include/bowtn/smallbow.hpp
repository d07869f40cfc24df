#pragma once
// Small bow representation: rank-1 Nahm data (t constant per interval),
// explicit b_sigma solving the moment-map condition
//   b_sigma b_sigma^dag = t_sigma + sigma.(t - nu_sigma)   (t_sigma = |t-nu|)
// covariant identities and the hyperkahler-quotient reconstruction of the
// GH metric.
//
// Conventions (recorded):
//  * b = sqrt(2 t_sigma) u with u the +1 eigenvector of sigma.(t-nu)/t_sigma,
//    phase fixed north-Hopf style (first nonvanishing component real > 0);
//    closed form b = (sqrt(r+z), (x+iy)/sqrt(r+z)).
//  * |b|^2 = 2 t_sigma (trace of the moment-map display).
//  * eta_hat := i (b^dag db - db^dag b)/(4 t_sigma) equals the north-chart
//    monopole form eta_sigma; with this sign the exact local identity is
//    (d + i eta_hat) b = (1/2) (d slash t / t_sigma) b, slash t = sigma.(t-nu).
//  * the bundle covariant derivative entering the frame identities is
//    nabla = d - i a^(sigma) on tau-independent sections.

#include "bowtn/abelian.hpp"

namespace bowtn {

// b_sigma from the moment-map condition; nu is the center.
Vec2 solve_b(const Vec3& t, const Vec3& nu);

// eta_hat via analytic differentiation of solve_b (closed form).
Vec3 eta_hat(const Vec3& t, const Vec3& nu);

struct BIdentityReport {
  double moment = 0.0;     // || b b^dag - (t_sigma + sigma.d) ||  (exact)
  double moment_conj = 0.0;  // charge-conjugate version (exact)
  double ssa = 0.0;        // frame identity nabla_{Theta_a} b + i e_a^dag b/(2 sqrt(V) t) (FD)
  double local = 0.0;      // (d + i eta_hat) b - (1/2)(d slash/t) b (FD)
  double local_conj = 0.0; // (d - i eta_hat) b^c + (1/2)(d slash/t) b^c (FD)
  double harmonic = 0.0;   // nabla* nabla b (FD)
  double dirac = 0.0;      // e_a^dag nabla_{Theta_a} (b/t) (FD)
};

// All finite-difference residuals use central differences with step h and
// the connection a^(sigma) from the abelian module (sigma-th center of cfg).
BIdentityReport b_identity_suite(const TNConfig& cfg, int sigma,
                                 const ChartPoint& p, double h);

// Hyperkahler quotient: Gram matrix of the projected tangent lifts
// (d/dt^1..3, d/dtau) at the level-set point over t, discretized on an
// s-grid with N nodes total (trapezoid rule; gauge basis {1, u, cos(pi m u)}
// per interval, m <= N/4).  Contract: equals the GH metric.
Eigen::Matrix4d quotient_metric(const TNConfig& cfg, const BowMarkings& bow,
                                const ChartPoint& p, int N);

}  // namespace bowtn
