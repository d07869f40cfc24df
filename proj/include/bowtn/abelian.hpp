#pragma once
// Tautological line-bundle connection family a_s on TN_k and its abelian
// anti-self-dual curvature:
//   a_s = s a^(0) + Sum_{sigma crossed} a^(sigma)
//   a^(0) = (dtau + omega)/V,   a^(sigma) = (1/(2 t_sigma))(dtau+omega)/V
//                                           - eta_sigma.
// Crossings are counted cumulatively: c_sigma(s) = #{m >= 0 : p_sigma + m l
// < s} for s >= 0, so a_{s+l} = a_s + dtau exactly (large-gauge shift).

#include "bowtn/geometry.hpp"

namespace bowtn {

struct BowMarkings {
  std::vector<double> p;  // marked points p_sigma in [0, ell), one per center
  // crossing multiplicities for bow parameter s (s may exceed ell)
  std::vector<int> crossings(const TNConfig& cfg, double s) const;
};

struct OneForm4 {
  Vec3 dt = Vec3::Zero();  // components along dt1,dt2,dt3
  double dtau = 0.0;
};

// Components of a_s at p (chart-dependent through eta/omega).
OneForm4 connection_a(double s, const TNConfig& cfg, const BowMarkings& bow,
                      const ChartPoint& p);

struct CurvatureSample {
  TwoForm F;            // curvature in the orthonormal coframe basis
  double asd_residual;  // ||(1 + *) F||
  double density;       // |F|^2 (frame components; volume weight is V d3t dtau)
};

// F = d a_s by central finite differences (step h), expressed in the
// orthonormal frame; asd_residual = ||(1+*)F||.
CurvatureSample curvature_asd(double s, const TNConfig& cfg,
                              const BowMarkings& bow, const ChartPoint& p,
                              double h);

struct ShellIntegral {
  std::vector<double> radii;     // shell boundaries R_1 < R_2 < ...
  std::vector<double> partial;   // integral of |F|^2 over |t| <= R_i
};

// Monte-Carlo-free midpoint quadrature of int |F|^2 V d3t dtau over balls,
// with radial refinement near the centers.  nodes_per_dim controls cost.
ShellIntegral l2_norm_estimate(double s, const TNConfig& cfg,
                               const BowMarkings& bow, double R_max,
                               int nodes_per_dim, double fd_h = 1e-4);

}  // namespace bowtn
