#include "bowtn/abelian.hpp"

#include <cmath>

namespace bowtn {

std::vector<int> BowMarkings::crossings(const TNConfig& cfg, double s) const {
  std::vector<int> c(p.size(), 0);
  for (std::size_t sigma = 0; sigma < p.size(); ++sigma) {
    if (s <= p[sigma]) continue;
    // #{m >= 0 : p_sigma + m ell < s}
    c[sigma] = (int)std::ceil((s - p[sigma]) / cfg.ell - 1e-15);
  }
  return c;
}

OneForm4 connection_a(double s, const TNConfig& cfg, const BowMarkings& bow,
                      const ChartPoint& p) {
  double V = potential(cfg, p.t);
  Vec3 om = omega(cfg, p);
  OneForm4 a;
  // s a^(0)
  a.dtau = s / V;
  a.dt = s * om / V;
  auto cr = bow.crossings(cfg, s);
  for (int sigma = 0; sigma < cfg.k(); ++sigma) {
    if (cr[sigma] == 0) continue;
    double ts = (p.t - cfg.centers[sigma]).norm();
    if (ts < 1e-14) throw CenterCollision("connection_a: at a center");
    double f = cr[sigma] / (2.0 * ts * V);
    a.dtau += f;
    a.dt += f * om -
            (double)cr[sigma] *
                eta_center(cfg, sigma, p.t, p.chart_for(cfg, sigma));
  }
  return a;
}

CurvatureSample curvature_asd(double s, const TNConfig& cfg,
                              const BowMarkings& bow, const ChartPoint& p,
                              double h) {
  // Coordinate curvature components by central differences: the family is
  // tau-independent, so F = da has F_{ij} = d_i a_j - d_j a_i and
  // F_{i tau} = d_i a_tau.
  Eigen::Matrix<double, 4, 4> Fc = Eigen::Matrix<double, 4, 4>::Zero();
  std::array<OneForm4, 3> ap, am;
  for (int i = 0; i < 3; ++i) {
    ChartPoint pp = p, pm = p;
    pp.t[i] += h;
    pm.t[i] -= h;
    ap[i] = connection_a(s, cfg, bow, pp);
    am[i] = connection_a(s, cfg, bow, pm);
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j)
      Fc(i, j) = (ap[i].dt[j] - am[i].dt[j]) / (2.0 * h) -
                 (ap[j].dt[i] - am[j].dt[i]) / (2.0 * h);
    Fc(i, 3) = (ap[i].dtau - am[i].dtau) / (2.0 * h);
    Fc(3, i) = -Fc(i, 3);
  }
  // Convert to the orthonormal frame: F_{ab} = E_a^mu E_b^nu F_{mu nu}.
  FramePoint fp = frame_at(cfg, p);
  Eigen::Matrix4d Ff = fp.frame * Fc * fp.frame.transpose();
  CurvatureSample out;
  for (int q = 0; q < 6; ++q)
    out.F.c[q] = Ff(kPairs[q].first, kPairs[q].second);
  TwoForm sF = hodge_star2(out.F);
  double res = 0.0, dens = 0.0;
  for (int q = 0; q < 6; ++q) {
    res += (out.F.c[q] + sF.c[q]) * (out.F.c[q] + sF.c[q]);
    dens += out.F.c[q] * out.F.c[q];
  }
  out.asd_residual = std::sqrt(res);
  out.density = dens;
  return out;
}

ShellIntegral l2_norm_estimate(double s, const TNConfig& cfg,
                               const BowMarkings& bow, double R_max,
                               int nodes_per_dim, double fd_h) {
  // Spherical midpoint quadrature about the origin with a radial grid that
  // is graded near zero (where the centers cluster in the test geometries).
  // The tau circle integrates to 2 pi ell trivially (integrand is
  // tau-independent); we report the 3d integral of |F|^2 V.
  ShellIntegral out;
  const int nr = nodes_per_dim, nth = nodes_per_dim, nph = 2 * nodes_per_dim;
  const int nshell = 4;
  for (int i = 1; i <= nshell; ++i)
    out.radii.push_back(R_max * i / (double)nshell);
  out.partial.assign(nshell, 0.0);
  double acc = 0.0;
  int shell = 0;
  for (int ir = 0; ir < nr; ++ir) {
    // graded radial map u^2 concentrates nodes near the origin
    double u0 = ir / (double)nr, u1 = (ir + 1) / (double)nr;
    double r0 = R_max * u0 * u0, r1 = R_max * u1 * u1;
    double rm = 0.5 * (r0 + r1), dr = r1 - r0;
    if (rm < 1e-6) continue;
    double ring = 0.0;
    for (int it = 0; it < nth; ++it) {
      double ct = -1.0 + (2.0 * it + 1.0) / nth;  // midpoint in cos(theta)
      double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
      for (int ip = 0; ip < nph; ++ip) {
        double phi = 2.0 * M_PI * (ip + 0.5) / nph;
        Vec3 t(rm * st * std::cos(phi), rm * st * std::sin(phi), rm * ct);
        // skip points essentially on a chart axis or a center
        bool bad = false;
        for (const auto& c : cfg.centers)
          if ((t - c).norm() < 4.0 * fd_h) bad = true;
        if (bad) continue;
        ChartPoint p{t, 0.0, {}};
        try {
          CurvatureSample cs = curvature_asd(s, cfg, bow, p, fd_h);
          double V = potential(cfg, t);
          ring += cs.density * V;
        } catch (const ChartBoundary&) {
        } catch (const OnDiracString&) {
        }
      }
    }
    double w = rm * rm * dr * (2.0 / nth) * (2.0 * M_PI / nph);
    acc += ring * w;
    while (shell < nshell && r1 >= out.radii[shell] - 1e-12)
      out.partial[shell++] = acc;
  }
  for (; shell < nshell; ++shell) out.partial[shell] = acc;
  return out;
}

}  // namespace bowtn
