#include "bowtn/geometry.hpp"

#include <cmath>

namespace bowtn {

Chart ChartPoint::chart_for(const TNConfig& cfg, int sigma) const {
  if (sigma < static_cast<int>(chart.size())) return chart[sigma];
  return (t(2) - cfg.centers[sigma](2)) >= 0.0 ? Chart::North : Chart::South;
}

double potential(const TNConfig& cfg, const Vec3& t) {
  double V = cfg.ell;
  for (const auto& c : cfg.centers) {
    const double r = (t - c).norm();
    if (r == 0.0) throw CenterCollision("point coincides with a center");
    V += 0.5 / r;
  }
  return V;
}

Vec3 potential_grad(const TNConfig& cfg, const Vec3& t) {
  Vec3 g = Vec3::Zero();
  for (const auto& c : cfg.centers) {
    const Vec3 d = t - c;
    const double r = d.norm();
    if (r == 0.0) throw CenterCollision("point coincides with a center");
    g -= d / (2.0 * r * r * r);
  }
  return g;
}

Vec3 eta_center(const TNConfig& cfg, int sigma, const Vec3& t, Chart chart) {
  const Vec3 d = t - cfg.centers[sigma];
  const double r = d.norm();
  if (r == 0.0) throw CenterCollision("point coincides with a center");
  const double x = d(0), y = d(1), z = d(2);
  const double rho2 = x * x + y * y;
  const double tol = cfg.chart_axis_tol * r;
  if (rho2 < tol * tol && ((chart == Chart::North && z < 0) ||
                           (chart == Chart::South && z > 0)))
    throw OnDiracString("point on the excluded string half-axis");
  if (chart == Chart::North) {
    const double f = 1.0 / (2.0 * r * (r + z));
    return Vec3(y * f, -x * f, 0.0);
  }
  const double f = 1.0 / (2.0 * r * (r - z));
  return Vec3(-y * f, x * f, 0.0);
}

Vec3 omega(const TNConfig& cfg, const ChartPoint& p) {
  Vec3 w = Vec3::Zero();
  for (int s = 0; s < cfg.k(); ++s)
    w += eta_center(cfg, s, p.t, p.chart_for(cfg, s));
  return w;
}

Eigen::Matrix4d metric(const TNConfig& cfg, const ChartPoint& p) {
  const double V = potential(cfg, p.t);
  const Vec3 w = omega(cfg, p);
  Eigen::Matrix4d g = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) g(i, j) = w(i) * w(j) / V;
    g(i, i) += V;
    g(i, 3) = g(3, i) = w(i) / V;
  }
  g(3, 3) = 1.0 / V;
  return g;
}

FramePoint frame_at(const TNConfig& cfg, const ChartPoint& p) {
  FramePoint fp;
  fp.V = potential(cfg, p.t);
  fp.om = omega(cfg, p);
  const double sV = std::sqrt(fp.V);
  fp.coframe = Eigen::Matrix4d::Zero();
  for (int j = 0; j < 3; ++j) fp.coframe(j, j) = sV;
  for (int j = 0; j < 3; ++j) fp.coframe(3, j) = fp.om(j) / sV;
  fp.coframe(3, 3) = 1.0 / sV;
  fp.frame = fp.coframe.inverse().transpose();
  // c^a = i * gamma^a with gamma^a = [[0, e_a],[e_a^dag, 0]];
  // then {c^a, c^b} = -2 delta^{ab} and gamma := -c1 c2 c3 c4 = diag(-1,1)
  // blockwise, so S+ is the second 2x2 block.
  for (int a = 0; a < 4; ++a) {
    Eigen::Matrix4cd g = Eigen::Matrix4cd::Zero();
    g.block<2, 2>(0, 2) = qunits()[a];
    g.block<2, 2>(2, 0) = qunits()[a].adjoint();
    fp.clifford[a] = cxd(0, 1) * g;
  }
  fp.gamma = -fp.clifford[0] * fp.clifford[1] * fp.clifford[2] *
             fp.clifford[3];
  return fp;
}

const std::array<std::pair<int, int>, 6> kPairs = {
    std::pair<int, int>{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

static double eps4(int a, int b, int c, int d) {
  int p[4] = {a, b, c, d};
  double sign = 1.0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      if (p[i] == p[j]) return 0.0;
      if (p[i] > p[j]) {
        std::swap(p[i], p[j]);
        sign = -sign;
      }
    }
  return sign;
}

Eigen::Matrix<double, 6, 6> hodge_star_matrix() {
  Eigen::Matrix<double, 6, 6> S = Eigen::Matrix<double, 6, 6>::Zero();
  for (int P = 0; P < 6; ++P)
    for (int Q = 0; Q < 6; ++Q)
      S(Q, P) = eps4(kPairs[P].first, kPairs[P].second, kPairs[Q].first,
                     kPairs[Q].second);
  return S;
}

TwoForm hodge_star2(const TwoForm& f) {
  TwoForm out;
  out.c = hodge_star_matrix() * f.c;
  return out;
}

TwoForm w_form(int i) {
  if (i < 1 || i > 3) throw std::invalid_argument("w_form: i in 1..3");
  TwoForm w;
  // 1/2 theta^i ^ theta^4
  for (int P = 0; P < 6; ++P)
    if (kPairs[P].first == i - 1 && kPairs[P].second == 3) w.c(P) = 0.5;
  // + 1/2 eps_{ijk} theta^j ^ theta^k on the spatial pair with j<k
  for (int P = 0; P < 6; ++P) {
    int a = kPairs[P].first, b = kPairs[P].second;
    if (b == 3) continue;
    // 3D epsilon with 1-based labels (i, a+1, b+1)
    int ii = i - 1;
    double e = 0.0;
    if (ii != a && ii != b) {
      int perm[3] = {ii, a, b};
      e = ((perm[1] - perm[0] + 3) % 3 == 1) ? 1.0 : -1.0;
    }
    if (e != 0.0) w.c(P) += 0.5 * e;
  }
  return w;
}

Eigen::Matrix4cd clifford_of(const TwoForm& f, const FramePoint& fp) {
  Eigen::Matrix4cd out = Eigen::Matrix4cd::Zero();
  for (int P = 0; P < 6; ++P)
    out += f.c(P) * fp.clifford[kPairs[P].first] * fp.clifford[kPairs[P].second];
  return out;
}

std::array<Eigen::Matrix4d, 4> frame_connection(const TNConfig& cfg,
                                                const Vec3& t) {
  const double V = potential(cfg, t);
  const Vec3 dV = potential_grad(cfg, t);
  Eigen::Vector4d v = Eigen::Vector4d::Zero();
  for (int j = 0; j < 3; ++j) v(j) = dV(j) / (2.0 * std::pow(V, 1.5));
  // C[a](b,c) = C_ab^c
  std::array<Eigen::Matrix4d, 4> C;
  for (auto& m : C) m = Eigen::Matrix4d::Zero();
  auto eps3 = [](int i, int a, int b) -> double {
    if (i == a || i == b || a == b) return 0.0;
    return ((a - i + 3) % 3 == 1) ? 1.0 : -1.0;
  };
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      for (int j = 0; j < 3; ++j)
        C[a](b, j) = -(v(a) * ((b == j) ? 1.0 : 0.0) -
                       v(b) * ((a == j) ? 1.0 : 0.0));
      double s4 = -(v(a) * ((b == 3) ? 1.0 : 0.0) -
                    v(b) * ((a == 3) ? 1.0 : 0.0));
      if (a < 3 && b < 3)
        for (int i = 0; i < 3; ++i) s4 += 2.0 * eps3(i, a, b) * v(i);
      C[a](b, 3) = s4;
    }
  // Koszul: omega_abc = 1/2 (C_abc - C_bca + C_cab)
  std::array<Eigen::Matrix4d, 4> om;
  for (auto& m : om) m = Eigen::Matrix4d::Zero();
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        om[a](b, c) = 0.5 * (C[a](b, c) - C[b](c, a) + C[c](a, b));
  return om;
}

// --- finite-difference curvature ---

using M4 = Eigen::Matrix4d;

static std::array<std::array<std::array<double, 4>, 4>, 4> christoffel_fd(
    const TNConfig& cfg, const ChartPoint& p, double h) {
  // dg[i] = d metric / d t^i (tau-independent)
  std::array<M4, 3> dg;
  for (int i = 0; i < 3; ++i) {
    ChartPoint pp = p, pm = p;
    pp.t(i) += h;
    pm.t(i) -= h;
    dg[i] = (metric(cfg, pp) - metric(cfg, pm)) / (2.0 * h);
  }
  const M4 gi = metric(cfg, p).inverse();
  std::array<std::array<std::array<double, 4>, 4>, 4> G{};
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n)
      for (int r = 0; r < 4; ++r) {
        double s = 0.0;
        for (int q = 0; q < 4; ++q) {
          double d1 = (n < 3) ? dg[n](q, r) : 0.0;
          double d2 = (r < 3) ? dg[r](q, n) : 0.0;
          double d3 = (q < 3) ? dg[q](n, r) : 0.0;
          s += gi(m, q) * (d1 + d2 - d3);
        }
        G[m][n][r] = 0.5 * s;
      }
  return G;
}

Eigen::Matrix<double, 6, 6> riemann_operator_fd(const TNConfig& cfg,
                                                const ChartPoint& p,
                                                double h) {
  // R^m_{n r s} = d_r G^m_{n s} - d_s G^m_{n r} + G G - G G
  std::array<std::array<std::array<std::array<double, 4>, 4>, 4>, 3> dG{};
  for (int r = 0; r < 3; ++r) {
    ChartPoint pp = p, pm = p;
    pp.t(r) += h;
    pm.t(r) -= h;
    auto Gp = christoffel_fd(cfg, pp, h);
    auto Gm = christoffel_fd(cfg, pm, h);
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n)
        for (int s = 0; s < 4; ++s)
          dG[r][m][n][s] = (Gp[m][n][s] - Gm[m][n][s]) / (2.0 * h);
  }
  auto G0 = christoffel_fd(cfg, p, h);
  // Riemann with all-lower coordinate indices then frame conversion
  const M4 g = metric(cfg, p);
  const FramePoint fp = frame_at(cfg, p);
  const M4& E = fp.frame;  // rows a: E_a^mu
  double Rf[4][4][4][4] = {};
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n)
      for (int r = 0; r < 4; ++r)
        for (int s = 0; s < 4; ++s) {
          double val = 0.0;
          if (r < 3) val += dG[r][m][n][s];
          if (s < 3) val -= dG[s][m][n][r];
          for (int q = 0; q < 4; ++q)
            val += G0[m][r][q] * G0[q][n][s] - G0[m][s][q] * G0[q][n][r];
          // lower the first index
          for (int q = 0; q < 4; ++q) {
            // accumulate into R_{q n r s} via g(q,m): done after loop instead
          }
          Rf[m][n][r][s] = val;  // R^m_{nrs}
        }
  // lower first index, convert all to the orthonormal frame
  double Rl[4][4][4][4] = {};
  for (int a = 0; a < 4; ++a)
    for (int n = 0; n < 4; ++n)
      for (int r = 0; r < 4; ++r)
        for (int s = 0; s < 4; ++s) {
          double v = 0.0;
          for (int m = 0; m < 4; ++m) v += g(a, m) * Rf[m][n][r][s];
          Rl[a][n][r][s] = v;
        }
  double Rfr[4][4][4][4] = {};
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
          double v = 0.0;
          for (int m = 0; m < 4; ++m)
            for (int n = 0; n < 4; ++n)
              for (int r = 0; r < 4; ++r)
                for (int s = 0; s < 4; ++s)
                  v += E(a, m) * E(b, n) * E(c, r) * E(d, s) * Rl[m][n][r][s];
          Rfr[a][b][c][d] = v;
        }
  Eigen::Matrix<double, 6, 6> R;
  for (int P = 0; P < 6; ++P)
    for (int Q = 0; Q < 6; ++Q)
      R(P, Q) = Rfr[kPairs[P].first][kPairs[P].second][kPairs[Q].first]
                   [kPairs[Q].second];
  return R;
}

CurvatureReport curvature_checks(const TNConfig& cfg, const ChartPoint& p,
                                 double h) {
  CurvatureReport rep;
  try {
    const auto R = riemann_operator_fd(cfg, p, h);
    rep.riemann_scale = R.norm();
    rep.riemann_asd_residual =
        (R + hodge_star_matrix() * R).norm();

    // nabla w^i via FD frame commutators (independent of the closed form):
    // C_ab^c from [E_a, E_b], then Koszul, then the algebraic residual.
    const double hf = h;
    std::array<Eigen::Matrix4d, 3> dE;
    for (int i = 0; i < 3; ++i) {
      ChartPoint pp = p, pm = p;
      pp.t(i) += hf;
      pm.t(i) -= hf;
      dE[i] = (frame_at(cfg, pp).frame - frame_at(cfg, pm).frame) / (2 * hf);
    }
    const Eigen::Matrix4d E = frame_at(cfg, p).frame;
    const Eigen::Matrix4d Einv = E.inverse();
    std::array<Eigen::Matrix4d, 4> C;
    for (auto& m : C) m = Eigen::Matrix4d::Zero();
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        Eigen::Vector4d comm = Eigen::Vector4d::Zero();
        for (int i = 0; i < 3; ++i)
          comm += E(a, i) * dE[i].row(b).transpose() -
                  E(b, i) * dE[i].row(a).transpose();
        Eigen::Vector4d coef = Einv.transpose() * comm;
        for (int c = 0; c < 4; ++c) C[a](b, c) = coef(c);
      }
    std::array<Eigen::Matrix4d, 4> om;
    for (int a = 0; a < 4; ++a) {
      om[a] = Eigen::Matrix4d::Zero();
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c)
          om[a](b, c) = 0.5 * (C[a](b, c) - C[b](c, a) + C[c](a, b));
    }
    double worst = 0.0;
    for (int i = 1; i <= 3; ++i) {
      // dense antisymmetric w^i
      Eigen::Matrix4d W = Eigen::Matrix4d::Zero();
      const TwoForm w = w_form(i);
      for (int P = 0; P < 6; ++P) {
        W(kPairs[P].first, kPairs[P].second) = w.c(P);
        W(kPairs[P].second, kPairs[P].first) = -w.c(P);
      }
      for (int a = 0; a < 4; ++a) {
        // (nabla_a w)_{bc} = -om_{ab}^d W_{dc} - om_{ac}^d W_{bd}
        const Eigen::Matrix4d res = -(om[a] * W) - (W * om[a].transpose());
        worst = std::max(worst, res.cwiseAbs().maxCoeff());
      }
    }
    rep.sympl_const_residual = worst;
  } catch (const OnDiracString&) {
    throw ChartBoundary("FD stencil crossed a Dirac string");
  }
  return rep;
}

}  // namespace bowtn
