#pragma once
// Gibbons-Hawking multi-Taub-NUT geometry: potential, monopole one-forms,
// metric, orthonormal (co)frame, Hodge star on 2-forms, Clifford frame and
// curvature anti-self-duality checks.
//
// Orientation: Vol = V dt^1 ^ dt^2 ^ dt^3 ^ dtau (positive).  Coframe
// theta^j = sqrt(V) dt^j, theta^4 = (dtau + omega)/sqrt(V).

#include <array>
#include <stdexcept>
#include <vector>

#include "bowtn/quat.hpp"

namespace bowtn {

struct CenterCollision : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OnDiracString : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ChartBoundary : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TNConfig {
  double ell = 1.0;            // asymptotic value of V; also circle length
  std::vector<Vec3> centers;   // nu_sigma, pairwise distinct
  double chart_axis_tol = 1e-3;  // angular exclusion around the string axis
  int k() const { return static_cast<int>(centers.size()); }
};

enum class Chart : int { North = 0, South = 1 };  // string on -z / +z half-axis

struct ChartPoint {
  Vec3 t{0, 0, 0};
  double tau = 0.0;
  std::vector<Chart> chart;  // per center; empty = auto by sign of (t-nu)_z
  Chart chart_for(const TNConfig& cfg, int sigma) const;
};

// V = ell + Sum_sigma 1/(2|t - nu_sigma|).  Throws CenterCollision.
double potential(const TNConfig& cfg, const Vec3& t);
// Analytic gradient of V.
Vec3 potential_grad(const TNConfig& cfg, const Vec3& t);

// Per-center monopole one-form eta_sigma in the given chart:
//   north: (y,-x,0)/(2 r (r+z)),  south: (-y,x,0)/(2 r (r-z))
// about d = t - nu_sigma.  Throws OnDiracString near the excluded axis.
Vec3 eta_center(const TNConfig& cfg, int sigma, const Vec3& t, Chart chart);

// omega = Sum_sigma eta_sigma with per-point chart selection.
Vec3 omega(const TNConfig& cfg, const ChartPoint& p);

// 4x4 GH metric in coordinates (t1,t2,t3,tau).
Eigen::Matrix4d metric(const TNConfig& cfg, const ChartPoint& p);

struct FramePoint {
  double V = 0.0;
  Vec3 om{0, 0, 0};
  Eigen::Matrix4d coframe;  // rows a: theta^a components along dt1,dt2,dt3,dtau
  Eigen::Matrix4d frame;    // rows a: E_a components along d/dt, d/dtau
  std::array<Eigen::Matrix4cd, 4> clifford;  // c^a, {c^a,c^b} = -2 delta^{ab}
  Eigen::Matrix4cd gamma;                    // chirality, = -c1 c2 c3 c4
};

FramePoint frame_at(const TNConfig& cfg, const ChartPoint& p);

// 2-forms in the orthonormal coframe, components on pairs
// (12),(13),(14),(23),(24),(34) in that order (1-based labels).
struct TwoForm {
  Eigen::Matrix<double, 6, 1> c = Eigen::Matrix<double, 6, 1>::Zero();
};
extern const std::array<std::pair<int, int>, 6> kPairs;  // zero-based (a<b)

TwoForm hodge_star2(const TwoForm& f);
Eigen::Matrix<double, 6, 6> hodge_star_matrix();
// Self-dual basis w^1,w^2,w^3 (i is 1-based):
//   w^i = 1/2 theta^i^theta^4 + 1/2 eps_ijk theta^j^theta^k (j<k).
TwoForm w_form(int i);
// Clifford action of a 2-form: Cl(theta^a ^ theta^b) = c^a c^b (a != b).
Eigen::Matrix4cd clifford_of(const TwoForm& f, const FramePoint& fp);

// Frame commutation coefficients C_ab^c ([E_a,E_b] = C_ab^c E_c) in closed
// form from v_j = d_j V / (2 V^{3/2}); and the Levi-Civita frame connection
// om[a](b,c) = omega_abc = <nabla_{E_a} E_b, E_c> via Koszul.
std::array<Eigen::Matrix4d, 4> frame_connection(const TNConfig& cfg,
                                                const Vec3& t);

struct CurvatureReport {
  double riemann_asd_residual = 0.0;  // ||(1+*)R|| on the 2-form pairing
  double riemann_scale = 0.0;         // ||R|| for relative comparison
  double sympl_const_residual = 0.0;  // max_i ||nabla w^i||
};

// Christoffels/Riemann by central finite differences of the metric (step h),
// converted to the orthonormal frame.  Throws ChartBoundary if the stencil
// crosses a string axis.
CurvatureReport curvature_checks(const TNConfig& cfg, const ChartPoint& p,
                                 double h);

// FD Riemann as a 6x6 operator on 2-form pairs (exposed for tests).
Eigen::Matrix<double, 6, 6> riemann_operator_fd(const TNConfig& cfg,
                                                const ChartPoint& p, double h);

}  // namespace bowtn
