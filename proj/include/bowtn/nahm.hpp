#pragma once
// Rank-R Nahm data on an interval: ODE right-hand side in the T^0 gauge,
// adaptive RK4 integration with Hermitian re-symmetrization, spectral
// invariants, boundary-pole model, and the quaternionic moment conditions
// at marked points (jump and terminal forms, tested synthetically).

#include <vector>

#include "bowtn/quat.hpp"

namespace bowtn {

struct NahmTriple {
  std::array<Eigen::MatrixXcd, 3> T;
  Eigen::Index rank() const { return T[0].rows(); }
};

// i dT^1/ds - [T^0, T^1] = [T^2, T^3] and cyclic.
NahmTriple nahm_rhs(const Eigen::MatrixXcd& T0, const NahmTriple& T);

struct NahmSolution {
  std::vector<double> s;
  std::vector<NahmTriple> T;
};

// RK4 with step halving whenever ||rhs||*step exceeds `budget`; Hermitian
// part is re-imposed after every step.  `hint` is the initial step count.
NahmSolution integrate_nahm(double s0, double s1, const NahmTriple& init,
                            const Eigen::MatrixXcd& T0, int hint = 200,
                            double budget = 0.05);

// The boundary pole model T^j(s) = -sigma_j / (2 (s - spole)) on a rank-2
// block (identity on any complement).
NahmTriple pole_model(double s, double spole, Eigen::Index rank);

// tr((T^1 + i T^2)^m), m = 1..rank; constant along the flow.
std::vector<cxd> spectral_invariants(const NahmTriple& T);

// Jump condition at an interior marked point with injection Q (2R x m):
// || sum_j e_j (x) (Tplus^j - Tminus^j) - Im(i Q Q^dag) ||.
double tdisc_residual(const NahmTriple& Tminus, const NahmTriple& Tplus,
                      const Eigen::MatrixXcd& Q);

// Terminal condition on the minus side of a marked point at position nu:
// || sum_j e_j (x) (T^j - nu_j) + Im(i B B^dag) || with B : 2R x m.
// The plus side uses the charge conjugate of B (columnwise for m = 1).
double pend_residual(const NahmTriple& T, const Vec3& nu,
                     const Eigen::MatrixXcd& B);

// L^2-type affine norm of a tangent to the space of Nahm data: trapezoid
// rule for the matrix part on grid s, plus the injection contributions.
double affine_norm(const std::vector<double>& s,
                   const std::vector<NahmTriple>& dT,
                   const std::vector<Eigen::MatrixXcd>& dT0,
                   const std::vector<Eigen::VectorXcd>& dB);

}  // namespace bowtn
