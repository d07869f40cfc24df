#include "bowtn/nahm.hpp"

#include <cmath>

namespace bowtn {

namespace {

Eigen::MatrixXcd comm(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
  return A * B - B * A;
}

void hermitize(NahmTriple& T) {
  for (auto& M : T.T) M = 0.5 * (M + M.adjoint()).eval();
}

NahmTriple axpy(const NahmTriple& A, double c, const NahmTriple& B) {
  NahmTriple R;
  for (int j = 0; j < 3; ++j) R.T[j] = A.T[j] + c * B.T[j];
  return R;
}

double tnorm(const NahmTriple& T) {
  double s = 0.0;
  for (const auto& M : T.T) s += M.squaredNorm();
  return std::sqrt(s);
}

}  // namespace

NahmTriple nahm_rhs(const Eigen::MatrixXcd& T0, const NahmTriple& T) {
  const cxd I(0.0, 1.0);
  NahmTriple R;
  for (int j = 0; j < 3; ++j) {
    int a = (j + 1) % 3, b = (j + 2) % 3;
    R.T[j] = -I * (comm(T.T[a], T.T[b]) + comm(T0, T.T[j]));
  }
  return R;
}

NahmSolution integrate_nahm(double s0, double s1, const NahmTriple& init,
                            const Eigen::MatrixXcd& T0, int hint,
                            double budget) {
  NahmSolution sol;
  double s = s0;
  NahmTriple T = init;
  hermitize(T);
  sol.s.push_back(s);
  sol.T.push_back(T);
  double hstep = (s1 - s0) / std::max(1, hint);
  auto rk4 = [&](const NahmTriple& y, double hh) {
    NahmTriple k1 = nahm_rhs(T0, y);
    NahmTriple k2 = nahm_rhs(T0, axpy(y, 0.5 * hh, k1));
    NahmTriple k3 = nahm_rhs(T0, axpy(y, 0.5 * hh, k2));
    NahmTriple k4 = nahm_rhs(T0, axpy(y, hh, k3));
    NahmTriple out = y;
    for (int j = 0; j < 3; ++j)
      out.T[j] += (hh / 6.0) * (k1.T[j] + 2.0 * k2.T[j] + 2.0 * k3.T[j] +
                                k4.T[j]);
    return out;
  };
  const int max_steps = 2000000;
  int n = 0;
  while (s < s1 - 1e-15 && n++ < max_steps) {
    double hh = std::min(hstep, s1 - s);
    // Halve until the local motion budget is met.
    while (tnorm(nahm_rhs(T0, T)) * hh > budget && hh > 1e-12) hh *= 0.5;
    T = rk4(T, hh);
    hermitize(T);
    s += hh;
    sol.s.push_back(s);
    sol.T.push_back(T);
  }
  return sol;
}

NahmTriple pole_model(double s, double spole, Eigen::Index rank) {
  auto sg = pauli();
  NahmTriple T;
  for (int j = 0; j < 3; ++j) {
    T.T[j] = Eigen::MatrixXcd::Identity(rank, rank);
    T.T[j].block(0, 0, 2, 2) = -sg[j] / (2.0 * (s - spole));
  }
  return T;
}

std::vector<cxd> spectral_invariants(const NahmTriple& T) {
  const cxd I(0.0, 1.0);
  Eigen::MatrixXcd Z = T.T[0] + I * T.T[1];
  std::vector<cxd> out;
  Eigen::MatrixXcd P = Z;
  for (Eigen::Index m = 1; m <= T.rank(); ++m) {
    out.push_back(P.trace());
    P = (P * Z).eval();
  }
  return out;
}

namespace {

// sum_j e_j (x) M_j as a dense 2R x 2R matrix.
Eigen::MatrixXcd quat_embed(const std::array<Eigen::MatrixXcd, 3>& M) {
  auto e = qunits();
  Eigen::Index R = M[0].rows();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(2 * R, 2 * R);
  for (int j = 0; j < 3; ++j)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        out.block(a * R, b * R, R, R) += e[j](a, b) * M[j];
  return out;
}

}  // namespace

double tdisc_residual(const NahmTriple& Tminus, const NahmTriple& Tplus,
                      const Eigen::MatrixXcd& Q) {
  const cxd I(0.0, 1.0);
  std::array<Eigen::MatrixXcd, 3> D;
  for (int j = 0; j < 3; ++j) D[j] = Tplus.T[j] - Tminus.T[j];
  Eigen::MatrixXcd rhs = quaternionic_im_dense(I * (Q * Q.adjoint()));
  return (quat_embed(D) - rhs).norm();
}

double pend_residual(const NahmTriple& T, const Vec3& nu,
                     const Eigen::MatrixXcd& B) {
  const cxd I(0.0, 1.0);
  Eigen::Index R = T.rank();
  std::array<Eigen::MatrixXcd, 3> D;
  for (int j = 0; j < 3; ++j)
    D[j] = T.T[j] - nu[j] * Eigen::MatrixXcd::Identity(R, R);
  Eigen::MatrixXcd rhs = -quaternionic_im_dense(I * (B * B.adjoint()));
  return (quat_embed(D) - rhs).norm();
}

double affine_norm(const std::vector<double>& s,
                   const std::vector<NahmTriple>& dT,
                   const std::vector<Eigen::MatrixXcd>& dT0,
                   const std::vector<Eigen::VectorXcd>& dB) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    double fi = dT[i].T[0].squaredNorm() + dT[i].T[1].squaredNorm() +
                dT[i].T[2].squaredNorm();
    double fj = dT[i + 1].T[0].squaredNorm() + dT[i + 1].T[1].squaredNorm() +
                dT[i + 1].T[2].squaredNorm();
    if (!dT0.empty()) {
      fi += dT0[i].squaredNorm();
      fj += dT0[i + 1].squaredNorm();
    }
    acc += 0.5 * (fi + fj) * (s[i + 1] - s[i]);
  }
  for (const auto& b : dB) acc += b.squaredNorm();
  return std::sqrt(acc);
}

}  // namespace bowtn
