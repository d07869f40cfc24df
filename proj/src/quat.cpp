#include "bowtn/quat.hpp"

#include <random>

namespace bowtn {

const std::array<Mat2, 3>& pauli() {
  static const std::array<Mat2, 3> s = [] {
    std::array<Mat2, 3> t;
    t[0] << 0, 1, 1, 0;
    t[1] << 0, cxd(0, -1), cxd(0, 1), 0;
    t[2] << 1, 0, 0, -1;
    return t;
  }();
  return s;
}

const std::array<Mat2, 4>& qunits() {
  static const std::array<Mat2, 4> e = [] {
    std::array<Mat2, 4> t;
    for (int j = 0; j < 3; ++j) t[j] = cxd(0, -1) * pauli()[j];
    t[3] = Mat2::Identity();
    return t;
  }();
  return e;
}

const std::array<Mat2, 4>& sunits() { return qunits(); }

Vec2 charge_conjugate(const Vec2& z) {
  return Vec2(-std::conj(z(1)), std::conj(z(0)));
}

Mat2 fierz_contract(const Mat2& X) {
  Mat2 out = Mat2::Zero();
  for (const auto& I : sunits()) out += I * X * I.adjoint();
  return out;
}

QuatMatrix QuatMatrix::Zero(int n) {
  QuatMatrix X;
  for (auto& c : X.comp) c = Eigen::MatrixXcd::Zero(n, n);
  return X;
}

QuatMatrix QuatMatrix::Random(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  QuatMatrix X = Zero(n);
  for (auto& c : X.comp)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = cxd(g(rng), g(rng));
  return X;
}

Eigen::MatrixXcd QuatMatrix::dense() const {
  const int m = n();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(2 * m, 2 * m);
  for (int a = 0; a < 4; ++a) {
    const Mat2& e = qunits()[a];
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        out.block(r * m, c * m, m, m) += e(r, c) * comp[a];
  }
  return out;
}

QuatMatrix quat_decompose(const Eigen::MatrixXcd& X) {
  const int m = static_cast<int>(X.rows()) / 2;
  QuatMatrix out = QuatMatrix::Zero(m);
  // <e_a, e_b> = tr(e_a^dag e_b) = 2 delta_ab
  for (int a = 0; a < 4; ++a) {
    const Mat2 ed = qunits()[a].adjoint();
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(m, m);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) acc += ed(c, r) * X.block(r * m, c * m, m, m);
    out.comp[a] = 0.5 * acc;
  }
  return out;
}

static Eigen::MatrixXcd kron(const Eigen::MatrixXcd& A,
                             const Eigen::MatrixXcd& B) {
  Eigen::MatrixXcd out(A.rows() * B.rows(), A.cols() * B.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

double tensor_identity_check(const QuatMatrix& X) {
  const int n = X.n();
  const Eigen::MatrixXcd Xd = X.dense();  // 2n x 2n
  const Eigen::MatrixXcd id2 = Mat2::Identity();
  const Eigen::MatrixXcd idn = Eigen::MatrixXcd::Identity(n, n);
  Eigen::MatrixXcd lhs = Eigen::MatrixXcd::Zero(4 * n, 4 * n);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const Eigen::MatrixXcd Ia = kron(sunits()[a], idn);
      const Eigen::MatrixXcd Ib = kron(sunits()[b], idn);
      lhs += kron(sunits()[a] * sunits()[b].adjoint(),
                  Ia.adjoint() * Xd * Ib);
    }
  Eigen::MatrixXcd rhs = 4.0 * kron(id2, kron(id2, X.comp[3]));
  for (int k = 0; k < 3; ++k)
    rhs += 4.0 * kron(sunits()[k], kron(id2, X.comp[k]));
  return (lhs - rhs).norm();
}

Eigen::MatrixXcd quaternionic_im_dense(const Eigen::MatrixXcd& X) {
  const int m = static_cast<int>(X.rows()) / 2;
  Eigen::MatrixXcd re = Eigen::MatrixXcd::Zero(2 * m, 2 * m);
  for (const auto& e : qunits()) {
    const Eigen::MatrixXcd ek = kron(e, Eigen::MatrixXcd::Identity(m, m));
    re += ek * X * ek.adjoint();
  }
  return X - 0.25 * re;
}

QuatMatrix quaternionic_im(const QuatMatrix& X) {
  return quat_decompose(quaternionic_im_dense(X.dense()));
}

}  // namespace bowtn
