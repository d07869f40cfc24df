#pragma once
// Quaternionic linear algebra over C^2: unit representation, charge
// conjugation, Fierz-type contractions, quaternion imaginary part.
//
// Representation (fixed): e_j = -i*sigma_j for j=1,2,3 and e_4 = 1, stored
// with zero-based index a=0..3 so that e(3) is the identity.  The S+ units
// I_a use the same table; the two actions are contragredient through the
// charge-conjugation pairing.  All identities below are exact in this
// representation and unit-tested to 1e-12.

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <vector>

namespace bowtn {

using cxd = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Vec2 = Eigen::Vector2cd;
using Vec3 = Eigen::Vector3d;

// Pauli matrices sigma_1..sigma_3 (index 0..2).
const std::array<Mat2, 3>& pauli();

// Quaternion units e_1,e_2,e_3,e_4 = -i sigma_1, -i sigma_2, -i sigma_3, 1
// (index a = 0..3, e(3) = identity).
const std::array<Mat2, 4>& qunits();

// S+-side units I_a; same table as qunits() in this representation.
const std::array<Mat2, 4>& sunits();

// Charge conjugation (z1, z2) -> (-conj(z2), conj(z1)).  Antilinear,
// norm-preserving, squares to -1.
Vec2 charge_conjugate(const Vec2& z);

// Sum_a I_a X I_a^dag = 2 tr(X) * identity.
Mat2 fierz_contract(const Mat2& X);

// A quaternionic matrix X = Sum_a e_a (x) X^a with n x n complex components.
struct QuatMatrix {
  std::array<Eigen::MatrixXcd, 4> comp;  // X^1, X^2, X^3, X^4 (index 0..3)
  int n() const { return static_cast<int>(comp[0].rows()); }
  static QuatMatrix Zero(int n);
  static QuatMatrix Random(int n, unsigned seed);
  // dense 2n x 2n realization Sum_a kron(e_a, X^a)
  Eigen::MatrixXcd dense() const;
};

// Frobenius-norm residual of the tensor identity
//   Sum_{a,b} I_a I_b^dag (x) (I_a (x) 1)^dag X (I_b (x) 1)
//     = 4 [ 1 (x) 1 (x) X^4 + Sum_k I_k (x) 1 (x) X^k ],
// evaluated on explicit Kronecker realizations.
double tensor_identity_check(const QuatMatrix& X);

// Im X := X - (1/4) Sum_a e_a X e_a^dag, computed on the dense realization
// and returned in component form.  Idempotent; kills e_4 (x) M.
QuatMatrix quaternionic_im(const QuatMatrix& X);
Eigen::MatrixXcd quaternionic_im_dense(const Eigen::MatrixXcd& X);

// Decompose a dense 2n x 2n matrix into quaternion components (inverse of
// QuatMatrix::dense); exact since e_a are an orthogonal basis of 2x2.
QuatMatrix quat_decompose(const Eigen::MatrixXcd& X);

}  // namespace bowtn
