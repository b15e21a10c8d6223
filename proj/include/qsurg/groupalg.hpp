#pragma once

#include <array>
#include <utility>

#include "qsurg/types.hpp"

namespace qsurg::groupalg {

// The two Hopf algebra structures carried by the d-dimensional vector space:
// Group is C[Z_d] in the group basis { |i> }, Function is C(Z_d) in the
// indicator basis { |delta_i> }. Both bases are stored as plain length-d
// coefficient vectors; the Basis tag selects which structure maps apply.
enum class Basis { Group, Function };

struct AlgebraElement {
  int d = 0;
  Basis basis = Basis::Group;
  std::vector<Cx> amps;

  AlgebraElement() = default;
  AlgebraElement(int dim, Basis b);
  static AlgebraElement basis_vector(int dim, Basis b, int index);

  bool approx_equal(const AlgebraElement& o, double tol) const;
};

// Element of the two-fold tensor power, amps[i*d + j] = coefficient of
// e_i (x) e_j in the tagged basis.
struct TensorElement {
  int d = 0;
  Basis basis = Basis::Group;
  std::vector<Cx> amps;

  TensorElement() = default;
  TensorElement(int dim, Basis b);
  bool approx_equal(const TensorElement& o, double tol) const;
};

// Structure maps. Group basis: multiplication is convolution
// |i>|j> -> |i+j>, comultiplication copies |i> -> |i>|i>, counit is 1,
// the integral is (1/d) sum_i |i>. Function basis: multiplication is
// pointwise delta_{ij}|delta_i>, comultiplication is
// |delta_i> -> sum_h |delta_h>|delta_{i-h}>, counit picks the coefficient
// of |delta_0>, the integral is |delta_0>. The antipode negates indices in
// both bases.
AlgebraElement mult(const AlgebraElement& x, const AlgebraElement& y);
AlgebraElement mult(const TensorElement& t);
AlgebraElement unit(int d, Basis b);
TensorElement comult(const AlgebraElement& x);
Cx counit(const AlgebraElement& x);
AlgebraElement antipode(const AlgebraElement& x);
AlgebraElement integral(int d, Basis b);

// Fourier isomorphism and its inverse:
//   Group -> Function:  |j>       ->  sum_k q^{jk} |delta_k>
//   Function -> Group:  |delta_j> -> (1/d) sum_k q^{-jk} |k>
AlgebraElement fourier(const AlgebraElement& x);

// The same structure maps as explicit matrices in the tagged basis: Mult is
// d x d^2 (column index i*d + j), Comult d^2 x d, Unit d x 1, Counit 1 x d,
// Antipode d x d, Integral d x 1.
enum class StructureMap { Mult, Comult, Unit, Counit, Antipode, Integral };
Mat structure_matrix(StructureMap m, int d, Basis b);

enum class GateKind { X, Z, H, H2, S, CX, Custom };

// Gate matrices on one qudit (d x d) or two (CX, d^2 x d^2, first index
// major, control first):
//   X^l |i> = |i+l>,  Z^m |i> = q^{mi} |i>,
//   H = (1/sqrt d) sum_{j,k} q^{-jk} |k><j|  (unitary),
//   H2 = S : |i> -> |-i>,  CX : |i>|j> -> |i>|i+j>.
Mat gate(GateKind kind, int d, int power = 1);

}  // namespace qsurg::groupalg
