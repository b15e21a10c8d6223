#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsurg {

using Cx = std::complex<double>;

// Default numeric tolerances used across the library.
// kTolTight covers single operations and algebraic identities;
// kTolLoose covers composed pipelines (logical maps, dictionary checks).
inline constexpr double kTolTight = 1e-12;
inline constexpr double kTolLoose = 1e-9;

// Largest supported qudit dimension.
inline constexpr int kMaxDim = 64;

inline void check_dim(int d) {
  if (d < 2 || d > kMaxDim)
    throw std::invalid_argument("qudit dimension must be in [2, " +
                                std::to_string(kMaxDim) + "], got " +
                                std::to_string(d));
}

// q^k with q = exp(2*pi*i/d); exponent taken mod d.
Cx omega(int d, long long k);

inline int mod_d(long long x, int d) {
  long long m = x % d;
  return static_cast<int>(m < 0 ? m + d : m);
}

// Small dense complex matrix, row-major. Used for gate matrices, logical
// maps and diagram tensors; the bulk state vector lives in sim::PureState.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<Cx> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c) {}

  Cx& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  const Cx& at(int r, int c) const {
    return a[static_cast<size_t>(r) * cols + c];
  }

  static Mat identity(int n);
  Mat operator*(const Mat& o) const;
  Mat operator+(const Mat& o) const;
  Mat operator-(const Mat& o) const;
  Mat scaled(Cx s) const;
  Mat adjoint() const;
  Mat kron(const Mat& o) const;
  double max_abs() const;
  bool approx_equal(const Mat& o, double tol) const;
  // True when o == s * this for some nonzero scalar s (|s| unconstrained).
  bool approx_equal_up_to_scalar(const Mat& o, double tol) const;
};

std::string format_complex(Cx v);

}  // namespace qsurg
