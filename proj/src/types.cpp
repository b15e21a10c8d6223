#include "qsurg/types.hpp"

#include <cmath>
#include <cstdio>

namespace qsurg {

Cx omega(int d, long long k) {
  check_dim(d);
  int r = mod_d(k, d);
  if (r == 0) return {1.0, 0.0};
  // Exact values for the angles that hit the axes.
  if (2 * r == d) return {-1.0, 0.0};
  if (4 * r == d) return {0.0, 1.0};
  if (4 * r == 3 * d) return {0.0, -1.0};
  return std::polar(1.0, 2.0 * M_PI * r / d);
}

Mat Mat::identity(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Mat Mat::operator*(const Mat& o) const {
  if (cols != o.rows) throw std::invalid_argument("matrix shape mismatch");
  Mat r(rows, o.cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) {
      Cx v = at(i, k);
      if (v == Cx{}) continue;
      for (int j = 0; j < o.cols; ++j) r.at(i, j) += v * o.at(k, j);
    }
  return r;
}

Mat Mat::operator+(const Mat& o) const {
  if (rows != o.rows || cols != o.cols)
    throw std::invalid_argument("matrix shape mismatch");
  Mat r = *this;
  for (size_t i = 0; i < a.size(); ++i) r.a[i] += o.a[i];
  return r;
}

Mat Mat::operator-(const Mat& o) const {
  if (rows != o.rows || cols != o.cols)
    throw std::invalid_argument("matrix shape mismatch");
  Mat r = *this;
  for (size_t i = 0; i < a.size(); ++i) r.a[i] -= o.a[i];
  return r;
}

Mat Mat::scaled(Cx s) const {
  Mat r = *this;
  for (auto& v : r.a) v *= s;
  return r;
}

Mat Mat::adjoint() const {
  Mat r(cols, rows);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) r.at(j, i) = std::conj(at(i, j));
  return r;
}

Mat Mat::kron(const Mat& o) const {
  Mat r(rows * o.rows, cols * o.cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      Cx v = at(i, j);
      if (v == Cx{}) continue;
      for (int k = 0; k < o.rows; ++k)
        for (int l = 0; l < o.cols; ++l)
          r.at(i * o.rows + k, j * o.cols + l) = v * o.at(k, l);
    }
  return r;
}

double Mat::max_abs() const {
  double m = 0.0;
  for (const auto& v : a) m = std::max(m, std::abs(v));
  return m;
}

bool Mat::approx_equal(const Mat& o, double tol) const {
  if (rows != o.rows || cols != o.cols) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - o.a[i]) > tol) return false;
  return true;
}

bool Mat::approx_equal_up_to_scalar(const Mat& o, double tol) const {
  if (rows != o.rows || cols != o.cols) return false;
  size_t pivot = 0;
  double best = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i]) > best) {
      best = std::abs(a[i]);
      pivot = i;
    }
  if (best <= tol) return o.max_abs() <= tol;
  Cx s = o.a[pivot] / a[pivot];
  return scaled(s).approx_equal(o, tol * std::max(1.0, std::abs(s)));
}

std::string format_complex(Cx v) {
  double re = v.real();
  double im = v.imag();
  if (std::abs(re) < 5e-13) re = 0.0;
  if (std::abs(im) < 5e-13) im = 0.0;
  char buf[80];
  if (im == 0.0) {
    std::snprintf(buf, sizeof buf, "%.6g", re + 0.0);
  } else if (re == 0.0) {
    std::snprintf(buf, sizeof buf, "%.6gi", im + 0.0);
  } else {
    std::snprintf(buf, sizeof buf, "%.6g%+.6gi", re + 0.0, im + 0.0);
  }
  return buf;
}

}  // namespace qsurg
