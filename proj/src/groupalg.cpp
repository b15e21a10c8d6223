#include "qsurg/groupalg.hpp"

#include <cmath>

namespace qsurg::groupalg {

namespace {

void check_same(const AlgebraElement& x, const AlgebraElement& y) {
  if (x.d != y.d || x.basis != y.basis)
    throw std::invalid_argument("algebra elements live in different spaces");
}

}  // namespace

AlgebraElement::AlgebraElement(int dim, Basis b) : d(dim), basis(b) {
  check_dim(dim);
  amps.assign(dim, Cx{});
}

AlgebraElement AlgebraElement::basis_vector(int dim, Basis b, int index) {
  if (index < 0 || index >= dim)
    throw std::invalid_argument("basis index out of range");
  AlgebraElement e(dim, b);
  e.amps[index] = 1.0;
  return e;
}

bool AlgebraElement::approx_equal(const AlgebraElement& o, double tol) const {
  if (d != o.d || basis != o.basis) return false;
  for (int i = 0; i < d; ++i)
    if (std::abs(amps[i] - o.amps[i]) > tol) return false;
  return true;
}

TensorElement::TensorElement(int dim, Basis b) : d(dim), basis(b) {
  check_dim(dim);
  amps.assign(static_cast<size_t>(dim) * dim, Cx{});
}

bool TensorElement::approx_equal(const TensorElement& o, double tol) const {
  if (d != o.d || basis != o.basis) return false;
  for (size_t i = 0; i < amps.size(); ++i)
    if (std::abs(amps[i] - o.amps[i]) > tol) return false;
  return true;
}

AlgebraElement mult(const AlgebraElement& x, const AlgebraElement& y) {
  check_same(x, y);
  AlgebraElement r(x.d, x.basis);
  if (x.basis == Basis::Group) {
    for (int i = 0; i < x.d; ++i) {
      if (x.amps[i] == Cx{}) continue;
      for (int j = 0; j < x.d; ++j)
        r.amps[mod_d(i + j, x.d)] += x.amps[i] * y.amps[j];
    }
  } else {
    for (int i = 0; i < x.d; ++i) r.amps[i] = x.amps[i] * y.amps[i];
  }
  return r;
}

AlgebraElement mult(const TensorElement& t) {
  AlgebraElement r(t.d, t.basis);
  for (int i = 0; i < t.d; ++i)
    for (int j = 0; j < t.d; ++j) {
      Cx v = t.amps[static_cast<size_t>(i) * t.d + j];
      if (v == Cx{}) continue;
      if (t.basis == Basis::Group) {
        r.amps[mod_d(i + j, t.d)] += v;
      } else if (i == j) {
        r.amps[i] += v;
      }
    }
  return r;
}

AlgebraElement unit(int d, Basis b) {
  check_dim(d);
  AlgebraElement r(d, b);
  if (b == Basis::Group) {
    r.amps[0] = 1.0;
  } else {
    for (int i = 0; i < d; ++i) r.amps[i] = 1.0;
  }
  return r;
}

TensorElement comult(const AlgebraElement& x) {
  TensorElement r(x.d, x.basis);
  for (int i = 0; i < x.d; ++i) {
    if (x.amps[i] == Cx{}) continue;
    if (x.basis == Basis::Group) {
      r.amps[static_cast<size_t>(i) * x.d + i] = x.amps[i];
    } else {
      for (int h = 0; h < x.d; ++h)
        r.amps[static_cast<size_t>(h) * x.d + mod_d(i - h, x.d)] += x.amps[i];
    }
  }
  return r;
}

Cx counit(const AlgebraElement& x) {
  if (x.basis == Basis::Function) return x.amps[0];
  Cx s{};
  for (int i = 0; i < x.d; ++i) s += x.amps[i];
  return s;
}

AlgebraElement antipode(const AlgebraElement& x) {
  AlgebraElement r(x.d, x.basis);
  for (int i = 0; i < x.d; ++i) r.amps[mod_d(-i, x.d)] = x.amps[i];
  return r;
}

AlgebraElement integral(int d, Basis b) {
  check_dim(d);
  AlgebraElement r(d, b);
  if (b == Basis::Group) {
    for (int i = 0; i < d; ++i) r.amps[i] = 1.0 / d;
  } else {
    r.amps[0] = 1.0;
  }
  return r;
}

AlgebraElement fourier(const AlgebraElement& x) {
  AlgebraElement r(x.d, x.basis == Basis::Group ? Basis::Function
                                                : Basis::Group);
  if (x.basis == Basis::Group) {
    for (int k = 0; k < x.d; ++k) {
      Cx s{};
      for (int j = 0; j < x.d; ++j)
        s += omega(x.d, static_cast<long long>(j) * k) * x.amps[j];
      r.amps[k] = s;
    }
  } else {
    for (int k = 0; k < x.d; ++k) {
      Cx s{};
      for (int j = 0; j < x.d; ++j)
        s += omega(x.d, -static_cast<long long>(j) * k) * x.amps[j];
      r.amps[k] = s / static_cast<double>(x.d);
    }
  }
  return r;
}

Mat structure_matrix(StructureMap m, int d, Basis b) {
  check_dim(d);
  bool grp = b == Basis::Group;
  switch (m) {
    case StructureMap::Mult: {
      Mat r(d, d * d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          if (grp)
            r.at(mod_d(i + j, d), i * d + j) = 1.0;
          else if (i == j)
            r.at(i, i * d + j) = 1.0;
        }
      return r;
    }
    case StructureMap::Comult: {
      Mat r(d * d, d);
      for (int i = 0; i < d; ++i) {
        if (grp) {
          r.at(i * d + i, i) = 1.0;
        } else {
          for (int h = 0; h < d; ++h) r.at(h * d + mod_d(i - h, d), i) = 1.0;
        }
      }
      return r;
    }
    case StructureMap::Unit: {
      Mat r(d, 1);
      if (grp)
        r.at(0, 0) = 1.0;
      else
        for (int i = 0; i < d; ++i) r.at(i, 0) = 1.0;
      return r;
    }
    case StructureMap::Counit: {
      Mat r(1, d);
      if (grp)
        for (int i = 0; i < d; ++i) r.at(0, i) = 1.0;
      else
        r.at(0, 0) = 1.0;
      return r;
    }
    case StructureMap::Antipode: {
      Mat r(d, d);
      for (int i = 0; i < d; ++i) r.at(mod_d(-i, d), i) = 1.0;
      return r;
    }
    case StructureMap::Integral: {
      Mat r(d, 1);
      if (grp)
        for (int i = 0; i < d; ++i) r.at(i, 0) = 1.0 / d;
      else
        r.at(0, 0) = 1.0;
      return r;
    }
  }
  throw std::invalid_argument("unknown structure map");
}

Mat gate(GateKind kind, int d, int power) {
  check_dim(d);
  switch (kind) {
    case GateKind::X: {
      Mat r(d, d);
      for (int i = 0; i < d; ++i) r.at(mod_d(i + power, d), i) = 1.0;
      return r;
    }
    case GateKind::Z: {
      Mat r(d, d);
      for (int i = 0; i < d; ++i)
        r.at(i, i) = omega(d, static_cast<long long>(power) * i);
      return r;
    }
    case GateKind::H: {
      if (power != 1) throw std::invalid_argument("H takes power 1");
      Mat r(d, d);
      double s = 1.0 / std::sqrt(static_cast<double>(d));
      for (int k = 0; k < d; ++k)
        for (int j = 0; j < d; ++j)
          r.at(k, j) = s * omega(d, -static_cast<long long>(j) * k);
      return r;
    }
    case GateKind::H2:
    case GateKind::S: {
      if (mod_d(power, 2) == 0) return Mat::identity(d);
      Mat r(d, d);
      for (int i = 0; i < d; ++i) r.at(mod_d(-i, d), i) = 1.0;
      return r;
    }
    case GateKind::CX: {
      Mat r(d * d, d * d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          r.at(i * d + mod_d(j + static_cast<long long>(power) * i, d),
               i * d + j) = 1.0;
      return r;
    }
    case GateKind::Custom:
      throw std::invalid_argument("no canned matrix for a custom gate");
  }
  throw std::invalid_argument("unknown gate kind");
}

}  // namespace qsurg::groupalg
