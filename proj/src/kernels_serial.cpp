#include <cmath>

#include "qsurg/kernels.hpp"

// Reference backend: plain loops, no threading, written for clarity. The
// OpenMP backend in kernels_omp.cpp must match this bit for bit on the same
// inputs (up to floating point reduction order in norm2/dot).

namespace qsurg::kernels::serial {

namespace {

size_t pow_sz(int d, int e) {
  size_t r = 1;
  for (int i = 0; i < e; ++i) r *= static_cast<size_t>(d);
  return r;
}

std::vector<Cx> omega_table(int d) {
  std::vector<Cx> t(d);
  for (int k = 0; k < d; ++k) t[k] = omega(d, k);
  return t;
}

}  // namespace

void apply_terms(const Cx* in, Cx* out, int d, int num_edges,
                 const std::vector<int>& support,
                 const std::vector<Term>& terms) {
  const int k = static_cast<int>(support.size());
  const size_t n = pow_sz(d, num_edges);
  std::vector<size_t> stride(k);
  for (int e = 0; e < k; ++e) {
    if (support[e] < 0 || support[e] >= num_edges)
      throw std::invalid_argument("support edge out of range");
    stride[e] = pow_sz(d, support[e]);
  }
  const auto om = omega_table(d);

  std::vector<int> digits(k);
  for (size_t idx = 0; idx < n; ++idx) {
    for (int e = 0; e < k; ++e)
      digits[e] = static_cast<int>((idx / stride[e]) % d);
    Cx acc{};
    for (const Term& t : terms) {
      long long arg = 0;
      size_t src = idx;
      for (int e = 0; e < k; ++e) {
        arg += static_cast<long long>(t.phase[e]) * digits[e];
        int y = mod_d(digits[e] - t.shift[e], d);
        src += (static_cast<size_t>(y) - digits[e]) * stride[e];
      }
      acc += t.coeff * om[mod_d(arg, d)] * in[src];
    }
    out[idx] = acc;
  }
}

void apply_dense_local(const Cx* in, Cx* out, int d, int num_edges,
                       const std::vector<int>& targets, const Cx* matrix) {
  const int k = static_cast<int>(targets.size());
  const size_t n = pow_sz(d, num_edges);
  const size_t dk = pow_sz(d, k);
  std::vector<size_t> stride(k);
  for (int e = 0; e < k; ++e) stride[e] = pow_sz(d, targets[e]);

  // offset[b] = position shift of block index b across the target edges
  std::vector<size_t> offset(dk, 0);
  for (size_t b = 0; b < dk; ++b) {
    size_t rem = b;
    for (int e = 0; e < k; ++e) {
      offset[b] += (rem % d) * stride[e];
      rem /= d;
    }
  }

  for (size_t idx = 0; idx < n; ++idx) {
    size_t bout = 0;
    for (int e = k - 1; e >= 0; --e)
      bout = bout * d + (idx / stride[e]) % d;
    const size_t base = idx - offset[bout];
    Cx acc{};
    const Cx* row = matrix + bout * dk;
    for (size_t bin = 0; bin < dk; ++bin)
      acc += row[bin] * in[base + offset[bin]];
    out[idx] = acc;
  }
}

void contract_edge(const Cx* in, Cx* out, int d, int num_edges, int edge,
                   const Cx* bra) {
  const size_t lo = pow_sz(d, edge);
  const size_t n_out = pow_sz(d, num_edges - 1);
  for (size_t r = 0; r < n_out; ++r) {
    const size_t low = r % lo;
    const size_t high = r / lo;
    Cx acc{};
    for (int x = 0; x < d; ++x)
      acc += std::conj(bra[x]) * in[low + (x + high * d) * lo];
    out[r] = acc;
  }
}

void insert_edge(const Cx* in, Cx* out, int d, int num_edges, int edge,
                 const Cx* ket) {
  const size_t lo = pow_sz(d, edge);
  const size_t n_out = pow_sz(d, num_edges + 1);
  for (size_t idx = 0; idx < n_out; ++idx) {
    const int x = static_cast<int>((idx / lo) % d);
    const size_t r = idx % lo + idx / (lo * d) * lo;
    out[idx] = ket[x] * in[r];
  }
}

void permute_edges(const Cx* in, Cx* out, int d, int num_edges,
                   const std::vector<int>& perm) {
  const size_t n = pow_sz(d, num_edges);
  std::vector<size_t> in_stride(num_edges);
  for (int p = 0; p < num_edges; ++p) in_stride[p] = pow_sz(d, perm[p]);
  for (size_t idx = 0; idx < n; ++idx) {
    size_t src = 0;
    size_t rem = idx;
    for (int p = 0; p < num_edges; ++p) {
      src += (rem % d) * in_stride[p];
      rem /= d;
    }
    out[idx] = in[src];
  }
}

double norm2(const Cx* v, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += std::norm(v[i]);
  return s;
}

Cx dot(const Cx* a, const Cx* b, size_t n) {
  Cx s{};
  for (size_t i = 0; i < n; ++i) s += std::conj(a[i]) * b[i];
  return s;
}

void scale(Cx* v, size_t n, Cx s) {
  for (size_t i = 0; i < n; ++i) v[i] *= s;
}

}  // namespace qsurg::kernels::serial
