#include <cmath>

#include "qsurg/kernels.hpp"

// Parallel backend. Every kernel is written in gather form (each output
// amplitude computed independently), so the loops are race free and
// schedule(static) keeps the partitioning deterministic. Without OpenMP
// this compiles to plain serial loops.

namespace qsurg::kernels::omp {

namespace {

size_t pow_sz(int d, int e) {
  size_t r = 1;
  for (int i = 0; i < e; ++i) r *= static_cast<size_t>(d);
  return r;
}

}  // namespace

void apply_terms(const Cx* in, Cx* out, int d, int num_edges,
                 const std::vector<int>& support,
                 const std::vector<Term>& terms) {
  const int k = static_cast<int>(support.size());
  const long long n = static_cast<long long>(pow_sz(d, num_edges));
  std::vector<size_t> stride(k);
  for (int e = 0; e < k; ++e) {
    if (support[e] < 0 || support[e] >= num_edges)
      throw std::invalid_argument("support edge out of range");
    stride[e] = pow_sz(d, support[e]);
  }
  std::vector<Cx> om(d);
  for (int i = 0; i < d; ++i) om[i] = omega(d, i);

  // Flatten the terms: per term, per support edge, the shift reduced mod d
  // and the phase row, so the hot loop touches plain arrays only.
  const int nt = static_cast<int>(terms.size());
  std::vector<int> shift(static_cast<size_t>(nt) * k);
  std::vector<int> phase(static_cast<size_t>(nt) * k);
  std::vector<Cx> coeff(nt);
  for (int t = 0; t < nt; ++t) {
    coeff[t] = terms[t].coeff;
    for (int e = 0; e < k; ++e) {
      shift[static_cast<size_t>(t) * k + e] = mod_d(terms[t].shift[e], d);
      phase[static_cast<size_t>(t) * k + e] = mod_d(terms[t].phase[e], d);
    }
  }

#ifdef QSURG_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long idx = 0; idx < n; ++idx) {
    Cx acc{};
    for (int t = 0; t < nt; ++t) {
      long long arg = 0;
      long long src = idx;
      const int* sh = shift.data() + static_cast<size_t>(t) * k;
      const int* ph = phase.data() + static_cast<size_t>(t) * k;
      for (int e = 0; e < k; ++e) {
        const int dig = static_cast<int>((idx / stride[e]) % d);
        arg += static_cast<long long>(ph[e]) * dig;
        int y = dig - sh[e];
        if (y < 0) y += d;
        src += (static_cast<long long>(y) - dig) *
               static_cast<long long>(stride[e]);
      }
      acc += coeff[t] * om[mod_d(arg, d)] * in[src];
    }
    out[idx] = acc;
  }
}

void apply_dense_local(const Cx* in, Cx* out, int d, int num_edges,
                       const std::vector<int>& targets, const Cx* matrix) {
  const int k = static_cast<int>(targets.size());
  const long long n = static_cast<long long>(pow_sz(d, num_edges));
  const size_t dk = pow_sz(d, k);
  std::vector<size_t> stride(k);
  for (int e = 0; e < k; ++e) stride[e] = pow_sz(d, targets[e]);
  std::vector<size_t> offset(dk, 0);
  for (size_t b = 0; b < dk; ++b) {
    size_t rem = b;
    for (int e = 0; e < k; ++e) {
      offset[b] += (rem % d) * stride[e];
      rem /= d;
    }
  }

#ifdef QSURG_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long idx = 0; idx < n; ++idx) {
    size_t bout = 0;
    for (int e = k - 1; e >= 0; --e)
      bout = bout * d + (static_cast<size_t>(idx) / stride[e]) % d;
    const size_t base = static_cast<size_t>(idx) - offset[bout];
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
  const long long n_out = static_cast<long long>(pow_sz(d, num_edges - 1));
#ifdef QSURG_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long r = 0; r < n_out; ++r) {
    const size_t low = static_cast<size_t>(r) % lo;
    const size_t high = static_cast<size_t>(r) / lo;
    Cx acc{};
    for (int x = 0; x < d; ++x)
      acc += std::conj(bra[x]) * in[low + (x + high * d) * lo];
    out[r] = acc;
  }
}

void insert_edge(const Cx* in, Cx* out, int d, int num_edges, int edge,
                 const Cx* ket) {
  const size_t lo = pow_sz(d, edge);
  const long long n_out = static_cast<long long>(pow_sz(d, num_edges + 1));
#ifdef QSURG_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long idx = 0; idx < n_out; ++idx) {
    const size_t u = static_cast<size_t>(idx);
    const int x = static_cast<int>((u / lo) % d);
    const size_t r = u % lo + u / (lo * d) * lo;
    out[idx] = ket[x] * in[r];
  }
}

void permute_edges(const Cx* in, Cx* out, int d, int num_edges,
                   const std::vector<int>& perm) {
  const long long n = static_cast<long long>(pow_sz(d, num_edges));
  std::vector<size_t> in_stride(num_edges);
  for (int p = 0; p < num_edges; ++p) in_stride[p] = pow_sz(d, perm[p]);
#ifdef QSURG_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long idx = 0; idx < n; ++idx) {
    size_t src = 0;
    size_t rem = static_cast<size_t>(idx);
    for (int p = 0; p < num_edges; ++p) {
      src += (rem % d) * in_stride[p];
      rem /= d;
    }
    out[idx] = in[src];
  }
}

double norm2(const Cx* v, size_t n) {
  double s = 0.0;
  const long long nn = static_cast<long long>(n);
#ifdef QSURG_HAVE_OPENMP
#pragma omp parallel for schedule(static) reduction(+ : s)
#endif
  for (long long i = 0; i < nn; ++i) s += std::norm(v[i]);
  return s;
}

Cx dot(const Cx* a, const Cx* b, size_t n) {
  double re = 0.0, im = 0.0;
  const long long nn = static_cast<long long>(n);
#ifdef QSURG_HAVE_OPENMP
#pragma omp parallel for schedule(static) reduction(+ : re, im)
#endif
  for (long long i = 0; i < nn; ++i) {
    const Cx v = std::conj(a[i]) * b[i];
    re += v.real();
    im += v.imag();
  }
  return {re, im};
}

void scale(Cx* v, size_t n, Cx s) {
  const long long nn = static_cast<long long>(n);
#ifdef QSURG_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long i = 0; i < nn; ++i) v[i] *= s;
}

}  // namespace qsurg::kernels::omp
