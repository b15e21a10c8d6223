#include <cstdlib>
#include <cstring>

#include "qsurg/kernels.hpp"

namespace qsurg::kernels {

namespace {

Backend& backend_slot() {
  static Backend b = default_backend();
  return b;
}

}  // namespace

Backend default_backend() {
  const char* env = std::getenv("QSURG_BACKEND");
  if (env != nullptr) {
    if (std::strcmp(env, "serial") == 0) return Backend::Serial;
    if (std::strcmp(env, "openmp") == 0) return Backend::OpenMP;
  }
#ifdef QSURG_HAVE_OPENMP
  return Backend::OpenMP;
#else
  return Backend::Serial;
#endif
}

Backend active_backend() { return backend_slot(); }

void set_backend(Backend b) { backend_slot() = b; }

#define QSURG_DISPATCH(call)                 \
  if (active_backend() == Backend::Serial) { \
    serial::call;                            \
  } else {                                   \
    omp::call;                               \
  }

void apply_terms(const Cx* in, Cx* out, int d, int num_edges,
                 const std::vector<int>& support,
                 const std::vector<Term>& terms) {
  QSURG_DISPATCH(apply_terms(in, out, d, num_edges, support, terms))
}

void apply_dense_local(const Cx* in, Cx* out, int d, int num_edges,
                       const std::vector<int>& targets, const Cx* matrix) {
  QSURG_DISPATCH(apply_dense_local(in, out, d, num_edges, targets, matrix))
}

void contract_edge(const Cx* in, Cx* out, int d, int num_edges, int edge,
                   const Cx* bra) {
  QSURG_DISPATCH(contract_edge(in, out, d, num_edges, edge, bra))
}

void insert_edge(const Cx* in, Cx* out, int d, int num_edges, int edge,
                 const Cx* ket) {
  QSURG_DISPATCH(insert_edge(in, out, d, num_edges, edge, ket))
}

void permute_edges(const Cx* in, Cx* out, int d, int num_edges,
                   const std::vector<int>& perm) {
  QSURG_DISPATCH(permute_edges(in, out, d, num_edges, perm))
}

#undef QSURG_DISPATCH

double norm2(const Cx* v, size_t n) {
  return active_backend() == Backend::Serial ? serial::norm2(v, n)
                                             : omp::norm2(v, n);
}

Cx dot(const Cx* a, const Cx* b, size_t n) {
  return active_backend() == Backend::Serial ? serial::dot(a, b, n)
                                             : omp::dot(a, b, n);
}

void scale(Cx* v, size_t n, Cx s) {
  if (active_backend() == Backend::Serial)
    serial::scale(v, n, s);
  else
    omp::scale(v, n, s);
}

}  // namespace qsurg::kernels
