#pragma once

#include <cstddef>
#include <vector>

#include "qsurg/types.hpp"

namespace qsurg::kernels {

// Dense state-vector kernels over E qudits of dimension d, little-endian
// mixed radix: amplitude index = sum_e x_e * d^e. Two interchangeable
// backends are provided: a plain serial reference and an OpenMP-parallel
// version. Tests check them against each other; bench_kernels times them.
enum class Backend { Serial, OpenMP };

Backend active_backend();
void set_backend(Backend b);
// Resolves QSURG_BACKEND=serial|openmp from the environment, else the
// default (OpenMP when compiled in, serial otherwise).
Backend default_backend();

// One term of a shift/phase operator on `support` (see sim::LocalOperator):
// coeff * diag(q^{<phase, x>}) * Shift(shift), phases evaluated on the
// output configuration.
struct Term {
  Cx coeff;
  std::vector<int> shift;
  std::vector<int> phase;
};

void apply_terms(const Cx* in, Cx* out, int d, int num_edges,
                 const std::vector<int>& support,
                 const std::vector<Term>& terms);

// Applies a dense d^k x d^k matrix (row-major) to the `targets` edges,
// targets[0] least significant within the block index.
void apply_dense_local(const Cx* in, Cx* out, int d, int num_edges,
                       const std::vector<int>& targets, const Cx* matrix);

// out[rest] = sum_x conj(bra[x]) * in[insert(rest, edge, x)]; removes one
// edge. out has d^(E-1) amplitudes.
void contract_edge(const Cx* in, Cx* out, int d, int num_edges, int edge,
                   const Cx* bra);

// out[insert(rest, edge, x)] = ket[x] * in[rest]; adds one edge at
// position `edge` of the enlarged register. out has d^(E+1) amplitudes.
void insert_edge(const Cx* in, Cx* out, int d, int num_edges, int edge,
                 const Cx* ket);

// out[y] = in[x] where edge p of the output takes its digit from edge
// perm[p] of the input.
void permute_edges(const Cx* in, Cx* out, int d, int num_edges,
                   const std::vector<int>& perm);

double norm2(const Cx* v, size_t n);
Cx dot(const Cx* a, const Cx* b, size_t n);  // sum conj(a) * b
void scale(Cx* v, size_t n, Cx s);

namespace serial {
void apply_terms(const Cx* in, Cx* out, int d, int num_edges,
                 const std::vector<int>& support,
                 const std::vector<Term>& terms);
void apply_dense_local(const Cx* in, Cx* out, int d, int num_edges,
                       const std::vector<int>& targets, const Cx* matrix);
void contract_edge(const Cx* in, Cx* out, int d, int num_edges, int edge,
                   const Cx* bra);
void insert_edge(const Cx* in, Cx* out, int d, int num_edges, int edge,
                 const Cx* ket);
void permute_edges(const Cx* in, Cx* out, int d, int num_edges,
                   const std::vector<int>& perm);
double norm2(const Cx* v, size_t n);
Cx dot(const Cx* a, const Cx* b, size_t n);
void scale(Cx* v, size_t n, Cx s);
}  // namespace serial

namespace omp {
void apply_terms(const Cx* in, Cx* out, int d, int num_edges,
                 const std::vector<int>& support,
                 const std::vector<Term>& terms);
void apply_dense_local(const Cx* in, Cx* out, int d, int num_edges,
                       const std::vector<int>& targets, const Cx* matrix);
void contract_edge(const Cx* in, Cx* out, int d, int num_edges, int edge,
                   const Cx* bra);
void insert_edge(const Cx* in, Cx* out, int d, int num_edges, int edge,
                 const Cx* ket);
void permute_edges(const Cx* in, Cx* out, int d, int num_edges,
                   const std::vector<int>& perm);
double norm2(const Cx* v, size_t n);
Cx dot(const Cx* a, const Cx* b, size_t n);
void scale(Cx* v, size_t n, Cx s);
}  // namespace omp

}  // namespace qsurg::kernels
