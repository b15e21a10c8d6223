#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qsurg/kernels.hpp"
#include "qsurg/types.hpp"

using qsurg::Cx;
namespace kn = qsurg::kernels;

namespace {

double time_ms(const std::function<void()>& f, int repeats) {
  f();  // warm up
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < repeats; ++i) f();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / repeats;
}

}  // namespace

int main(int argc, char** argv) {
  int d = argc > 1 ? std::atoi(argv[1]) : 2;
  int e = argc > 2 ? std::atoi(argv[2]) : 20;
  int repeats = argc > 3 ? std::atoi(argv[3]) : 5;
  size_t n = 1;
  for (int i = 0; i < e; ++i) n *= d;
  std::printf("kernel benchmark: d=%d edges=%d amplitudes=%zu repeats=%d\n", d,
              e, n, repeats);

  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<Cx> in(n), out_s(n), out_p(n);
  for (auto& a : in) a = Cx(uni(rng), uni(rng));

  // a four-edge shift/phase operator with d^2 terms
  std::vector<int> support = {0, e / 2, e - 2, e - 1};
  std::vector<kn::Term> terms;
  for (int i = 0; i < d * d; ++i) {
    kn::Term t;
    t.coeff = Cx(uni(rng), uni(rng));
    for (int k = 0; k < 4; ++k) {
      t.shift.push_back(static_cast<int>(rng() % d));
      t.phase.push_back(static_cast<int>(rng() % d));
    }
    terms.push_back(std::move(t));
  }

  // a dense two-edge gate
  std::vector<int> targets = {1, e - 1};
  std::vector<Cx> matrix(static_cast<size_t>(d) * d * d * d);
  for (auto& a : matrix) a = Cx(uni(rng), uni(rng));

  std::vector<Cx> edge_vec(d);
  for (auto& a : edge_vec) a = Cx(uni(rng), uni(rng));

  std::vector<int> perm(e);
  for (int i = 0; i < e; ++i) perm[i] = (i + 3) % e;

  std::vector<Cx> small(n / d);

  struct Row {
    const char* name;
    std::function<void(bool)> run;
  };
  std::vector<Row> rows = {
      {"apply_terms",
       [&](bool omp) {
         if (omp)
           kn::omp::apply_terms(in.data(), (omp ? out_p : out_s).data(), d, e,
                                support, terms);
         else
           kn::serial::apply_terms(in.data(), out_s.data(), d, e, support,
                                   terms);
       }},
      {"apply_dense_local",
       [&](bool omp) {
         if (omp)
           kn::omp::apply_dense_local(in.data(), out_p.data(), d, e, targets,
                                      matrix.data());
         else
           kn::serial::apply_dense_local(in.data(), out_s.data(), d, e,
                                         targets, matrix.data());
       }},
      {"contract_edge",
       [&](bool omp) {
         if (omp)
           kn::omp::contract_edge(in.data(), small.data(), d, e, e / 2,
                                  edge_vec.data());
         else
           kn::serial::contract_edge(in.data(), small.data(), d, e, e / 2,
                                     edge_vec.data());
       }},
      {"insert_edge",
       [&](bool omp) {
         if (omp)
           kn::omp::insert_edge(small.data(), out_p.data(), d, e - 1, e / 2,
                                edge_vec.data());
         else
           kn::serial::insert_edge(small.data(), out_s.data(), d, e - 1, e / 2,
                                   edge_vec.data());
       }},
      {"permute_edges",
       [&](bool omp) {
         if (omp)
           kn::omp::permute_edges(in.data(), out_p.data(), d, e, perm);
         else
           kn::serial::permute_edges(in.data(), out_s.data(), d, e, perm);
       }},
      {"norm2",
       [&](bool omp) {
         volatile double sink = omp ? kn::omp::norm2(in.data(), n)
                                    : kn::serial::norm2(in.data(), n);
         (void)sink;
       }},
      {"dot",
       [&](bool omp) {
         volatile double sink =
             std::abs(omp ? kn::omp::dot(in.data(), out_p.data(), n)
                          : kn::serial::dot(in.data(), out_s.data(), n));
         (void)sink;
       }},
  };

  // agreement check before timing
  kn::serial::apply_terms(in.data(), out_s.data(), d, e, support, terms);
  kn::omp::apply_terms(in.data(), out_p.data(), d, e, support, terms);
  double dev = 0.0;
  for (size_t i = 0; i < n; ++i)
    dev = std::max(dev, std::abs(out_s[i] - out_p[i]));
  std::printf("backend agreement on apply_terms: max deviation %.3e\n\n", dev);

  std::printf("%-20s %12s %12s %8s\n", "kernel", "serial ms", "openmp ms",
              "ratio");
  for (auto& row : rows) {
    double ts = time_ms([&] { row.run(false); }, repeats);
    double tp = time_ms([&] { row.run(true); }, repeats);
    std::printf("%-20s %12.3f %12.3f %8.2f\n", row.name, ts, tp,
                tp > 0 ? ts / tp : 0.0);
  }
  return 0;
}
