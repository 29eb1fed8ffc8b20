// Timing comparison between the serial reference kernels and their OpenMP
// versions, plus a bitwise equality check between the two.
#include <omp.h>

#include <cstdio>

#include "camadapt/gfk.hpp"
#include "camadapt/parallel.hpp"
#include "camadapt/rng.hpp"
#include "camadapt/subspace.hpp"

using namespace camadapt;

namespace {

Matrix random_rows(Rng& rng, int n, int d) {
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.gaussian();
  }
  return m;
}

}  // namespace

int main() {
  configure_threads();
  Rng rng(42);

  const int ambient = 64;
  const int dim = 16;
  Subspace a = pca_subspace(random_rows(rng, 400, ambient), dim, "a");
  Subspace b = pca_subspace(random_rows(rng, 400, ambient), dim, "b");
  FlowDecomposition flow = flow_decompose(a, b);

  const int panels = 20000;
  double t0 = omp_get_wtime();
  Kernel serial = gfk_quadrature_oracle_serial(flow, panels);
  double t1 = omp_get_wtime();
  Kernel parallel = gfk_quadrature_oracle(flow, panels);
  double t2 = omp_get_wtime();
  const bool quad_equal = serial.matrix == parallel.matrix;
  std::printf("quadrature (%d panels): serial %.3fs, parallel %.3fs (%d threads), %s\n",
              panels, t1 - t0, t2 - t1, max_threads(),
              quad_equal ? "bitwise equal" : "MISMATCH");

  Matrix probes = random_rows(rng, 1500, ambient);
  Matrix gallery = random_rows(rng, 1500, ambient);
  t0 = omp_get_wtime();
  Matrix dist_serial = kernel_distance_serial(serial, probes, gallery);
  t1 = omp_get_wtime();
  Matrix dist_parallel = kernel_distance(serial, probes, gallery);
  t2 = omp_get_wtime();
  const bool dist_equal = dist_serial == dist_parallel;
  std::printf("kernel distance (1500x1500): serial %.3fs, parallel %.3fs, %s\n", t1 - t0,
              t2 - t1, dist_equal ? "bitwise equal" : "MISMATCH");

  return quad_equal && dist_equal ? 0 : 1;
}
