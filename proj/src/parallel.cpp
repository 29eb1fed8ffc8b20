#include "camadapt/parallel.hpp"

#include <Eigen/Core>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace camadapt {

void configure_threads() {
  Eigen::setNbThreads(1);
#ifdef _OPENMP
  if (const char* env = std::getenv("CAMADAPT_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace camadapt
