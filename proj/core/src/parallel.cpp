#include "prefine/parallel.hpp"

#include <omp.h>

#include "prefine/error.hpp"

namespace prefine {

void set_thread_count(int threads) {
  if (threads < 1) throw ParameterError("thread count must be >= 1");
  omp_set_num_threads(threads);
}

int thread_count() { return omp_get_max_threads(); }

}  // namespace prefine
