#include "petto/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace petto::par {

namespace {
int g_threads = 0; // 0 = hardware default
}

void set_threads(int n) {
    g_threads = n < 0 ? 0 : n;
#ifdef _OPENMP
    if (g_threads > 0) omp_set_num_threads(g_threads);
#endif
}

int threads() {
#ifdef _OPENMP
    if (g_threads > 0) return g_threads;
    return omp_get_max_threads();
#else
    return 1;
#endif
}

bool serial() { return threads() == 1; }

} // namespace petto::par
