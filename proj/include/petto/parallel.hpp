#pragma once

#include <cstdint>

namespace petto::par {

using Index = std::int64_t;

/// Worker count for node-parallel kernels. 1 = strictly serial execution
/// (bit-exact reductions, required for regression runs), 0 = hardware default.
void set_threads(int n);
int threads();

/// True when kernels must run on a single thread.
bool serial();

/// Sum of term(i) for i in [0, n). Accumulates in double. Serial mode uses a
/// plain left-to-right loop so results are reproducible bit for bit.
template <class F>
double sum_nodes(Index n, F&& term) {
    double s = 0.0;
    if (serial()) {
        for (Index i = 0; i < n; ++i) s += term(i);
        return s;
    }
#pragma omp parallel for schedule(static) reduction(+ : s)
    for (Index i = 0; i < n; ++i) s += term(i);
    return s;
}

/// Max of |term(i)|. Order-independent, safe to parallelize in any mode.
template <class F>
double max_abs_nodes(Index n, F&& term) {
    double m = 0.0;
#pragma omp parallel for schedule(static) reduction(max : m) if (!serial())
    for (Index i = 0; i < n; ++i) {
        const double v = term(i);
        const double a = v < 0 ? -v : v;
        if (a > m) m = a;
    }
    return m;
}

} // namespace petto::par
