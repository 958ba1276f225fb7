#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace a2p {

/// Run fn(i) for i in [0, n).  workers <= 1 takes the plain serial loop,
/// which is the reference implementation; larger counts fan out with OpenMP.
/// fn must not throw (wrap and record failures inside) and must write only
/// to slots addressed by its own index, so results are independent of the
/// worker count and of scheduling order.
template <class F>
void for_each_index(std::int64_t n, int workers, F&& fn) {
#ifdef _OPENMP
    if (workers > 1) {
#pragma omp parallel for num_threads(workers) schedule(dynamic)
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
#else
    (void)workers;
#endif
    for (std::int64_t i = 0; i < n; ++i) fn(i);
}

inline int hardware_workers() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace a2p
