#pragma once
#include <exception>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tvnet/types.hpp"

namespace tvnet {

/// Runs body(i) for i in [0, n). Every iteration writes only its own output
/// slot, so the parallel and serial forms give identical results. If several
/// iterations throw, the exception of the lowest index is rethrown.
template <class Body>
void parallel_for(Exec exec, Index n, Body&& body) {
#ifdef _OPENMP
    if (exec == Exec::parallel && n > 1 && omp_get_max_threads() > 1) {
        std::exception_ptr error;
        Index error_index = std::numeric_limits<Index>::max();
#pragma omp parallel for schedule(dynamic, 4)
        for (Index i = 0; i < n; ++i) {
            try {
                body(i);
            } catch (...) {
#pragma omp critical(tvnet_parallel_for_error)
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
        if (error) std::rethrow_exception(error);
        return;
    }
#endif
    (void)exec;
    for (Index i = 0; i < n; ++i) body(i);
}

inline int available_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_threads(int count) {
#ifdef _OPENMP
    if (count > 0) omp_set_num_threads(count);
#else
    (void)count;
#endif
}

} // namespace tvnet
