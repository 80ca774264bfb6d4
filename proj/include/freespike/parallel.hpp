#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#include <omp.h>

namespace freespike {

/// Execution policy for the data-parallel kernels. `serial` is the reference path kept for
/// testing; both paths produce bit-identical results because every index is computed
/// independently and written to its own slot.
enum class Exec { serial, parallel };

inline int max_threads() { return omp_get_max_threads(); }
inline void set_threads(int n) {
    if (n > 0) omp_set_num_threads(n);
}

/// Runs body(i) for i in [0, n). Exceptions thrown by the body are captured and the first one
/// (in completion order) is rethrown after the loop.
template <class Body>
void for_each_index(std::size_t n, Exec exec, Body&& body) {
    if (exec == Exec::serial || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr first;
    std::mutex guard;
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard<std::mutex> lock(guard);
            if (!first) first = std::current_exception();
        }
    }
    if (first) std::rethrow_exception(first);
}

}  // namespace freespike
