#ifndef LORENZ_PARALLEL_HPP
#define LORENZ_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace lorenz {

// Worker cap: LORENZ_LAB_THREADS if set (>=1), else hardware concurrency.
int max_threads();

// Runs f(i) for i in [0, n) across worker threads. Callers write results
// into index-addressed storage so the outcome is thread-count independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

}  // namespace lorenz

#endif
