#pragma once

#include <cstddef>

#include <omp.h>

namespace bad {

// Runs fn(unit) for every unit in [0, n). With P == 1 this is the plain serial loop that serves
// as the reference path; otherwise units are scheduled dynamically over P OpenMP threads. Callers
// write per-unit outputs and merge them in unit order, so results never depend on P.
template <class Fn>
void for_each_unit(std::size_t parallelism, std::size_t n, Fn&& fn) {
  if (parallelism <= 1 || n <= 1) {
    for (std::size_t u = 0; u < n; ++u) fn(u);
    return;
  }
  const auto count = static_cast<long>(n);
#pragma omp parallel for num_threads(static_cast<int>(parallelism)) schedule(dynamic, 1)
  for (long u = 0; u < count; ++u) fn(static_cast<std::size_t>(u));
}

inline int hardware_threads() { return omp_get_num_procs(); }

}  // namespace bad
