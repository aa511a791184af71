// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#include <omp.h>

namespace sgdlab {

/// Worker count for replica-parallel kernels. workers <= 1 selects the serial
/// reference path.
struct Execution {
  int workers = 1;
};

/// Serial reference: replicas in index order on the calling thread.
template <class Fn>
void for_each_replica_serial(std::size_t n, Fn&& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

/// OpenMP kernel. fn(i) must only write replica-owned state; exceptions are
/// captured per replica and the first one (by index) is rethrown.
template <class Fn>
void for_each_replica_omp(std::size_t n, int workers, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (long long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Results are bit-identical across worker counts as long as callers reduce
/// per-replica outputs in index order.
template <class Fn>
void for_each_replica(std::size_t n, const Execution& exec, Fn&& fn) {
  if (exec.workers <= 1)
    for_each_replica_serial(n, fn);
  else
    for_each_replica_omp(n, exec.workers, fn);
}

}  // namespace sgdlab
