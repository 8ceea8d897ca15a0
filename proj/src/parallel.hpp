#pragma once

// SPDX-License-Identifier: Apache-2.0

#include <cstddef>
#include <exception>
#include <vector>

#include "genfrontier/core_metrics.hpp"

namespace genfrontier::detail {

// Runs body(i) for i in [0, n). Work items must write only to their own slot.
// If any item throws, the exception from the lowest index is rethrown so the
// error reported does not depend on thread scheduling.
template <typename Body>
void for_each_index(std::size_t n, Execution execution, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
  if (execution == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < count; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  } else {
    for (long long i = 0; i < count; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace genfrontier::detail
