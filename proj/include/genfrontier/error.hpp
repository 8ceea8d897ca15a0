#pragma once

// SPDX-License-Identifier: Apache-2.0

#include <stdexcept>
#include <string>

namespace genfrontier {

/// Base for every error the toolkit raises on bad input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid invocation or configuration (CLI exit code 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A frontier query outside the swept entropy range. Carries the nearest
/// endpoint so callers can report what *is* supported instead of extrapolating.
class OutOfRangeError : public DataError {
 public:
  OutOfRangeError(const std::string& what, double query, double nearest_entropy,
                  double nearest_ppl)
      : DataError(what),
        query_(query),
        nearest_entropy_(nearest_entropy),
        nearest_ppl_(nearest_ppl) {}

  double query() const noexcept { return query_; }
  double nearest_entropy() const noexcept { return nearest_entropy_; }
  double nearest_ppl() const noexcept { return nearest_ppl_; }

 private:
  double query_;
  double nearest_entropy_;
  double nearest_ppl_;
};

}  // namespace genfrontier
