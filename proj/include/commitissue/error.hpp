#pragma once

#include <stdexcept>
#include <string>

namespace commitissue {

/// Base class for every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data breaks a documented invariant (bad offsets, bad JSON fields).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a precondition (too few records, mismatched dimensions).
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace commitissue
