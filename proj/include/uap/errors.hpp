#pragma once

#include <stdexcept>
#include <string>

namespace uap {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by the caller (bad shape, out-of-range value, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Malformed or unsupported file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A metric has no defined value for the given input (e.g. log of a non-positive peak).
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

/// Input lies on a singularity of the tanh-space inverse (w == 0 or w == 1).
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Pooled proportion is 0 or 1, so the z statistic has zero variance.
class DegenerateVariance : public Error {
 public:
  using Error::Error;
};

}  // namespace uap
