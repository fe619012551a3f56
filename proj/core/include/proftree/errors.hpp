#pragma once

#include <stdexcept>

namespace proftree {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Unreadable file, malformed CSV/JSON/config input.
struct IoError : Error {
  using Error::Error;
};

/// Data that cannot support the requested computation
/// (single-class sample, empty dataset after cleaning, ...).
struct DataError : Error {
  using Error::Error;
};

/// A tree applied to a dataset it is not compatible with.
struct SchemaError : Error {
  using Error::Error;
};

/// Failure of a numeric kernel to reach its accuracy target.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace proftree
