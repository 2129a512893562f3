#pragma once

#include <stdexcept>
#include <string>

namespace velu {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidParamsError : Error {
  using Error::Error;
};

struct EmptyBatchError : Error {
  EmptyBatchError() : Error("batch is empty") {}
};

struct NonFiniteInputError : Error {
  using Error::Error;
};

struct BatchTooLargeError : Error {
  using Error::Error;
};

struct InvalidRangeError : Error {
  using Error::Error;
};

struct NonPositiveStdError : Error {
  using Error::Error;
};

struct ShapeMismatchError : Error {
  using Error::Error;
};

struct NonFiniteActivationError : Error {
  explicit NonFiniteActivationError(std::size_t layer)
      : Error("non-finite activation output in layer " + std::to_string(layer)),
        layer_index(layer) {}
  std::size_t layer_index;
};

struct StaleCacheError : Error {
  StaleCacheError() : Error("forward cache is stale: model parameters changed since forward()") {}
};

struct BadMagicError : Error {
  using Error::Error;
};

struct TruncatedFileError : Error {
  using Error::Error;
};

struct DimensionMismatchError : Error {
  using Error::Error;
};

struct EmptyDatasetError : Error {
  EmptyDatasetError() : Error("dataset is empty") {}
};

struct LayerIndexOutOfRangeError : Error {
  using Error::Error;
};

// Thrown by the training loop when a loss value goes non-finite.
// The message carries the remediation hint surfaced by the CLI.
struct DivergenceDetectedError : Error {
  using Error::Error;
};

}  // namespace velu
