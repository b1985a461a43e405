#pragma once

#include <stdexcept>
#include <string>

namespace binlite {

// Shape/dimension mismatches anywhere in the tensor or layer stack.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Bad hyperparameters, impossible presets, invalid thread counts, etc.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Operation called in the wrong order (e.g. backward without a cached forward).
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

// Class label outside [0, num_classes).
struct LabelError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Non-finite loss or similar numeric breakdown.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dataset ingestion problems (missing root, empty class folder, ...).
struct IngestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Image decoding failures; message names the offending file.
struct DecodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem-level I/O failure.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Model file loading errors, one subtype per failure class.
struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BadMagicError : LoadError {
  using LoadError::LoadError;
};
struct BadVersionError : LoadError {
  using LoadError::LoadError;
};
struct TruncatedError : LoadError {
  using LoadError::LoadError;
};
struct ChecksumError : LoadError {
  using LoadError::LoadError;
};

} // namespace binlite
