#pragma once

#include <stdexcept>
#include <string>

namespace tagcf {

// Base class for all library failures so callers can catch tagcf errors
// separately from generic std exceptions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (TSV, JSONL, TOML, service responses). Messages carry
// file and line context where available.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or an inconsistent combination of options.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Structural inconsistency in data: dangling edge endpoints, id mismatches,
// shape disagreements between artifacts.
class StructureError : public Error {
 public:
  using Error::Error;
};

// k-core filtering removed every node. Split out so pipelines can distinguish
// "graph too sparse for this k" from genuine structural corruption.
class EmptyCoreError : public StructureError {
 public:
  using StructureError::StructureError;
};

// Non-finite values produced during numeric computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// An operation was invoked without the state it depends on (e.g. a backward
// pass without a forward cache).
class StateError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures: missing artifacts, unwritable outputs, short reads.
class IoError : public Error {
 public:
  using Error::Error;
};

// Corrupt binary artifact: bad magic, unsupported version, CRC mismatch,
// truncation.
class CorruptionError : public IoError {
 public:
  using IoError::IoError;
};

// Network-level failure talking to a remote service after retries are
// exhausted.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace tagcf
