#pragma once

#include <stdexcept>
#include <string>

namespace seqpipe {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid experiment configuration, schema violations, bad pipeline steps.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An operation was called before its inputs exist (e.g. fitting an
// unmaterialized variant).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Malformed or insufficient data: misaligned corpora, too-small corpora,
// duplicate keys.
class DataError : public Error {
 public:
  using Error::Error;
};

// A translator returned output that breaks the one-line-in/one-line-out
// contract.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace seqpipe
