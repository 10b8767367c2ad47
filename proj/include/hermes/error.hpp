#pragma once

#include <stdexcept>
#include <string>

namespace hermes {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid code, chunking or fingerprint parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// A deviation that no transform output could have produced.
class CorruptDeviation : public Error {
 public:
  using Error::Error;
};

class CorruptInput : public Error {
 public:
  using Error::Error;
};

// A token referenced a fingerprint the receiving store does not hold.
class MissingBasis : public Error {
 public:
  using Error::Error;
};

// Payload does not hash to the fingerprint it was sent with.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Two different payloads share one (truncated) fingerprint.
class CollisionError : public Error {
 public:
  using Error::Error;
};

class FrameError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace hermes
