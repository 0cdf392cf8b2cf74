#pragma once

#include <stdexcept>
#include <string>

namespace warerover {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input document (JSON syntax, wrong types, unknown keys).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Document parsed but violates a model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class InfeasibleDensityError : public Error {
 public:
  using Error::Error;
};

class EmptyCatalogError : public Error {
 public:
  using Error::Error;
};

class OutOfStockError : public Error {
 public:
  using Error::Error;
};

class NotActiveError : public Error {
 public:
  using Error::Error;
};

class MalformedPathError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace warerover
