#pragma once

#include <stdexcept>
#include <string>

namespace sphfit {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

// Base for failures of the numerics themselves (as opposed to bad input).
class NumericalError : public Error {
public:
  using Error::Error;
};

class InfeasibleDegree : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class IllConditioned : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class IoError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace sphfit
