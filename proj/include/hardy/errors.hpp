#pragma once

#include <stdexcept>
#include <string>

namespace hardy {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "InvalidArgument"; }
};

/// Neither interval halving nor cube halving produced admissible children.
class NoAdmissibleSplit : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "NoAdmissibleSplit"; }
};

/// A point of a Calderón–Zygmund set lies outside B(x_R, kappa0 r_R).
class ContainmentViolation : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "ContainmentViolation"; }
};

/// A set is not resolvable by the partition (it leaves the computation domain).
class RegionNotResolved : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "RegionNotResolved"; }
};

class SupportViolation : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "SupportViolation"; }
};

class RootAverageTooLarge : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "RootAverageTooLarge"; }
};

class AlphaTooSmall : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "AlphaTooSmall"; }
};

class NonzeroMean : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "NonzeroMean"; }
};

class ZeroBMONorm : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "ZeroBMONorm"; }
};

class NonFiniteKernelValue : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "NonFiniteKernelValue"; }
};

class AtomInvalid : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "AtomInvalid"; }
};

class ExponentOrder : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "ExponentOrder"; }
};

class EmptyGrid : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "EmptyGrid"; }
};

class ConfigInvalid : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "ConfigInvalid"; }
};

}  // namespace hardy
