#pragma once

#include <stdexcept>
#include <string>

namespace bfore {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (wrong colorspace, bad kernel size, ...).
class ContractError : public Error {
public:
  using Error::Error;
};

/// An image file could not be read or written.
class IoError : public Error {
public:
  using Error::Error;
};

/// The file exists but its contents could not be decoded.
class DecodeError : public IoError {
public:
  using IoError::IoError;
};

/// The requested operation needs data the dataset does not have (e.g. a reference image).
class CapabilityError : public Error {
public:
  using Error::Error;
};

} // namespace bfore
