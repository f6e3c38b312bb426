#pragma once

#include <stdexcept>
#include <string>

namespace recipebench {

// Base class for every error raised by the library.
struct Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File could not be opened, read, or written.
struct IoError : public Error {
  using Error::Error;
};

// Invalid configuration, missing config files, unknown registry ids.
struct ConfigError : public Error {
  using Error::Error;
};

// Input data violates a contract (empty corpus, id mismatch, bad values).
struct DataError : public Error {
  using Error::Error;
};

// A judge response could not be turned into a valid verdict.
struct VerdictError : public Error {
  std::string raw_response;
  VerdictError(const std::string& message, std::string raw)
      : Error(message), raw_response(std::move(raw)) {}
};

// Remote judge transport failures.
struct NetworkError : public Error {
  using Error::Error;
};

struct AuthError : public NetworkError {
  using NetworkError::NetworkError;
};

}  // namespace recipebench
