#pragma once

#include <stdexcept>
#include <string>

namespace tenkit {

// Error taxonomy shared by the whole library. The C API and the CLI map these
// onto status/exit codes: validation and I/O failures are caller errors,
// numerical and overflow failures happen while computing.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& what) : Error(what) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error(what) {}
};

class OverflowError : public Error {
public:
  explicit OverflowError(const std::string& what) : Error(what) {}
};

}  // namespace tenkit
