#pragma once

#include <stdexcept>
#include <string>

namespace dsrsd {

enum class ErrorKind {
  kConfig,
  kShape,
  kUsage,
  kData,
  kIo,
  kNumerical,
};

/// Base of every error raised by the library. The kind decides the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::kShape, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::kUsage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::kNumerical, what) {}
};

// 0 success, 1 config/usage, 2 data/io, 3 numerical failure.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kShape:
    case ErrorKind::kUsage:
      return 1;
    case ErrorKind::kData:
    case ErrorKind::kIo:
      return 2;
    case ErrorKind::kNumerical:
      return 3;
  }
  return 1;
}

}  // namespace dsrsd
