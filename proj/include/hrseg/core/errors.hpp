#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace hrseg {

// Base error. what() is "<category>: <message>"; the CLI prepends "error: "
// so every failure surfaces as a single greppable line.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(category + ": " + message),
        category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error("shape", m) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

struct DataError : Error {
  explicit DataError(const std::string& m) : Error("data", m) {}
};

struct FormatError : Error {
  explicit FormatError(const std::string& m) : Error("format", m) {}
};

struct IntegrityError : Error {
  explicit IntegrityError(const std::string& m) : Error("integrity", m) {}
};

struct StateError : Error {
  explicit StateError(const std::string& m) : Error("state", m) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& m) : Error("numeric", m) {}
};

struct IoError : Error {
  explicit IoError(const std::string& m) : Error("io", m) {}
};

}  // namespace hrseg
