#pragma once

#include <stdexcept>
#include <string>

namespace holo {

// Base of every exception the library throws. kind() is a short
// machine-readable tag ("bounds", "config", ...) used by the CLI error line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct BoundsError : Error {
  explicit BoundsError(const std::string& m) : Error("bounds", m) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error("shape", m) {}
};

struct ValueError : Error {
  explicit ValueError(const std::string& m) : Error("value", m) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& m) : Error("numeric", m) {}
};

struct UnsupportedError : Error {
  explicit UnsupportedError(const std::string& m) : Error("unsupported", m) {}
};

struct InferenceError : Error {
  explicit InferenceError(const std::string& m) : Error("inference", m) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

struct IoError : Error {
  explicit IoError(const std::string& m) : Error("io", m) {}
};

}  // namespace holo
