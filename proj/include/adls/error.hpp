#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace adls {

enum class ErrorKind { config, input, format, training, state, io };

const char* to_string(ErrorKind kind);

// Base exception for everything the library throws on purpose. `subject`
// optionally names the offending entity (a path, a parameter name).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string subject = {})
      : std::runtime_error(message), kind_(kind), subject_(std::move(subject)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  ErrorKind kind_;
  std::string subject_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message, std::string subject = {})
      : Error(ErrorKind::config, message, std::move(subject)) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& message, std::string subject = {})
      : Error(ErrorKind::input, message, std::move(subject)) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message, std::string subject = {})
      : Error(ErrorKind::format, message, std::move(subject)) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& message, std::string subject = {})
      : Error(ErrorKind::training, message, std::move(subject)) {}
};

class StateError : public Error {
 public:
  explicit StateError(const std::string& message, std::string subject = {})
      : Error(ErrorKind::state, message, std::move(subject)) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message, std::string subject = {})
      : Error(ErrorKind::io, message, std::move(subject)) {}
};

}  // namespace adls
