#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace toponym {

// Caller passed arguments that violate a precondition (dimension mismatch,
// index out of range, empty training set, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input file. Carries the file name and 1-based line when known.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::string file, std::size_t line, const std::string& what)
      : std::runtime_error(compose(file, line, what)),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string compose(const std::string& file, std::size_t line,
                             const std::string& what) {
    std::string msg = file;
    if (line > 0) msg += ":" + std::to_string(line);
    if (!msg.empty()) msg += ": ";
    return msg + what;
  }

  std::string file_;
  std::size_t line_;
};

// Corpus files (.txt/.ann/.pos, manifests) that do not match their contract.
class CorpusFormatError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Model files with a bad magic, version or dimensions.
class SerializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Run configuration that fails validation. `field` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace toponym
