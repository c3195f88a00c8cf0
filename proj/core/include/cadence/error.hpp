#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cadence {

enum class ErrorCode {
  kDomain,          // precondition or invariant violated by the caller
  kInvalidArgument,
  kValidation,      // an object failed its invariant checks
  kParse,           // model or file content could not be interpreted
  kTransport,       // network failure; retryable
  kTimeout,         // retryable
  kProvider,        // remote service answered with an error
  kNotFound,
  kUnauthorized,
  kForbidden,       // authenticated but wrong role or assignment
  kConflict,        // state machine refused the transition
  kIo,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  bool retryable() const noexcept {
    return code_ == ErrorCode::kTransport || code_ == ErrorCode::kTimeout;
  }

 private:
  ErrorCode code_;
};

struct Violation {
  std::string field;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

std::string describe(const std::vector<Violation>& violations);

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations)
      : Error(ErrorCode::kValidation, describe(violations)),
        violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// A value could not be read because a named field is missing, has the wrong
/// type, or holds a value outside its vocabulary.
class FieldError : public Error {
 public:
  FieldError(std::vector<std::string> fields, const std::string& message)
      : Error(ErrorCode::kParse, message), fields_(std::move(fields)) {}
  FieldError(std::string field, const std::string& message)
      : FieldError(std::vector<std::string>{std::move(field)}, message) {}

  const std::vector<std::string>& fields() const noexcept { return fields_; }

 private:
  std::vector<std::string> fields_;
};

}  // namespace cadence
