#ifndef NANOVLA_ERRORS_H_
#define NANOVLA_ERRORS_H_

#include <stdexcept>
#include <string>

namespace nanovla {

// Shapes or dimensions that do not line up.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid configuration value (bad head count, unknown activation, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf where a finite value is required.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::string parameter = {})
      : std::runtime_error(what), parameter_(std::move(parameter)) {}
  const std::string& parameter() const { return parameter_; }

 private:
  std::string parameter_;
};

// Malformed input data (trial counts, CSV rows, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation was called outside its domain (e.g. closed form with
// non-integer alpha).
class NotApplicableError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A collaborator broke its interface contract (e.g. wrong chunk shape).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Binary or text file does not follow the expected layout.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nanovla

#endif  // NANOVLA_ERRORS_H_
