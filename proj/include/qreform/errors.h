#ifndef QREFORM_ERRORS_H_
#define QREFORM_ERRORS_H_

#include <stdexcept>
#include <string>

namespace qreform {

// A caller broke a documented precondition (bad shape, empty input, ...).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// NaN/Inf produced during numeric evaluation.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or unreadable input data (files, streams, checkpoints).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace qreform

#endif  // QREFORM_ERRORS_H_
