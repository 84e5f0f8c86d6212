#ifndef VARLIN_ERRORS_HPP
#define VARLIN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace varlin {

// Exit-code mapping used by the CLI:
//   0 ok, 2 config/validation, 3 precondition, 4 invariant violation, 5 resource budget.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

struct PreconditionError : std::runtime_error {
  explicit PreconditionError(const std::string& m) : std::runtime_error(m) {}
};

struct InvariantError : std::runtime_error {
  explicit InvariantError(const std::string& m) : std::runtime_error(m) {}
};

struct ResourceError : std::runtime_error {
  explicit ResourceError(const std::string& m) : std::runtime_error(m) {}
};

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const PreconditionError*>(&e)) return 3;
  if (dynamic_cast<const InvariantError*>(&e)) return 4;
  if (dynamic_cast<const ResourceError*>(&e)) return 5;
  return 1;
}

}  // namespace varlin

#endif
