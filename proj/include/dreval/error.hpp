#pragma once

#include <stdexcept>
#include <string>

namespace dreval {

// Mirrors dreval_status in the C API; values must stay in sync.
enum class ErrorCode {
  invalid_input = 1,
  invalid_propensity = 2,
  parse_error = 3,
  singular_system = 4,
  degenerate_distribution = 5,
  io_error = 6,
  check_failed = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::invalid_input, what);
}

}  // namespace dreval
