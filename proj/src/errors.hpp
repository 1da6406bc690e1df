#pragma once

#include <stdexcept>
#include <string>

namespace stfm {

// Error codes shared with the C API (see include/stfm.h).
enum class ErrorCode : int {
  ok = 0,
  invalid_argument = 1,
  domain = 2,
  config = 3,
  io = 4,
  parse = 5,
  numeric = 6,
  insufficient_data = 7,
  internal = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

}  // namespace stfm
