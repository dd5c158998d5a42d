#pragma once

#include <stdexcept>
#include <string>

namespace lexmrf {

// Error taxonomy shared with the C API status codes.
enum class ErrorCode {
    invalid_argument = 1,
    parse = 2,
    validation = 3,
    coverage = 4,
    numeric = 5,
    io = 6,
    internal = 7,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}
    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &message) {
    throw Error(code, message);
}

} // namespace lexmrf
