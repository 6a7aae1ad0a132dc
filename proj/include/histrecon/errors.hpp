#pragma once

#include <stdexcept>
#include <string>

namespace histrecon {

enum class ErrorCode {
    invalid_argument,
    io,
    parse,
    guard,
    estimation_impossible,
    numeric,
    shape_mismatch,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what)
{
    if (!condition) fail(code, what);
}

}  // namespace histrecon
