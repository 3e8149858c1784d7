#pragma once

#include <stdexcept>
#include <string>

namespace bch {

enum class ErrorCode {
    InvalidArgument,
    EmptySystem,
    AlreadyPresent,
    NotFound,
    InvalidOperation,
    Infeasible,
};

const char* to_string(ErrorCode code) noexcept;

// All library failures surface as bch::Error; callers that care about the
// category inspect code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace bch
