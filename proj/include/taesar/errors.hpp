#pragma once

#include <stdexcept>
#include <string>

namespace taesar {

// Error categories map 1:1 to CLI exit codes.
enum class ErrorCode : int {
    Config  = 2,
    Data    = 3,
    Numeric = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

inline Error config_error(const std::string & msg) { return Error(ErrorCode::Config, msg); }
inline Error data_error(const std::string & msg) { return Error(ErrorCode::Data, msg); }
inline Error numeric_error(const std::string & msg) { return Error(ErrorCode::Numeric, msg); }

} // namespace taesar
