#pragma once

#include <stdexcept>
#include <string>

namespace rgrasp {

enum class Errc {
    invalid_argument,
    invalid_input,
    insufficient_data,
    opening_limit,
    degenerate_direction,
    configuration,
    invalid_spec,
    parse,
    schema,
    unit_mismatch,
    io,
};

const char* errc_name(Errc code) noexcept;

/// Single exception type for the library; `code()` tells callers which
/// contract was violated.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace rgrasp
