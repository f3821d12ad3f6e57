#include "rgrasp/error.hpp"

namespace rgrasp {

const char* errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::invalid_input: return "invalid-input";
    case Errc::insufficient_data: return "insufficient-data";
    case Errc::opening_limit: return "opening-limit";
    case Errc::degenerate_direction: return "degenerate-direction";
    case Errc::configuration: return "configuration";
    case Errc::invalid_spec: return "invalid-spec";
    case Errc::parse: return "parse";
    case Errc::schema: return "schema";
    case Errc::unit_mismatch: return "unit-mismatch";
    case Errc::io: return "io";
    }
    return "unknown";
}

}  // namespace rgrasp
