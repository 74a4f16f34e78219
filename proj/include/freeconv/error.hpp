#pragma once

#include <stdexcept>
#include <string>

namespace freeconv {

enum class ErrorKind {
    Parse,            // malformed input document
    Validation,       // structurally valid input violating a model constraint
    Normalization,    // mass/weight bookkeeping off beyond tolerance
    DegenerateMap,    // scale = 0 pushforward
    Domain,           // argument outside the operation's domain
    NonConvergence,   // iteration or extrapolation did not settle
    Lift,             // intermediate value left the upper half-plane
    ConeTooSmall,     // Newton inversion failed; caller should raise alpha
    SelectionFailure, // no admissible quadratic root (internal consistency)
    Inconclusive,     // oscillating boundary ladder
    AdditivityViolation,
    DecompositionFailure,
    Io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& msg) {
    throw Error(kind, msg);
}

} // namespace freeconv
