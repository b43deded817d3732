#pragma once

#include <stdexcept>
#include <string>

namespace rdelab {

/// Failure categories. Each maps to a distinct CLI exit status.
enum class ErrorKind {
    precondition,   ///< caller violated an operation's precondition
    schema,         ///< malformed instance document
    unknown_name,   ///< cover / measure / fiber name not present
    guard,          ///< a configured size guard was exceeded
    numeric,        ///< iterative method failed to converge
    internal        ///< a runtime-asserted invariant failed
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::precondition: return "precondition";
        case ErrorKind::schema: return "schema";
        case ErrorKind::unknown_name: return "unknown-name";
        case ErrorKind::guard: return "guard";
        case ErrorKind::numeric: return "numeric";
        case ErrorKind::internal: return "internal";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool condition, const std::string& what) {
    if (!condition) fail(ErrorKind::precondition, what);
}

}  // namespace rdelab
