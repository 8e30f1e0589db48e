#pragma once

#include <stdexcept>
#include <string>

namespace avsim {

enum class ErrorKind {
    Config,     // bad run configuration / unsupported scenario kind
    Geometry,   // projection outside the supported corridor
    Planning,   // unreachable destination
    Placement,  // traffic spawn could not satisfy spacing constraints
    Reset,      // environment reset failed after bounded retries
    Usage,      // API misuse (e.g. step after termination)
    Shape,      // tensor dimension mismatch
    Io,         // file read/write/parse failure
    NotFound,   // requested record/episode missing
    Diverged,   // training produced non-finite values
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* error_category(ErrorKind k) {
    switch (k) {
        case ErrorKind::Config: return "config";
        case ErrorKind::Geometry: return "geometry";
        case ErrorKind::Planning: return "planning";
        case ErrorKind::Placement: return "placement";
        case ErrorKind::Reset: return "reset";
        case ErrorKind::Usage: return "usage";
        case ErrorKind::Shape: return "shape";
        case ErrorKind::Io: return "io";
        case ErrorKind::NotFound: return "not-found";
        case ErrorKind::Diverged: return "diverged";
    }
    return "unknown";
}

}  // namespace avsim
