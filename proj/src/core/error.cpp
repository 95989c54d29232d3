#include <dfk/core/error.hpp>

namespace dfk {

auto to_string(ErrorKind kind) -> std::string_view {
    switch (kind) {
        case ErrorKind::Parse: return "ParseError";
        case ErrorKind::IndexOutOfBounds: return "IndexOutOfBounds";
        case ErrorKind::LabelNotFound: return "LabelNotFound";
        case ErrorKind::UnknownColumn: return "UnknownColumn";
        case ErrorKind::AmbiguousLabel: return "AmbiguousLabel";
        case ErrorKind::ArityMismatch: return "ArityMismatch";
        case ErrorKind::IncomparableDomains: return "IncomparableDomains";
        case ErrorKind::DomainMismatch: return "DomainMismatch";
        case ErrorKind::UdfArityViolation: return "UdfArityViolation";
        case ErrorKind::UdfFailure: return "UdfFailure";
        case ErrorKind::RaggedRow: return "RaggedRow";
        case ErrorKind::QuoteError: return "QuoteError";
        case ErrorKind::Syntax: return "SyntaxError";
        case ErrorKind::Io: return "IoError";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace dfk
