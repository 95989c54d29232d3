#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dfk {

enum class ErrorKind {
    Parse,
    IndexOutOfBounds,
    LabelNotFound,
    UnknownColumn,
    AmbiguousLabel,
    ArityMismatch,
    IncomparableDomains,
    DomainMismatch,
    UdfArityViolation,
    UdfFailure,
    RaggedRow,
    QuoteError,
    Syntax,
    Io,
    InvalidArgument,
};

auto to_string(ErrorKind kind) -> std::string_view;

/// Every failure raised by the kernel carries a kind so callers (and the
/// differential tests) can compare failures without matching message text.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    [[nodiscard]] auto kind() const noexcept -> ErrorKind { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace dfk
