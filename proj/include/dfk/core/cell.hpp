#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace dfk {

class Dataframe;

/// The domain universe. Unspecified marks a column whose type has not
/// been induced yet.
enum class Domain : std::uint8_t { Unspecified, Str, Int, Float, Bool, Category };

auto to_string(Domain domain) -> std::string_view;
auto domain_from_string(std::string_view name) -> std::optional<Domain>;

[[nodiscard]] constexpr auto is_numeric(Domain d) -> bool { return d == Domain::Int || d == Domain::Float; }

/// A single cell. Raw text is the uninterpreted default; typed scalars
/// appear once a value has been parsed or computed; Composite holds a nested
/// frame produced by a collect aggregate.
class CellValue {
public:
    using Composite = std::shared_ptr<const Dataframe>;

    CellValue() = default;

    static auto null() -> CellValue { return {}; }
    static auto raw(std::string text) -> CellValue;
    static auto integer(std::int64_t v) -> CellValue;
    static auto real(double v) -> CellValue;
    static auto boolean(bool v) -> CellValue;
    static auto composite(Composite frame) -> CellValue;

    [[nodiscard]] auto is_null() const -> bool { return std::holds_alternative<std::monostate>(v_); }
    [[nodiscard]] auto is_raw() const -> bool { return std::holds_alternative<std::string>(v_); }
    [[nodiscard]] auto is_int() const -> bool { return std::holds_alternative<std::int64_t>(v_); }
    [[nodiscard]] auto is_float() const -> bool { return std::holds_alternative<double>(v_); }
    [[nodiscard]] auto is_bool() const -> bool { return std::holds_alternative<bool>(v_); }
    [[nodiscard]] auto is_composite() const -> bool { return std::holds_alternative<Composite>(v_); }

    [[nodiscard]] auto text() const -> const std::string& { return std::get<std::string>(v_); }
    [[nodiscard]] auto as_int() const -> std::int64_t { return std::get<std::int64_t>(v_); }
    [[nodiscard]] auto as_float() const -> double { return std::get<double>(v_); }
    [[nodiscard]] auto as_bool() const -> bool { return std::get<bool>(v_); }
    [[nodiscard]] auto as_composite() const -> const Composite& { return std::get<Composite>(v_); }

    /// Canonical textual form; Null renders as the empty string, which is
    /// also the only null token on input.
    [[nodiscard]] auto to_text() const -> std::string;

    /// Strict equality: same alternative and same value (composites compare
    /// their frames logically).
    friend auto operator==(const CellValue& a, const CellValue& b) -> bool;

private:
    std::variant<std::monostate, std::string, std::int64_t, double, bool, Composite> v_;
};

/// Equality on raw values: compares canonical text, so Null equals Raw("")
/// and Int(100) equals Raw("100").
auto raw_equal(const CellValue& a, const CellValue& b) -> bool;

/// Null or the empty raw string (the only null token).
[[nodiscard]] inline auto is_null_token(const CellValue& c) -> bool { return c.is_null() || (c.is_raw() && c.text().empty()); }

auto format_float(double v) -> std::string;

/// Helpers shared by parsing and induction.
auto parse_int_text(std::string_view text) -> std::optional<std::int64_t>;
auto parse_float_text(std::string_view text) -> std::optional<double>;
auto parse_bool_text(std::string_view text) -> std::optional<bool>;

/// Parsing function for a domain. Raw("") and Null map to Null. Typed
/// inputs convert when the conversion is lossless-by-definition (Int to
/// Float, any scalar to Str). Throws ErrorKind::Parse otherwise.
auto parse(const CellValue& cell, Domain domain) -> CellValue;
auto try_parse(const CellValue& cell, Domain domain) -> std::optional<CellValue>;

/// Ordering of two already-parsed cells. Null sorts after every value.
/// Returns unordered for mixed incomparable kinds.
auto compare_cells(const CellValue& a, const CellValue& b) -> std::partial_ordering;

/// Numeric view of a parsed cell (Int or Float).
auto numeric_value(const CellValue& c) -> std::optional<double>;

}  // namespace dfk
