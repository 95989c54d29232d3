#include <dfk/core/cell.hpp>
#include <dfk/core/dataframe.hpp>
#include <dfk/core/error.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

namespace dfk {

auto to_string(Domain domain) -> std::string_view {
    switch (domain) {
        case Domain::Unspecified: return "unspecified";
        case Domain::Str: return "str";
        case Domain::Int: return "int";
        case Domain::Float: return "float";
        case Domain::Bool: return "bool";
        case Domain::Category: return "category";
    }
    return "?";
}

auto domain_from_string(std::string_view name) -> std::optional<Domain> {
    static constexpr std::array<std::pair<std::string_view, Domain>, 6> kNames{{
        {"unspecified", Domain::Unspecified},
        {"str", Domain::Str},
        {"int", Domain::Int},
        {"float", Domain::Float},
        {"bool", Domain::Bool},
        {"category", Domain::Category},
    }};
    for (const auto& [key, value] : kNames) {
        if (key == name) {
            return value;
        }
    }
    return std::nullopt;
}

auto CellValue::raw(std::string text) -> CellValue {
    CellValue c;
    c.v_ = std::move(text);
    return c;
}

auto CellValue::integer(std::int64_t v) -> CellValue {
    CellValue c;
    c.v_ = v;
    return c;
}

auto CellValue::real(double v) -> CellValue {
    CellValue c;
    c.v_ = v;
    return c;
}

auto CellValue::boolean(bool v) -> CellValue {
    CellValue c;
    c.v_ = v;
    return c;
}

auto CellValue::composite(Composite frame) -> CellValue {
    CellValue c;
    c.v_ = std::move(frame);
    return c;
}

auto format_float(double v) -> std::string {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    std::string out(buf.data(), ptr);
    // Keep floats visibly distinct from integers in text form.
    if (std::isfinite(v) && out.find_first_of(".eE") == std::string::npos) {
        out += ".0";
    }
    return out;
}

auto CellValue::to_text() const -> std::string {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return {};
            } else if constexpr (std::is_same_v<T, std::string>) {
                return v;
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(v);
            } else if constexpr (std::is_same_v<T, double>) {
                return format_float(v);
            } else if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else {
                return v ? "<" + std::to_string(v->rows()) + "x" + std::to_string(v->cols()) + " frame>"
                         : "<frame>";
            }
        },
        v_);
}

auto operator==(const CellValue& a, const CellValue& b) -> bool {
    if (a.v_.index() != b.v_.index()) {
        return false;
    }
    if (a.is_float()) {
        double x = a.as_float();
        double y = b.as_float();
        return x == y || (std::isnan(x) && std::isnan(y));
    }
    if (a.is_composite()) {
        const auto& x = a.as_composite();
        const auto& y = b.as_composite();
        if (!x || !y) {
            return x == y;
        }
        return same_data(*x, *y);
    }
    return a.v_ == b.v_;
}

auto raw_equal(const CellValue& a, const CellValue& b) -> bool {
    if (a.is_raw() && b.is_raw()) {
        return a.text() == b.text();
    }
    return a.to_text() == b.to_text();
}

auto parse_int_text(std::string_view text) -> std::optional<std::int64_t> {
    if (text.empty()) {
        return std::nullopt;
    }
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        return std::nullopt;
    }
    return value;
}

auto parse_float_text(std::string_view text) -> std::optional<double> {
    // Requires at least one digit, which rules out inf/nan spellings.
    if (text.empty() || std::none_of(text.begin(), text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; })) {
        return std::nullopt;
    }
    double value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        return std::nullopt;
    }
    return value;
}

auto parse_bool_text(std::string_view text) -> std::optional<bool> {
    auto iequals = [](std::string_view a, std::string_view b) {
        return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
                   return std::tolower(static_cast<unsigned char>(x)) == y;
               });
    };
    if (iequals(text, "true")) {
        return true;
    }
    if (iequals(text, "false")) {
        return false;
    }
    return std::nullopt;
}

auto try_parse(const CellValue& cell, Domain domain) -> std::optional<CellValue> {
    if (cell.is_null()) {
        return cell;
    }
    if (cell.is_raw() && cell.text().empty()) {
        return CellValue::null();
    }
    switch (domain) {
        case Domain::Unspecified:
            return cell;
        case Domain::Str:
        case Domain::Category:
            if (cell.is_raw() || cell.is_composite()) {
                return cell;
            }
            return CellValue::raw(cell.to_text());
        case Domain::Int:
            if (cell.is_int()) {
                return cell;
            }
            if (cell.is_raw()) {
                if (auto v = parse_int_text(cell.text())) {
                    return CellValue::integer(*v);
                }
            }
            return std::nullopt;
        case Domain::Float:
            if (cell.is_float()) {
                return cell;
            }
            if (cell.is_int()) {
                return CellValue::real(static_cast<double>(cell.as_int()));
            }
            if (cell.is_raw()) {
                if (auto v = parse_float_text(cell.text())) {
                    return CellValue::real(*v);
                }
            }
            return std::nullopt;
        case Domain::Bool:
            if (cell.is_bool()) {
                return cell;
            }
            if (cell.is_raw()) {
                if (auto v = parse_bool_text(cell.text())) {
                    return CellValue::boolean(*v);
                }
            }
            return std::nullopt;
    }
    return std::nullopt;
}

auto parse(const CellValue& cell, Domain domain) -> CellValue {
    if (auto v = try_parse(cell, domain)) {
        return std::move(*v);
    }
    fail(ErrorKind::Parse, "'" + cell.to_text() + "' is not a member of domain " + std::string(to_string(domain)));
}

auto numeric_value(const CellValue& c) -> std::optional<double> {
    if (c.is_int()) {
        return static_cast<double>(c.as_int());
    }
    if (c.is_float()) {
        return c.as_float();
    }
    return std::nullopt;
}

auto compare_cells(const CellValue& a, const CellValue& b) -> std::partial_ordering {
    if (a.is_null() || b.is_null()) {
        if (a.is_null() && b.is_null()) {
            return std::partial_ordering::equivalent;
        }
        return a.is_null() ? std::partial_ordering::greater : std::partial_ordering::less;
    }
    if (a.is_int() && b.is_int()) {
        return a.as_int() <=> b.as_int();
    }
    if ((a.is_int() || a.is_float()) && (b.is_int() || b.is_float())) {
        auto as_long = [](const CellValue& c) -> long double {
            return c.is_int() ? static_cast<long double>(c.as_int()) : static_cast<long double>(c.as_float());
        };
        return as_long(a) <=> as_long(b);
    }
    if (a.is_bool() && b.is_bool()) {
        return a.as_bool() <=> b.as_bool();
    }
    if (a.is_raw() && b.is_raw()) {
        return a.text() <=> b.text();
    }
    return std::partial_ordering::unordered;
}

}  // namespace dfk
