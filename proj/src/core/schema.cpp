#include <dfk/core/schema.hpp>

#include <dfk/core/counters.hpp>

namespace dfk {

void SchemaAccumulator::observe(const CellValue& cell) {
    if (cell.is_null() || (cell.is_raw() && cell.text().empty())) {
        return;
    }
    any_value_ = true;
    std::uint8_t mask = 0;
    if (cell.is_raw()) {
        const auto& t = cell.text();
        if (admissible_ & kInt && parse_int_text(t)) {
            mask |= kInt;
        }
        if (admissible_ & kFloat && parse_float_text(t)) {
            mask |= kFloat;
        }
        if (admissible_ & kBool && parse_bool_text(t)) {
            mask |= kBool;
        }
    } else if (cell.is_int()) {
        mask = kInt | kFloat;
    } else if (cell.is_float()) {
        mask = kFloat;
    } else if (cell.is_bool()) {
        mask = kBool;
    }
    admissible_ &= mask;
}

auto SchemaAccumulator::result() const -> Domain {
    if (!any_value_) {
        return Domain::Str;
    }
    if (admissible_ & kInt) {
        return Domain::Int;
    }
    if (admissible_ & kFloat) {
        return Domain::Float;
    }
    if (admissible_ & kBool) {
        return Domain::Bool;
    }
    return Domain::Str;
}

auto induce_schema(std::span<const CellValue> column) -> Domain {
    counters().s_invocations.fetch_add(1, std::memory_order_relaxed);
    counters().cells_scanned.fetch_add(column.size(), std::memory_order_relaxed);
    SchemaAccumulator acc;
    for (const auto& c : column) {
        acc.observe(c);
    }
    return acc.result();
}

auto induce_all(const Dataframe& df, const std::optional<std::vector<std::size_t>>& columns) -> Dataframe {
    std::vector<Domain> schema = df.schema();
    bool changed = false;
    auto visit = [&](std::size_t j) {
        if (schema[j] != Domain::Unspecified) {
            return;
        }
        schema[j] = induce_schema(df.column(j));
        changed = true;
    };
    if (columns) {
        for (auto j : *columns) {
            visit(j);
        }
    } else {
        for (std::size_t j = 0; j < df.cols(); ++j) {
            visit(j);
        }
    }
    return changed ? df.with_schema(std::move(schema)) : df;
}

}  // namespace dfk
