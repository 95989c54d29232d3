#pragma once

#include <dfk/core/cell.hpp>
#include <dfk/core/dataframe.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dfk {

/// Incremental form of the schema induction function. Each observed cell
/// narrows the set of admissible domains; `result()` applies the precedence
/// Int, Float, Bool, Str. Nulls admit everything, so an all-null column
/// induces Str. Category is never induced.
class SchemaAccumulator {
public:
    void observe(const CellValue& cell);
    [[nodiscard]] auto result() const -> Domain;

private:
    static constexpr std::uint8_t kInt = 1;
    static constexpr std::uint8_t kFloat = 2;
    static constexpr std::uint8_t kBool = 4;
    std::uint8_t admissible_ = kInt | kFloat | kBool;
    bool any_value_ = false;
};

/// Schema induction over one column. Counts one S invocation.
auto induce_schema(std::span<const CellValue> column) -> Domain;

/// Fills Unspecified domains of the requested logical columns (all when
/// `columns` is absent). Already-typed columns are left untouched and
/// cost nothing.
auto induce_all(const Dataframe& df, const std::optional<std::vector<std::size_t>>& columns = std::nullopt)
    -> Dataframe;

}  // namespace dfk
