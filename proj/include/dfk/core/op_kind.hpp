#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace dfk {

/// Logical operator kinds. The fourteen algebra operators come first,
/// followed by plan-only kinds (sources, macros and helpers).
enum class OpKind : std::size_t {
    Selection,
    Projection,
    Union,
    Difference,
    Join,
    DropDuplicates,
    GroupBy,
    Sort,
    Rename,
    Window,
    Transpose,
    Map,
    ToLabels,
    FromLabels,
    Scan,
    Head,
    Tail,
    Pivot,
    Induce,
    PointSet,
    SortColumns,
};

inline constexpr std::size_t kOpKindCount = static_cast<std::size_t>(OpKind::SortColumns) + 1;

auto to_string(OpKind kind) -> std::string_view;

/// Lower-case key used in stats dumps ("groupby", "transpose", ...).
auto stats_key(OpKind kind) -> std::string_view;

}  // namespace dfk
