#pragma once

#include <dfk/core/dataframe.hpp>

#include <cstddef>
#include <string>

namespace dfk::io {

/// Fixed-width table: row labels left-aligned, cells right-aligned, two
/// spaces between columns, "NULL" for nulls. Frames longer than 2k rows
/// show the first and last k rows around a "..." line.
auto render(const Dataframe& df, std::size_t k = 5) -> std::string;

/// The elided layout from separately materialized head and tail rows
/// (same columns); an ellipsis line always separates them.
auto render_split(const Dataframe& head, const Dataframe& tail) -> std::string;

}  // namespace dfk::io
