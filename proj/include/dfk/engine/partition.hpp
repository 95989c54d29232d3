#pragma once

#include <dfk/core/dataframe.hpp>

namespace dfk::engine {

enum class Scheme { Rows, Cols, Blocks };

/// Re-tiles the logical cells of `df`. Rows uses sizes.rows x all columns,
/// Cols uses all rows x sizes.cols. A cell counts as a cross-block move when
/// its block extent or position differs between the old and new tiling.
auto partition(const Dataframe& df, Scheme scheme, BlockShape sizes) -> PartitionGrid;

/// The frame over the re-tiled grid (identity order vectors).
auto repartition(const Dataframe& df, Scheme scheme, BlockShape sizes) -> Dataframe;

/// Metadata-only transpose: every tile keeps its cells.
auto transpose_grid(const PartitionGrid& grid) -> PartitionGrid;

}  // namespace dfk::engine
