#include <dfk/engine/partition.hpp>

#include <dfk/core/counters.hpp>

#include <algorithm>

namespace dfk::engine {

namespace {

struct Extent {
    std::size_t r0, r1, c0, c1;

    friend auto operator==(const Extent&, const Extent&) -> bool = default;
};

auto extent(std::size_t r, std::size_t c, std::size_t rows, std::size_t cols, BlockShape shape) -> Extent {
    const std::size_t r0 = r / shape.rows * shape.rows;
    const std::size_t c0 = c / shape.cols * shape.cols;
    return {r0, std::min(r0 + shape.rows, rows), c0, std::min(c0 + shape.cols, cols)};
}

}  // namespace

auto partition(const Dataframe& df, Scheme scheme, BlockShape sizes) -> PartitionGrid {
    const std::size_t m = df.rows();
    const std::size_t n = df.cols();
    BlockShape shape = sizes;
    if (scheme == Scheme::Rows) {
        shape.cols = std::max<std::size_t>(n, 1);
    } else if (scheme == Scheme::Cols) {
        shape.rows = std::max<std::size_t>(m, 1);
    }
    shape.rows = std::max<std::size_t>(shape.rows, 1);
    shape.cols = std::max<std::size_t>(shape.cols, 1);
    const BlockShape old = df.grid().shape();
    std::vector<CellValue> cells;
    cells.reserve(m * n);
    std::uint64_t moves = 0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            cells.push_back(df.at(i, j));
            const std::size_t pi = df.physical_row(i);
            const std::size_t pj = df.physical_col(j);
            if (pi != i || pj != j || extent(pi, pj, m, n, old) != extent(i, j, m, n, shape)) {
                ++moves;
            }
        }
    }
    counters().cross_block_moves.fetch_add(moves, std::memory_order_relaxed);
    return PartitionGrid::from_row_major(m, n, std::move(cells), shape);
}

auto repartition(const Dataframe& df, Scheme scheme, BlockShape sizes) -> Dataframe {
    return Dataframe(partition(df, scheme, sizes), df.row_labels(), df.col_labels(), df.schema());
}

auto transpose_grid(const PartitionGrid& grid) -> PartitionGrid { return grid.transposed(); }

}  // namespace dfk::engine
