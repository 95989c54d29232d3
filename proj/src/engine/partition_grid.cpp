#include <dfk/engine/partition_grid.hpp>

#include <dfk/core/counters.hpp>
#include <dfk/core/error.hpp>

#include <algorithm>

namespace dfk {

namespace {

auto ceil_div(std::size_t a, std::size_t b) -> std::size_t { return b == 0 ? 0 : (a + b - 1) / b; }

auto normalized(BlockShape shape) -> BlockShape {
    shape.rows = std::max<std::size_t>(shape.rows, 1);
    shape.cols = std::max<std::size_t>(shape.cols, 1);
    return shape;
}

}  // namespace

Block::Block(std::size_t rows, std::size_t cols, std::vector<CellValue> cells)
    : rows_(rows), cols_(cols), cells_(std::move(cells)) {
    if (cells_.size() != rows_ * cols_) {
        fail(ErrorKind::InvalidArgument, "block cell count does not match its shape");
    }
}

auto PartitionGrid::from_row_major(std::size_t rows, std::size_t cols, std::vector<CellValue> cells, BlockShape shape)
    -> PartitionGrid {
    if (cells.size() != rows * cols) {
        fail(ErrorKind::InvalidArgument, "cell count does not match grid shape");
    }
    shape = normalized(shape);
    PartitionGrid g;
    g.rows_ = rows;
    g.cols_ = cols;
    g.shape_ = shape;
    g.p_ = ceil_div(rows, shape.rows);
    g.q_ = ceil_div(cols, shape.cols);
    g.tiles_.reserve(g.p_ * g.q_);
    for (std::size_t bi = 0; bi < g.p_; ++bi) {
        const std::size_t r0 = bi * shape.rows;
        const std::size_t br = std::min(shape.rows, rows - r0);
        for (std::size_t bj = 0; bj < g.q_; ++bj) {
            const std::size_t c0 = bj * shape.cols;
            const std::size_t bc = std::min(shape.cols, cols - c0);
            std::vector<CellValue> tile_cells;
            tile_cells.reserve(br * bc);
            for (std::size_t r = 0; r < br; ++r) {
                for (std::size_t c = 0; c < bc; ++c) {
                    tile_cells.push_back(std::move(cells[(r0 + r) * cols + c0 + c]));
                }
            }
            g.tiles_.push_back(Tile{std::make_shared<const Block>(br, bc, std::move(tile_cells)), false});
        }
    }
    return g;
}

auto PartitionGrid::from_row_bands(std::size_t total_rows, std::size_t cols, std::vector<std::vector<CellValue>> bands,
                                   BlockShape shape) -> PartitionGrid {
    shape = normalized(shape);
    PartitionGrid g;
    g.cols_ = cols;
    g.shape_ = shape;
    g.q_ = ceil_div(cols, shape.cols);
    if (cols == 0) {
        g.rows_ = total_rows;
        g.p_ = ceil_div(total_rows, shape.rows);
        return g;
    }
    std::size_t rows = 0;
    for (std::size_t b = 0; b < bands.size(); ++b) {
        auto& band = bands[b];
        const std::size_t band_rows = band.size() / cols;
        if (band.size() % cols != 0) {
            fail(ErrorKind::InvalidArgument, "ragged band");
        }
        if (band_rows == 0) {
            continue;
        }
        if (rows % shape.rows != 0 || band_rows > shape.rows) {
            fail(ErrorKind::InvalidArgument, "bands do not follow the block shape");
        }
        if (g.q_ == 1 && band_rows * cols == band.size()) {
            g.tiles_.push_back(Tile{std::make_shared<const Block>(band_rows, cols, std::move(band)), false});
        } else {
            for (std::size_t bj = 0; bj < g.q_; ++bj) {
                const std::size_t c0 = bj * shape.cols;
                const std::size_t bc = std::min(shape.cols, cols - c0);
                std::vector<CellValue> tile_cells;
                tile_cells.reserve(band_rows * bc);
                for (std::size_t r = 0; r < band_rows; ++r) {
                    for (std::size_t c = 0; c < bc; ++c) {
                        tile_cells.push_back(std::move(band[r * cols + c0 + c]));
                    }
                }
                g.tiles_.push_back(Tile{std::make_shared<const Block>(band_rows, bc, std::move(tile_cells)), false});
            }
        }
        rows += band_rows;
    }
    if (rows != total_rows) {
        fail(ErrorKind::InvalidArgument, "band rows do not add up to the grid height");
    }
    g.rows_ = rows;
    g.p_ = ceil_div(rows, shape.rows);
    return g;
}

auto PartitionGrid::transposed() const -> PartitionGrid {
    PartitionGrid g;
    g.rows_ = cols_;
    g.cols_ = rows_;
    g.shape_ = BlockShape{shape_.cols, shape_.rows};
    g.p_ = q_;
    g.q_ = p_;
    g.tiles_.resize(tiles_.size());
    for (std::size_t bi = 0; bi < p_; ++bi) {
        for (std::size_t bj = 0; bj < q_; ++bj) {
            const Tile& src = tiles_[bi * q_ + bj];
            g.tiles_[bj * p_ + bi] = Tile{src.block, !src.transposed};
        }
    }
    return g;
}

auto PartitionGrid::with_cell(std::size_t r, std::size_t c, CellValue value) const -> PartitionGrid {
    if (r >= rows_ || c >= cols_) {
        fail(ErrorKind::IndexOutOfBounds, "cell (" + std::to_string(r) + ", " + std::to_string(c) + ") out of range");
    }
    PartitionGrid g = *this;
    const std::size_t bi = r / shape_.rows;
    const std::size_t bj = c / shape_.cols;
    Tile& t = g.tiles_[bi * q_ + bj];
    std::size_t lr = r - bi * shape_.rows;
    std::size_t lc = c - bj * shape_.cols;
    if (t.transposed) {
        std::swap(lr, lc);
    }
    std::vector<CellValue> cells = t.block->cells();
    counters().cells_copied.fetch_add(cells.size(), std::memory_order_relaxed);
    cells[lr * t.block->cols() + lc] = std::move(value);
    t.block = std::make_shared<const Block>(t.block->rows(), t.block->cols(), std::move(cells));
    return g;
}

auto PartitionGrid::approx_bytes() const -> std::size_t {
    std::size_t bytes = sizeof(PartitionGrid) + tiles_.size() * sizeof(Tile);
    for (const auto& t : tiles_) {
        bytes += sizeof(Block) + t.block->cells().size() * sizeof(CellValue);
        for (const auto& cell : t.block->cells()) {
            if (cell.is_raw() && cell.text().size() > 15) {
                bytes += cell.text().size();
            }
        }
    }
    return bytes;
}

}  // namespace dfk
