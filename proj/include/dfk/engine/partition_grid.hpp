#pragma once

#include <dfk/core/cell.hpp>

#include <cstddef>
#include <memory>
#include <vector>

namespace dfk {

/// Target rows x cols per block.
struct BlockShape {
    std::size_t rows = 4096;
    std::size_t cols = 64;

    friend auto operator==(const BlockShape&, const BlockShape&) -> bool = default;
};

/// Row-major cell storage for one tile. Immutable once shared.
class Block {
public:
    Block(std::size_t rows, std::size_t cols, std::vector<CellValue> cells);

    [[nodiscard]] auto rows() const -> std::size_t { return rows_; }
    [[nodiscard]] auto cols() const -> std::size_t { return cols_; }
    [[nodiscard]] auto at(std::size_t r, std::size_t c) const -> const CellValue& { return cells_[r * cols_ + c]; }
    [[nodiscard]] auto cells() const -> const std::vector<CellValue>& { return cells_; }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<CellValue> cells_;
};

/// p x q tiling of a cell array. Every block except those in the last block
/// row / column has exactly `shape()` cells, so locating (i, j) is two
/// divisions. Each tile carries an orientation flag: a flagged tile is read
/// as the transpose of its stored block, which is how a whole-grid transpose
/// happens without any cell leaving its block.
class PartitionGrid {
public:
    struct Tile {
        std::shared_ptr<const Block> block;
        bool transposed = false;
    };

    PartitionGrid() = default;

    /// Tiles `cells` (row-major, rows x cols). Cells are moved, not counted
    /// as copies.
    static auto from_row_major(std::size_t rows, std::size_t cols, std::vector<CellValue> cells, BlockShape shape)
        -> PartitionGrid;

    /// Assembles a grid from horizontal bands, band b holding rows
    /// [b*shape.rows, ...) in row-major order. Bands must follow the shape.
    static auto from_row_bands(std::size_t rows, std::size_t cols, std::vector<std::vector<CellValue>> bands,
                               BlockShape shape) -> PartitionGrid;

    [[nodiscard]] auto rows() const -> std::size_t { return rows_; }
    [[nodiscard]] auto cols() const -> std::size_t { return cols_; }
    [[nodiscard]] auto shape() const -> BlockShape { return shape_; }
    [[nodiscard]] auto block_rows() const -> std::size_t { return p_; }
    [[nodiscard]] auto block_cols() const -> std::size_t { return q_; }
    [[nodiscard]] auto tile(std::size_t bi, std::size_t bj) const -> const Tile& { return tiles_[bi * q_ + bj]; }

    [[nodiscard]] auto at(std::size_t r, std::size_t c) const -> const CellValue& {
        const std::size_t bi = r / shape_.rows;
        const std::size_t bj = c / shape_.cols;
        const Tile& t = tiles_[bi * q_ + bj];
        const std::size_t lr = r - bi * shape_.rows;
        const std::size_t lc = c - bj * shape_.cols;
        return t.transposed ? t.block->at(lc, lr) : t.block->at(lr, lc);
    }

    /// Logical transpose: swaps the tile index and flips every tile's
    /// orientation flag. No cell moves.
    [[nodiscard]] auto transposed() const -> PartitionGrid;

    /// Copy-on-write point update; only the touched block is copied.
    [[nodiscard]] auto with_cell(std::size_t r, std::size_t c, CellValue value) const -> PartitionGrid;

    /// Index of the tile holding (r, c); used by move accounting.
    [[nodiscard]] auto tile_index(std::size_t r, std::size_t c) const -> std::size_t {
        return (r / shape_.rows) * q_ + (c / shape_.cols);
    }

    [[nodiscard]] auto approx_bytes() const -> std::size_t;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    BlockShape shape_{};
    std::size_t p_ = 0;
    std::size_t q_ = 0;
    std::vector<Tile> tiles_;
};

}  // namespace dfk
