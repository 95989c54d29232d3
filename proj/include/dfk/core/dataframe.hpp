#pragma once

#include <dfk/core/cell.hpp>
#include <dfk/engine/partition_grid.hpp>

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace dfk {

class LabelIndex;

/// An immutable ordered dataframe: value grid, row labels, column labels,
/// per-column domains, plus a row and a column order vector mapping logical
/// positions onto physical storage.
///
/// Labels and domains are stored aligned with physical storage; every
/// accessor below takes logical positions. Derivations that only touch
/// metadata (reordering, relabelling, transposing) share the grid.
class Dataframe {
public:
    Dataframe();

    /// Frame over `grid` with identity order. Empty `schema` means all
    /// Unspecified; empty `row_labels` means positional labels.
    Dataframe(PartitionGrid grid, std::vector<std::string> row_labels, std::vector<std::string> col_labels,
              std::vector<Domain> schema = {});

    /// Convenience constructor from row-major rows.
    static auto from_rows(const std::vector<std::vector<CellValue>>& rows, std::vector<std::string> col_labels,
                          std::vector<std::string> row_labels = {}, std::vector<Domain> schema = {},
                          BlockShape shape = {}) -> Dataframe;

    /// Frame of Raw cells from text rows (empty strings stay Raw("")).
    static auto from_text(const std::vector<std::vector<std::string>>& rows, std::vector<std::string> col_labels,
                          std::vector<std::string> row_labels = {}, BlockShape shape = {}) -> Dataframe;

    [[nodiscard]] auto rows() const -> std::size_t { return grid_->rows(); }
    [[nodiscard]] auto cols() const -> std::size_t { return grid_->cols(); }

    [[nodiscard]] auto physical_row(std::size_t i) const -> std::size_t { return row_order_ ? (*row_order_)[i] : i; }
    [[nodiscard]] auto physical_col(std::size_t j) const -> std::size_t { return col_order_ ? (*col_order_)[j] : j; }

    [[nodiscard]] auto at(std::size_t i, std::size_t j) const -> const CellValue& {
        return grid_->at(physical_row(i), physical_col(j));
    }
    [[nodiscard]] auto row_label(std::size_t i) const -> const std::string& { return (*row_labels_)[physical_row(i)]; }
    [[nodiscard]] auto col_label(std::size_t j) const -> const std::string& { return (*col_labels_)[physical_col(j)]; }
    [[nodiscard]] auto domain(std::size_t j) const -> Domain { return (*schema_)[physical_col(j)]; }

    [[nodiscard]] auto row_labels() const -> std::vector<std::string>;
    [[nodiscard]] auto col_labels() const -> std::vector<std::string>;
    [[nodiscard]] auto schema() const -> std::vector<Domain>;
    [[nodiscard]] auto row(std::size_t i) const -> std::vector<CellValue>;
    [[nodiscard]] auto column(std::size_t j) const -> std::vector<CellValue>;

    [[nodiscard]] auto grid() const -> const PartitionGrid& { return *grid_; }
    [[nodiscard]] auto shares_grid_with(const Dataframe& other) const -> bool { return grid_ == other.grid_; }
    [[nodiscard]] auto identity_row_order() const -> bool { return !row_order_; }
    [[nodiscard]] auto identity_col_order() const -> bool { return !col_order_; }
    /// Logical -> physical row mapping (materialized identity if needed).
    [[nodiscard]] auto row_order() const -> std::vector<std::size_t>;

    // Metadata-only derivations; none of these copies a cell.

    /// `perm[i]` is the current logical row that becomes logical row i.
    [[nodiscard]] auto with_row_permutation(std::span<const std::size_t> perm) const -> Dataframe;
    [[nodiscard]] auto with_col_permutation(std::span<const std::size_t> perm) const -> Dataframe;
    [[nodiscard]] auto with_col_labels(std::vector<std::string> labels) const -> Dataframe;
    [[nodiscard]] auto with_row_labels(std::vector<std::string> labels) const -> Dataframe;
    [[nodiscard]] auto with_schema(std::vector<Domain> schema) const -> Dataframe;
    /// Transpose through the grid's orientation flags; the schema becomes
    /// `declared` or all Unspecified.
    [[nodiscard]] auto transposed(const std::optional<std::vector<Domain>>& declared = std::nullopt) const
        -> Dataframe;

    /// Source positions of each logical row in the frame this one was
    /// collected from; present only on collect composites.
    [[nodiscard]] auto origin() const -> const std::vector<std::size_t>* { return origin_.get(); }
    [[nodiscard]] auto with_origin(std::vector<std::size_t> positions) const -> Dataframe;

    /// Row label lookup through a lazily built index (built at most once per
    /// frame, counted in label_index_builds).
    [[nodiscard]] auto find_rows(const std::string& label) const -> const std::vector<std::size_t>&;
    [[nodiscard]] auto has_label_index() const -> bool;
    /// Logical positions of every column carrying `label`, in order.
    [[nodiscard]] auto find_cols(const std::string& label) const -> std::vector<std::size_t>;

    /// Unique id of the underlying storage (identity of in-memory sources).
    [[nodiscard]] auto storage_id() const -> const void* { return grid_.get(); }

    [[nodiscard]] auto approx_bytes() const -> std::size_t;

private:
    std::shared_ptr<const PartitionGrid> grid_;
    std::shared_ptr<const std::vector<std::string>> row_labels_;
    std::shared_ptr<const std::vector<std::string>> col_labels_;
    std::shared_ptr<const std::vector<Domain>> schema_;
    std::shared_ptr<const std::vector<std::size_t>> row_order_;
    std::shared_ptr<const std::vector<std::size_t>> col_order_;
    std::shared_ptr<const std::vector<std::size_t>> origin_;
    std::shared_ptr<LabelIndex> label_index_;
};

/// Logical equality on values, labels and domains.
auto operator==(const Dataframe& a, const Dataframe& b) -> bool;
/// Logical equality on values and labels only.
auto same_data(const Dataframe& a, const Dataframe& b) -> bool;

auto positional_labels(std::size_t n) -> std::vector<std::string>;

/// Positional (logical rank) or named (label) address along one axis.
using Selector = std::variant<std::size_t, std::string>;

auto point_get(const Dataframe& df, const Selector& row, const Selector& col) -> CellValue;
/// Returns a frame differing only in the addressed cell(s). Named selectors
/// address every match. The touched column keeps its domain only if the new
/// value parses under it.
auto point_set(const Dataframe& df, const Selector& row, const Selector& col, const CellValue& value) -> Dataframe;

}  // namespace dfk
