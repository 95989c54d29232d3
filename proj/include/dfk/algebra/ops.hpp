#pragma once

#include <dfk/algebra/expr.hpp>
#include <dfk/algebra/plan.hpp>
#include <dfk/algebra/udf.hpp>
#include <dfk/core/dataframe.hpp>

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

// Single-threaded operator kernels. They define the semantics; the engine
// reuses the helpers below and must agree with these results cell for cell.
namespace dfk::algebra {

auto row_schema(const Dataframe& df) -> RowSchema;

/// New frame from row-major cells; counts the cells as copied.
auto make_frame(std::size_t rows, std::vector<CellValue> cells, std::vector<std::string> row_labels,
                std::vector<std::string> col_labels, std::vector<Domain> schema, BlockShape shape = {}) -> Dataframe;

/// Copies the given logical rows (labels and schema follow).
auto gather_rows(const Dataframe& df, std::span<const std::size_t> rows) -> Dataframe;
auto gather_cols(const Dataframe& df, std::span<const std::size_t> cols) -> Dataframe;
auto slice_rows(const Dataframe& df, std::size_t begin, std::size_t end) -> Dataframe;
/// Row-wise concatenation of frames that share column labels and schema.
auto concat_rows(std::span<const Dataframe> parts, const Dataframe& like) -> Dataframe;

/// Named references expand to every match; positional ones are checked.
auto resolve_columns(const std::vector<std::string>& labels, const std::vector<ColumnRef>& refs)
    -> std::vector<std::size_t>;

auto selection(const Dataframe& df, const Predicate& predicate) -> Dataframe;
auto select_positions(const Dataframe& df, std::span<const std::size_t> positions) -> Dataframe;
auto select_labels(const Dataframe& df, const std::vector<std::string>& labels) -> Dataframe;
auto projection(const Dataframe& df, const std::vector<ColumnRef>& columns) -> Dataframe;

/// Column alignment of a union: output labels/schema and, per side, the
/// output column each input column lands in.
struct UnionAlignment {
    std::vector<std::string> labels;
    std::vector<Domain> schema;
    std::vector<std::size_t> left_to_out;
    std::vector<std::size_t> right_to_out;
};
auto align_union(const RowSchema& a, const RowSchema& b, bool strict) -> UnionAlignment;
auto union_all(const Dataframe& a, const Dataframe& b, bool strict = false) -> Dataframe;

auto difference(const Dataframe& a, const Dataframe& b) -> Dataframe;
/// Raw-text tuple key (null and "" coincide).
auto raw_row_key(const Dataframe& df, std::size_t row) -> std::string;

/// Join resolved against induced inputs.
struct JoinPlan {
    Dataframe left;
    Dataframe right;
    JoinKind kind = JoinKind::Cross;
    std::vector<std::pair<std::size_t, std::size_t>> keys;
    std::vector<std::size_t> right_kept;
    std::vector<std::string> labels;
    std::vector<Domain> schema;
};
auto prepare_join(const Dataframe& a, const Dataframe& b, const JoinSpec& spec) -> JoinPlan;
/// Parsed join key of one row, or nullopt when any key cell is null.
auto join_key(const JoinPlan& plan, bool left_side, std::size_t row) -> std::optional<std::string>;
/// Output rows as (left row, right row or none) pairs, nested left-major.
auto join_pairs_nested(const JoinPlan& plan, std::size_t left_begin, std::size_t left_end)
    -> std::vector<std::pair<std::size_t, std::optional<std::size_t>>>;
auto assemble_join(const JoinPlan& plan, std::span<const std::pair<std::size_t, std::optional<std::size_t>>> pairs)
    -> Dataframe;
auto join(const Dataframe& a, const Dataframe& b, const JoinSpec& spec) -> Dataframe;

auto drop_duplicates(const Dataframe& df) -> Dataframe;

struct GroupByPlan {
    Dataframe input;
    std::vector<std::size_t> keys;
    struct Output {
        AggFn fn;
        /// Source columns (several only for collect without a column).
        std::vector<std::size_t> columns;
        std::string label;
        Domain domain;
    };
    std::vector<Output> outputs;
};
auto prepare_groupby(const Dataframe& df, const GroupBySpec& spec) -> GroupByPlan;
auto group_key(const GroupByPlan& plan, std::size_t row) -> std::string;
/// Groups in first-occurrence order, members in parent order.
auto group_rows(const GroupByPlan& plan) -> std::vector<std::vector<std::size_t>>;
auto aggregate(const GroupByPlan& plan, std::size_t output, std::span<const std::size_t> members) -> CellValue;
auto assemble_groupby(const GroupByPlan& plan, const std::vector<std::vector<std::size_t>>& groups,
                      std::vector<CellValue> aggregate_cells) -> Dataframe;
auto groupby(const Dataframe& df, const GroupBySpec& spec) -> Dataframe;

/// Sort keys parsed up front; `less` is the stable-sort comparator.
struct SortKeys {
    std::vector<std::vector<CellValue>> columns;
    std::vector<bool> ascending;

    [[nodiscard]] auto less(std::size_t a, std::size_t b) const -> bool;
};
auto prepare_sort(const Dataframe& df, const SortSpec& spec, Dataframe& induced) -> SortKeys;
/// Conceptual sort: only the order vector changes.
auto sort(const Dataframe& df, const SortSpec& spec) -> Dataframe;
/// Stable column reorder by the values of the referenced rows.
auto sort_columns(const Dataframe& df, const SortSpec& spec) -> Dataframe;

auto rename(const Dataframe& df, Axis axis, const std::vector<std::pair<std::string, std::string>>& mapping)
    -> Dataframe;

auto window_targets(const Dataframe& df, const WindowParams& params) -> std::vector<std::size_t>;
/// One output column from a column already parsed under `domain`.
auto window_column(std::span<const CellValue> values, const WindowSpec& spec, Domain domain)
    -> std::vector<CellValue>;
/// Runs fn(0..n-1); the engine passes a parallel loop.
using ForEach = std::function<void(std::size_t, const std::function<void(std::size_t)>&)>;
auto window(const Dataframe& df, const WindowParams& params, const ForEach& for_each = {}) -> Dataframe;

/// Physical transpose (cells copied into a fresh grid).
auto transpose_copy(const Dataframe& df, const std::optional<std::vector<Domain>>& declared) -> Dataframe;

auto map(const Dataframe& df, const UdfSpec& udf) -> Dataframe;
/// Row-at-a-time map over an input whose typed columns are already induced.
auto map_rows(const Dataframe& df, const PreparedMap& prepared) -> Dataframe;

auto to_labels(const Dataframe& df, const std::string& label) -> Dataframe;
auto from_labels(const Dataframe& df, const std::string& label) -> Dataframe;

auto head(const Dataframe& df, std::size_t k) -> Dataframe;
auto tail(const Dataframe& df, std::size_t k) -> Dataframe;

auto pivot(const Dataframe& df, const PivotParams& params) -> Dataframe;

auto induce(const Dataframe& df, const InduceParams& params) -> Dataframe;

}  // namespace dfk::algebra
