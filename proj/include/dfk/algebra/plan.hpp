#pragma once

#include <dfk/algebra/expr.hpp>
#include <dfk/algebra/udf.hpp>
#include <dfk/core/dataframe.hpp>
#include <dfk/core/op_kind.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dfk::algebra {

struct PlanNode;
using PlanRef = std::shared_ptr<const PlanNode>;

struct CsvSource {
    std::string path;
    bool has_row_labels = false;
    char delimiter = ',';
    /// Run schema induction inside the scan pass.
    bool fuse_induction = false;
};

struct ScanParams {
    std::shared_ptr<const Dataframe> frame;
    std::optional<CsvSource> csv;
    std::string name;
};

struct SelectionParams {
    enum class Mode { Predicate, Positions, Labels };
    Mode mode = Mode::Predicate;
    Predicate predicate;
    std::vector<std::size_t> positions;
    std::vector<std::string> labels;
};

struct ProjectionParams {
    /// Named references select every column carrying the label.
    std::vector<ColumnRef> columns;
};

struct UnionParams {
    bool strict = false;
};

struct RenameParams {
    Axis axis = Axis::Columns;
    std::vector<std::pair<std::string, std::string>> mapping;
};

struct WindowParams {
    WindowSpec spec;
    /// Empty means every column.
    std::vector<ColumnRef> targets;
};

struct TransposeParams {
    std::optional<std::vector<Domain>> declared;
};

struct LabelParams {
    std::string label;
};

struct CountParams {
    std::size_t k = 0;
};

struct PivotParams {
    std::string pivot;
    std::string key;
    std::string value;
};

struct InduceParams {
    /// Absent means every column.
    std::optional<std::vector<ColumnRef>> columns;
    /// Requested by the user (never elided by the planner).
    bool explicit_request = true;
};

struct PointSetParams {
    Selector row;
    Selector col;
    CellValue value;
};

using NoParams = std::monostate;

using PlanParams = std::variant<NoParams, ScanParams, SelectionParams, ProjectionParams, UnionParams, JoinSpec,
                                GroupBySpec, SortSpec, RenameParams, WindowParams, TransposeParams, UdfSpec,
                                LabelParams, CountParams, PivotParams, InduceParams, PointSetParams>;

/// Immutable logical plan node. The hash covers kind, parameters and
/// inputs (not the fence flag or binding name), so structurally identical
/// subplans share a hash.
struct PlanNode {
    OpKind kind;
    std::vector<PlanRef> inputs;
    PlanParams params;
    /// Statement boundary: the planner treats the subtree as opaque.
    bool fence = false;
    std::string binding;
    std::uint64_t hash = 0;
    std::string param_key;

    template <typename P>
    [[nodiscard]] auto as() const -> const P& {
        return std::get<P>(params);
    }
};

/// Builds a node and computes its canonical key and hash.
auto make_node(OpKind kind, std::vector<PlanRef> inputs, PlanParams params) -> PlanRef;
/// Same node with new inputs (keeps fence and binding).
auto with_inputs(const PlanRef& node, std::vector<PlanRef> inputs) -> PlanRef;
auto fenced(const PlanRef& node, std::string binding) -> PlanRef;

/// Structural equality: kind, parameters and inputs, recursively.
auto structurally_equal(const PlanRef& a, const PlanRef& b) -> bool;

namespace plan {

auto scan(Dataframe frame, std::string name = "frame") -> PlanRef;
auto scan_csv(CsvSource source) -> PlanRef;
auto select(PlanRef in, Predicate predicate) -> PlanRef;
auto select_positions(PlanRef in, std::vector<std::size_t> positions) -> PlanRef;
auto select_labels(PlanRef in, std::vector<std::string> labels) -> PlanRef;
auto project(PlanRef in, std::vector<ColumnRef> columns) -> PlanRef;
auto project(PlanRef in, const std::vector<std::string>& labels) -> PlanRef;
auto union_of(PlanRef a, PlanRef b, bool strict = false) -> PlanRef;
auto difference(PlanRef a, PlanRef b) -> PlanRef;
auto join(PlanRef a, PlanRef b, JoinSpec spec) -> PlanRef;
auto drop_duplicates(PlanRef in) -> PlanRef;
auto groupby(PlanRef in, GroupBySpec spec) -> PlanRef;
auto sort(PlanRef in, SortSpec spec) -> PlanRef;
auto sort_columns(PlanRef in, SortSpec spec) -> PlanRef;
auto rename(PlanRef in, std::vector<std::pair<std::string, std::string>> mapping, Axis axis = Axis::Columns)
    -> PlanRef;
auto window(PlanRef in, WindowSpec spec, std::vector<ColumnRef> targets = {}) -> PlanRef;
auto transpose(PlanRef in, std::optional<std::vector<Domain>> declared = std::nullopt) -> PlanRef;
auto map(PlanRef in, UdfSpec udf) -> PlanRef;
auto to_labels(PlanRef in, std::string label) -> PlanRef;
auto from_labels(PlanRef in, std::string label) -> PlanRef;
auto head(PlanRef in, std::size_t k) -> PlanRef;
auto tail(PlanRef in, std::size_t k) -> PlanRef;
auto pivot(PlanRef in, std::string pivot, std::string key, std::string value) -> PlanRef;
auto induce(PlanRef in, std::optional<std::vector<ColumnRef>> columns = std::nullopt, bool explicit_request = true)
    -> PlanRef;
auto point_set(PlanRef in, Selector row, Selector col, CellValue value) -> PlanRef;

}  // namespace plan

/// The pivot macro: GROUPBY(pivot, collect) -> MAP(flatten(key, value))
/// -> TOLABELS(pivot) -> TRANSPOSE.
auto expand_pivot(const PlanRef& pivot_node) -> PlanRef;

/// Operators whose output order is inherited from the input ("Parent").
auto preserves_parent_order(OpKind kind) -> bool;
/// Operators whose output schema is carried over from the inputs.
auto static_schema(OpKind kind) -> bool;

/// Indented tree, one node per line. Shared subplans are printed once and
/// referenced by "^n" afterwards; fenced subplans print as their binding.
auto to_string(const PlanRef& plan) -> std::string;
auto describe(const PlanNode& node) -> std::string;

}  // namespace dfk::algebra
