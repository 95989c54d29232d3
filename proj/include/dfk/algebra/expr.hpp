#pragma once

#include <dfk/core/cell.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace dfk::algebra {

/// Column labels and domains of a frame, without its data. Operators
/// resolve references and decide output metadata against this.
struct RowSchema {
    std::vector<std::string> labels;
    std::vector<Domain> domains;

    friend auto operator==(const RowSchema&, const RowSchema&) -> bool = default;
};

/// Named (label, first match) or positional column reference.
struct ColumnRef {
    std::variant<std::string, std::size_t> ref;

    static auto named(std::string label) -> ColumnRef { return ColumnRef{std::move(label)}; }
    static auto at(std::size_t position) -> ColumnRef { return ColumnRef{position}; }

    [[nodiscard]] auto resolve(const std::vector<std::string>& labels) const -> std::size_t;
    [[nodiscard]] auto to_string() const -> std::string;

    friend auto operator==(const ColumnRef&, const ColumnRef&) -> bool = default;
};

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

auto to_string(CompareOp op) -> std::string_view;

/// Boolean row predicate.
class Predicate {
public:
    enum class Kind { True, Compare, IsNull, NotNull, And, Or, Not };

    static auto always() -> Predicate;
    static auto compare(ColumnRef column, CompareOp op, CellValue literal) -> Predicate;
    static auto is_null(ColumnRef column) -> Predicate;
    static auto not_null(ColumnRef column) -> Predicate;
    static auto both(Predicate a, Predicate b) -> Predicate;
    static auto either(Predicate a, Predicate b) -> Predicate;
    static auto negate(Predicate a) -> Predicate;

    [[nodiscard]] auto kind() const -> Kind { return kind_; }
    [[nodiscard]] auto column() const -> const ColumnRef& { return column_; }
    [[nodiscard]] auto op() const -> CompareOp { return op_; }
    [[nodiscard]] auto literal() const -> const CellValue& { return literal_; }
    [[nodiscard]] auto children() const -> const std::vector<Predicate>& { return children_; }

    /// Columns whose domain must be known before evaluation (comparisons).
    void typed_columns(std::vector<ColumnRef>& out) const;
    void all_columns(std::vector<ColumnRef>& out) const;
    [[nodiscard]] auto to_string() const -> std::string;

    friend auto operator==(const Predicate&, const Predicate&) -> bool = default;

private:
    Kind kind_ = Kind::True;
    ColumnRef column_{std::size_t{0}};
    CompareOp op_ = CompareOp::Eq;
    CellValue literal_;
    std::vector<Predicate> children_;
};

/// Predicate resolved against a RowSchema with literals parsed into the
/// referenced column's domain.
class BoundPredicate {
public:
    /// Every compared column must already carry a domain.
    static auto bind(const Predicate& predicate, const RowSchema& schema) -> BoundPredicate;

    [[nodiscard]] auto eval(std::span<const CellValue> row) const -> bool;

private:
    Predicate::Kind kind_ = Predicate::Kind::True;
    std::size_t column_ = 0;
    Domain domain_ = Domain::Unspecified;
    CompareOp op_ = CompareOp::Eq;
    CellValue literal_;
    std::vector<BoundPredicate> children_;
};

struct SortKey {
    ColumnRef column;
    bool ascending = true;

    friend auto operator==(const SortKey&, const SortKey&) -> bool = default;
};

using SortSpec = std::vector<SortKey>;

enum class WindowFn { CumSum, CumMax, Diff, Shift, RollingSum };

auto to_string(WindowFn fn) -> std::string_view;
auto window_fn_from_string(std::string_view name) -> std::optional<WindowFn>;

/// `param` is the period for diff, the offset for shift and the width for
/// rolling_sum; cumulative functions ignore it. `reverse` runs the window
/// from the last logical row towards the first.
struct WindowSpec {
    WindowFn fn = WindowFn::CumSum;
    std::int64_t param = 1;
    bool reverse = false;

    friend auto operator==(const WindowSpec&, const WindowSpec&) -> bool = default;
};

enum class AggFn { Collect, Count, Sum, Mean, Min, Max };

auto to_string(AggFn fn) -> std::string_view;
auto agg_fn_from_string(std::string_view name) -> std::optional<AggFn>;

/// Aggregate over one column, or over every non-key column when `column` is
/// empty (collect then yields a single composite column named "collect").
struct Aggregate {
    AggFn fn = AggFn::Count;
    std::optional<std::string> column;

    friend auto operator==(const Aggregate&, const Aggregate&) -> bool = default;
};

struct GroupBySpec {
    std::vector<std::string> keys;
    std::vector<Aggregate> aggregates;

    friend auto operator==(const GroupBySpec&, const GroupBySpec&) -> bool = default;
};

enum class JoinKind { Cross, Inner, Left };

auto to_string(JoinKind kind) -> std::string_view;

struct JoinSpec {
    JoinKind kind = JoinKind::Cross;
    std::vector<std::pair<std::string, std::string>> on;

    friend auto operator==(const JoinSpec&, const JoinSpec&) -> bool = default;
};

enum class Axis { Columns, Rows };

}  // namespace dfk::algebra
