#pragma once

#include <dfk/algebra/expr.hpp>
#include <dfk/core/dataframe.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dfk::algebra {

struct DeclaredOutput {
    std::vector<std::string> labels;
    std::vector<Domain> schema;

    friend auto operator==(const DeclaredOutput&, const DeclaredOutput&) -> bool = default;
};

using HostFn = std::function<std::vector<CellValue>(std::span<const CellValue>)>;

/// Function applied by MAP. Builtins are identified by name and take
/// literal parameters; host closures wrap arbitrary C++ callables.
///
/// Builtins:
///   identity()
///   fillna(v [, col])            nulls replaced by v
///   isnull([col])                Bool indicators
///   str_upper([col])
///   replace(col, from, to, ...)  raw-text substitution
///   arith(out, lhs, op, rhs)     op in + - * /; rhs is a column label or a numeric literal
///   cast(col, domain)
///   one_hot(col)                 two-pass: one Bool column per distinct value
///   flatten(key, value [, col])  two-pass: expands collect composites
struct UdfSpec {
    enum class Kind { Builtin, HostClosure };

    std::string name;
    Kind kind = Kind::Builtin;
    std::vector<CellValue> params;
    std::optional<DeclaredOutput> declared_output;
    std::shared_ptr<const HostFn> host;

    static auto builtin(std::string name, std::vector<CellValue> params = {}) -> UdfSpec;
    static auto closure(std::string name, HostFn fn, std::optional<DeclaredOutput> declared = std::nullopt)
        -> UdfSpec;

    /// Output arity depends on the data (needs a key-collection pass).
    [[nodiscard]] auto two_pass() const -> bool;
    [[nodiscard]] auto to_string() const -> std::string;
};

auto is_builtin_udf(std::string_view name) -> bool;

/// Columns whose domain a static UDF needs before it can run.
auto map_typed_columns(const UdfSpec& udf, const RowSchema& input) -> std::vector<std::size_t>;

/// A static-arity UDF resolved against its input schema. `apply` appends
/// exactly `output.labels.size()` cells per row.
struct PreparedMap {
    RowSchema output;
    std::function<void(std::span<const CellValue>, std::vector<CellValue>&)> apply;
};

/// Requires every column listed by map_typed_columns to carry a domain.
auto prepare_map(const UdfSpec& udf, const RowSchema& input) -> PreparedMap;

/// Two-pass builtins over a whole frame (domains of typed columns induced
/// by the caller are not needed: both work on raw text).
auto run_two_pass(const UdfSpec& udf, const Dataframe& df) -> Dataframe;

}  // namespace dfk::algebra
