#include <dfk/algebra/expr.hpp>

#include <dfk/core/error.hpp>

#include <array>

namespace dfk::algebra {

auto ColumnRef::resolve(const std::vector<std::string>& labels) const -> std::size_t {
    if (const auto* pos = std::get_if<std::size_t>(&ref)) {
        if (*pos >= labels.size()) {
            fail(ErrorKind::IndexOutOfBounds,
                 "column position " + std::to_string(*pos) + " out of range (" + std::to_string(labels.size()) + ")");
        }
        return *pos;
    }
    const auto& name = std::get<std::string>(ref);
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[j] == name) {
            return j;
        }
    }
    fail(ErrorKind::UnknownColumn, "no column labelled '" + name + "'");
}

auto ColumnRef::to_string() const -> std::string {
    if (const auto* pos = std::get_if<std::size_t>(&ref)) {
        return "#" + std::to_string(*pos);
    }
    return "\"" + std::get<std::string>(ref) + "\"";
}

auto to_string(CompareOp op) -> std::string_view {
    switch (op) {
        case CompareOp::Eq: return "==";
        case CompareOp::Ne: return "!=";
        case CompareOp::Lt: return "<";
        case CompareOp::Le: return "<=";
        case CompareOp::Gt: return ">";
        case CompareOp::Ge: return ">=";
    }
    return "?";
}

auto Predicate::always() -> Predicate { return Predicate{}; }

auto Predicate::compare(ColumnRef column, CompareOp op, CellValue literal) -> Predicate {
    Predicate p;
    p.kind_ = Kind::Compare;
    p.column_ = std::move(column);
    p.op_ = op;
    p.literal_ = std::move(literal);
    return p;
}

auto Predicate::is_null(ColumnRef column) -> Predicate {
    Predicate p;
    p.kind_ = Kind::IsNull;
    p.column_ = std::move(column);
    return p;
}

auto Predicate::not_null(ColumnRef column) -> Predicate {
    Predicate p;
    p.kind_ = Kind::NotNull;
    p.column_ = std::move(column);
    return p;
}

auto Predicate::both(Predicate a, Predicate b) -> Predicate {
    Predicate p;
    p.kind_ = Kind::And;
    p.children_ = {std::move(a), std::move(b)};
    return p;
}

auto Predicate::either(Predicate a, Predicate b) -> Predicate {
    Predicate p;
    p.kind_ = Kind::Or;
    p.children_ = {std::move(a), std::move(b)};
    return p;
}

auto Predicate::negate(Predicate a) -> Predicate {
    Predicate p;
    p.kind_ = Kind::Not;
    p.children_ = {std::move(a)};
    return p;
}

void Predicate::typed_columns(std::vector<ColumnRef>& out) const {
    if (kind_ == Kind::Compare) {
        out.push_back(column_);
    }
    for (const auto& c : children_) {
        c.typed_columns(out);
    }
}

void Predicate::all_columns(std::vector<ColumnRef>& out) const {
    if (kind_ == Kind::Compare || kind_ == Kind::IsNull || kind_ == Kind::NotNull) {
        out.push_back(column_);
    }
    for (const auto& c : children_) {
        c.all_columns(out);
    }
}

auto Predicate::to_string() const -> std::string {
    auto literal_text = [](const CellValue& v) -> std::string {
        if (v.is_raw()) {
            return "\"" + v.text() + "\"";
        }
        if (v.is_null()) {
            return "null";
        }
        return v.to_text();
    };
    switch (kind_) {
        case Kind::True: return "true";
        case Kind::Compare:
            return "col(" + column_.to_string() + ") " + std::string(algebra::to_string(op_)) + " " +
                   literal_text(literal_);
        case Kind::IsNull: return "isnull(col(" + column_.to_string() + "))";
        case Kind::NotNull: return "notnull(col(" + column_.to_string() + "))";
        case Kind::And: return "(" + children_[0].to_string() + " and " + children_[1].to_string() + ")";
        case Kind::Or: return "(" + children_[0].to_string() + " or " + children_[1].to_string() + ")";
        case Kind::Not: return "not " + children_[0].to_string();
    }
    return "?";
}

namespace {

auto bind_literal(const CellValue& literal, Domain domain) -> CellValue {
    switch (domain) {
        case Domain::Int:
        case Domain::Float: {
            if (literal.is_int() || literal.is_float()) {
                return literal;
            }
            if (literal.is_raw()) {
                if (auto i = parse_int_text(literal.text())) {
                    return CellValue::integer(*i);
                }
                if (auto f = parse_float_text(literal.text())) {
                    return CellValue::real(*f);
                }
            }
            break;
        }
        case Domain::Bool: {
            if (literal.is_bool()) {
                return literal;
            }
            if (literal.is_raw()) {
                if (auto b = parse_bool_text(literal.text())) {
                    return CellValue::boolean(*b);
                }
            }
            break;
        }
        case Domain::Str:
        case Domain::Category:
            if (!literal.is_null()) {
                return CellValue::raw(literal.to_text());
            }
            break;
        case Domain::Unspecified:
            break;
    }
    fail(ErrorKind::DomainMismatch,
         "literal '" + literal.to_text() + "' cannot be compared with a " + std::string(to_string(domain)) + " column");
}

}  // namespace

auto BoundPredicate::bind(const Predicate& predicate, const RowSchema& schema) -> BoundPredicate {
    BoundPredicate b;
    b.kind_ = predicate.kind();
    switch (predicate.kind()) {
        case Predicate::Kind::True:
            break;
        case Predicate::Kind::Compare: {
            b.column_ = predicate.column().resolve(schema.labels);
            b.domain_ = schema.domains[b.column_];
            if (b.domain_ == Domain::Unspecified) {
                fail(ErrorKind::InvalidArgument, "comparison on a column without an induced domain");
            }
            b.op_ = predicate.op();
            b.literal_ = bind_literal(predicate.literal(), b.domain_);
            break;
        }
        case Predicate::Kind::IsNull:
        case Predicate::Kind::NotNull:
            b.column_ = predicate.column().resolve(schema.labels);
            break;
        case Predicate::Kind::And:
        case Predicate::Kind::Or:
        case Predicate::Kind::Not:
            for (const auto& c : predicate.children()) {
                b.children_.push_back(bind(c, schema));
            }
            break;
    }
    return b;
}

auto BoundPredicate::eval(std::span<const CellValue> row) const -> bool {
    switch (kind_) {
        case Predicate::Kind::True: return true;
        case Predicate::Kind::IsNull: return is_null_token(row[column_]);
        case Predicate::Kind::NotNull: return !is_null_token(row[column_]);
        case Predicate::Kind::And: return children_[0].eval(row) && children_[1].eval(row);
        case Predicate::Kind::Or: return children_[0].eval(row) || children_[1].eval(row);
        case Predicate::Kind::Not: return !children_[0].eval(row);
        case Predicate::Kind::Compare: {
            auto parsed = try_parse(row[column_], domain_);
            if (!parsed || parsed->is_null()) {
                return false;
            }
            auto ord = compare_cells(*parsed, literal_);
            if (ord == std::partial_ordering::unordered) {
                return false;
            }
            switch (op_) {
                case CompareOp::Eq: return ord == 0;
                case CompareOp::Ne: return ord != 0;
                case CompareOp::Lt: return ord < 0;
                case CompareOp::Le: return ord <= 0;
                case CompareOp::Gt: return ord > 0;
                case CompareOp::Ge: return ord >= 0;
            }
        }
    }
    return false;
}

auto to_string(WindowFn fn) -> std::string_view {
    switch (fn) {
        case WindowFn::CumSum: return "cumsum";
        case WindowFn::CumMax: return "cummax";
        case WindowFn::Diff: return "diff";
        case WindowFn::Shift: return "shift";
        case WindowFn::RollingSum: return "rolling_sum";
    }
    return "?";
}

auto window_fn_from_string(std::string_view name) -> std::optional<WindowFn> {
    static constexpr std::array<WindowFn, 5> kAll{WindowFn::CumSum, WindowFn::CumMax, WindowFn::Diff, WindowFn::Shift,
                                                  WindowFn::RollingSum};
    for (auto fn : kAll) {
        if (to_string(fn) == name) {
            return fn;
        }
    }
    return std::nullopt;
}

auto to_string(AggFn fn) -> std::string_view {
    switch (fn) {
        case AggFn::Collect: return "collect";
        case AggFn::Count: return "count";
        case AggFn::Sum: return "sum";
        case AggFn::Mean: return "mean";
        case AggFn::Min: return "min";
        case AggFn::Max: return "max";
    }
    return "?";
}

auto agg_fn_from_string(std::string_view name) -> std::optional<AggFn> {
    static constexpr std::array<AggFn, 6> kAll{AggFn::Collect, AggFn::Count, AggFn::Sum,
                                               AggFn::Mean,    AggFn::Min,   AggFn::Max};
    for (auto fn : kAll) {
        if (to_string(fn) == name) {
            return fn;
        }
    }
    return std::nullopt;
}

auto to_string(JoinKind kind) -> std::string_view {
    switch (kind) {
        case JoinKind::Cross: return "cross";
        case JoinKind::Inner: return "inner";
        case JoinKind::Left: return "left";
    }
    return "?";
}

}  // namespace dfk::algebra
