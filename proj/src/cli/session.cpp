#include <dfk/cli/session.hpp>

#include <dfk/core/counters.hpp>
#include <dfk/core/error.hpp>
#include <dfk/io/csv.hpp>

namespace dfk::cli {

using namespace algebra;
using Kind = Expr::Kind;

namespace {

[[noreturn]] void bad(const Expr& e, const std::string& what) {
    fail(ErrorKind::Syntax, "line " + std::to_string(e.line) + ", column " + std::to_string(e.column) + ": " + what);
}

auto kwarg(const Expr& call, const std::string& key) -> const Expr* {
    for (const auto& [k, v] : call.kwargs) {
        if (k == key) {
            return &v;
        }
    }
    return nullptr;
}

void allow_kwargs(const Expr& call, std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : call.kwargs) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* key) { return k == key; })) {
            bad(v, call.text + "() has no argument '" + k + "'");
        }
    }
}

void arity(const Expr& call, std::size_t lo, std::size_t hi) {
    if (call.args.size() < lo || call.args.size() > hi) {
        const std::string want = lo == hi ? std::to_string(lo) : std::to_string(lo) + ".." + std::to_string(hi);
        bad(call, call.text + "() takes " + want + " arguments, got " + std::to_string(call.args.size()));
    }
}

auto string_of(const Expr& e) -> std::string {
    if (e.kind != Kind::String) {
        bad(e, "expected a string");
    }
    return e.text;
}

auto delimiter_of(const Expr& call) -> char {
    const auto* d = kwarg(call, "delimiter");
    if (d == nullptr) {
        return ',';
    }
    const auto text = string_of(*d);
    if (text.size() != 1) {
        bad(*d, "delimiter must be one character");
    }
    return text[0];
}

auto int_of(const Expr& e) -> std::int64_t {
    if (e.kind != Kind::Int) {
        bad(e, "expected an integer");
    }
    try {
        return std::stoll(e.text);
    } catch (const std::exception&) {
        bad(e, "integer out of range");
    }
}

auto count_of(const Expr& e) -> std::size_t {
    const auto v = int_of(e);
    if (v < 0) {
        bad(e, "expected a non-negative integer");
    }
    return static_cast<std::size_t>(v);
}

auto bool_of(const Expr& e) -> bool {
    if (e.kind != Kind::Bool) {
        bad(e, "expected true or false");
    }
    return e.text == "true";
}

auto flag(const Expr& call, const std::string& key, bool fallback) -> bool {
    const auto* e = kwarg(call, key);
    return e ? bool_of(*e) : fallback;
}

auto literal(const Expr& e) -> CellValue {
    switch (e.kind) {
        case Kind::String:
        case Kind::Int:
        case Kind::Float:
        case Kind::Bool: return CellValue::raw(e.text);
        case Kind::Null: return CellValue::null();
        default: bad(e, "expected a literal");
    }
}

/// Arguments from `from` on, with lists flattened one level.
auto rest(const Expr& call, std::size_t from) -> std::vector<const Expr*> {
    std::vector<const Expr*> out;
    for (std::size_t i = from; i < call.args.size(); ++i) {
        if (call.args[i].kind == Kind::List) {
            for (const auto& x : call.args[i].args) {
                out.push_back(&x);
            }
        } else {
            out.push_back(&call.args[i]);
        }
    }
    return out;
}

auto column_of(const Expr& e) -> ColumnRef {
    if (e.kind == Kind::Int) {
        return ColumnRef::at(count_of(e));
    }
    if (e.kind == Kind::Call && e.text == "col") {
        arity(e, 1, 1);
        return column_of(e.args[0]);
    }
    return ColumnRef::named(string_of(e));
}

auto selector_of(const Expr& e) -> Selector {
    if (e.kind == Kind::Int) {
        return count_of(e);
    }
    return string_of(e);
}

auto compare_op(const Expr& e, bool flipped) -> CompareOp {
    static const std::vector<std::pair<std::string, CompareOp>> ops{{"==", CompareOp::Eq}, {"!=", CompareOp::Ne},
                                                                   {"<", CompareOp::Lt},  {"<=", CompareOp::Le},
                                                                   {">", CompareOp::Gt},  {">=", CompareOp::Ge}};
    CompareOp op = CompareOp::Eq;
    for (const auto& [text, o] : ops) {
        if (text == e.text) {
            op = o;
        }
    }
    if (!flipped) {
        return op;
    }
    switch (op) {
        case CompareOp::Lt: return CompareOp::Gt;
        case CompareOp::Le: return CompareOp::Ge;
        case CompareOp::Gt: return CompareOp::Lt;
        case CompareOp::Ge: return CompareOp::Le;
        default: return op;
    }
}

auto is_col(const Expr& e) -> bool { return e.kind == Kind::Call && e.text == "col"; }

auto predicate_of(const Expr& e) -> Predicate {
    switch (e.kind) {
        case Kind::Bool:
            if (e.text == "true") {
                return Predicate::always();
            }
            return Predicate::negate(Predicate::always());
        case Kind::And: return Predicate::both(predicate_of(e.args[0]), predicate_of(e.args[1]));
        case Kind::Or: return Predicate::either(predicate_of(e.args[0]), predicate_of(e.args[1]));
        case Kind::Not: return Predicate::negate(predicate_of(e.args[0]));
        case Kind::Compare: {
            const bool left = is_col(e.args[0]);
            if (left == is_col(e.args[1])) {
                bad(e, "a comparison needs exactly one col(...) side");
            }
            const auto& c = left ? e.args[0] : e.args[1];
            const auto& v = left ? e.args[1] : e.args[0];
            if (v.kind == Kind::Null) {
                bad(v, "compare with null is never true; use isnull(col(...))");
            }
            return Predicate::compare(column_of(c), compare_op(e, !left), literal(v));
        }
        case Kind::Call:
            if (e.text == "isnull" || e.text == "notnull") {
                arity(e, 1, 1);
                const auto col = column_of(e.args[0]);
                return e.text == "isnull" ? Predicate::is_null(col) : Predicate::not_null(col);
            }
            break;
        default: break;
    }
    bad(e, "expected a predicate");
}

auto aggregate_of(const Expr& e) -> Aggregate {
    const std::string& name = e.text;
    const auto fn = agg_fn_from_string(name);
    if ((e.kind != Kind::Name && e.kind != Kind::Call) || !fn) {
        bad(e, "expected an aggregate (count, sum, mean, min, max, collect)");
    }
    Aggregate agg;
    agg.fn = *fn;
    if (e.kind == Kind::Call) {
        arity(e, 0, 1);
        if (!e.args.empty()) {
            agg.column = string_of(e.args[0]);
        }
    }
    return agg;
}

auto sort_key_of(const Expr& e) -> SortKey {
    if (e.kind == Kind::Call && (e.text == "asc" || e.text == "desc")) {
        arity(e, 1, 1);
        return SortKey{column_of(e.args[0]), e.text == "asc"};
    }
    return SortKey{column_of(e), true};
}

}  // namespace

Session::Session(SessionOptions options)
    : options_(options), engine_(std::make_unique<engine::Engine>(options.engine)) {}

auto Session::handle(const std::string& name) const -> const engine::Handle& {
    auto it = bindings_.find(name);
    if (it == bindings_.end()) {
        fail(ErrorKind::InvalidArgument, "unknown name '" + name + "'");
    }
    return it->second;
}

auto Session::build(const Expr& e) -> PlanRef {
    if (e.kind == Kind::Name) {
        auto it = bindings_.find(e.text);
        if (it == bindings_.end()) {
            bad(e, "unknown name '" + e.text + "'");
        }
        return it->second.plan();
    }
    if (e.kind != Kind::Call) {
        bad(e, "expected a dataframe expression");
    }
    const std::string& f = e.text;
    auto frame = [&](std::size_t i) { return build(e.args.at(i)); };
    if (f == "read_csv") {
        arity(e, 1, 1);
        allow_kwargs(e, {"row_labels", "delimiter", "fused"});
        CsvSource src;
        src.path = string_of(e.args[0]);
        src.has_row_labels = flag(e, "row_labels", false);
        src.fuse_induction = flag(e, "fused", false);
        src.delimiter = delimiter_of(e);
        return plan::scan_csv(std::move(src));
    }
    allow_kwargs(e, {"strict", "how", "on", "left_on", "right_on", "axis", "param", "reverse"});
    if (f == "select" || f == "where") {
        arity(e, 2, 2);
        return plan::select(frame(0), predicate_of(e.args[1]));
    }
    if (f == "iloc") {
        arity(e, 1, SIZE_MAX);
        std::vector<std::size_t> pos;
        for (const auto* x : rest(e, 1)) {
            pos.push_back(count_of(*x));
        }
        return plan::select_positions(frame(0), std::move(pos));
    }
    if (f == "loc") {
        arity(e, 1, SIZE_MAX);
        std::vector<std::string> labels;
        for (const auto* x : rest(e, 1)) {
            labels.push_back(string_of(*x));
        }
        return plan::select_labels(frame(0), std::move(labels));
    }
    if (f == "project") {
        arity(e, 1, SIZE_MAX);
        std::vector<ColumnRef> cols;
        for (const auto* x : rest(e, 1)) {
            cols.push_back(column_of(*x));
        }
        return plan::project(frame(0), std::move(cols));
    }
    if (f == "union") {
        arity(e, 2, 2);
        return plan::union_of(frame(0), frame(1), flag(e, "strict", false));
    }
    if (f == "difference") {
        arity(e, 2, 2);
        return plan::difference(frame(0), frame(1));
    }
    if (f == "join") {
        arity(e, 2, 2);
        JoinSpec spec;
        std::vector<std::string> left;
        std::vector<std::string> right;
        auto names = [&](const Expr& x) {
            std::vector<std::string> out;
            if (x.kind == Kind::List) {
                for (const auto& y : x.args) {
                    out.push_back(string_of(y));
                }
            } else {
                out.push_back(string_of(x));
            }
            return out;
        };
        if (const auto* on = kwarg(e, "on")) {
            left = right = names(*on);
        }
        if (const auto* l = kwarg(e, "left_on")) {
            left = names(*l);
        }
        if (const auto* r = kwarg(e, "right_on")) {
            right = names(*r);
        }
        if (left.size() != right.size()) {
            bad(e, "left_on and right_on differ in length");
        }
        spec.kind = left.empty() ? JoinKind::Cross : JoinKind::Inner;
        if (const auto* how = kwarg(e, "how")) {
            const auto h = string_of(*how);
            if (h == "inner") {
                spec.kind = JoinKind::Inner;
            } else if (h == "left") {
                spec.kind = JoinKind::Left;
            } else if (h == "cross") {
                spec.kind = JoinKind::Cross;
            } else {
                bad(*how, "how must be inner, left or cross");
            }
        }
        if ((spec.kind == JoinKind::Cross) != left.empty()) {
            bad(e, spec.kind == JoinKind::Cross ? "a cross join takes no keys" : "join keys missing (on=...)");
        }
        for (std::size_t i = 0; i < left.size(); ++i) {
            spec.on.emplace_back(left[i], right[i]);
        }
        return plan::join(frame(0), frame(1), std::move(spec));
    }
    if (f == "drop_duplicates") {
        arity(e, 1, 1);
        return plan::drop_duplicates(frame(0));
    }
    if (f == "groupby") {
        arity(e, 3, SIZE_MAX);
        GroupBySpec spec;
        const auto& keys = e.args[1];
        if (keys.kind == Kind::List) {
            for (const auto& k : keys.args) {
                spec.keys.push_back(string_of(k));
            }
        } else {
            spec.keys.push_back(string_of(keys));
        }
        for (std::size_t i = 2; i < e.args.size(); ++i) {
            spec.aggregates.push_back(aggregate_of(e.args[i]));
        }
        return plan::groupby(frame(0), std::move(spec));
    }
    if (f == "sort") {
        arity(e, 2, SIZE_MAX);
        SortSpec spec;
        for (const auto* x : rest(e, 1)) {
            spec.push_back(sort_key_of(*x));
        }
        return plan::sort(frame(0), std::move(spec));
    }
    if (f == "rename") {
        arity(e, 3, SIZE_MAX);
        const auto args = rest(e, 1);
        if (args.size() % 2 != 0) {
            bad(e, "rename() takes old/new label pairs");
        }
        std::vector<std::pair<std::string, std::string>> mapping;
        for (std::size_t i = 0; i < args.size(); i += 2) {
            mapping.emplace_back(string_of(*args[i]), string_of(*args[i + 1]));
        }
        Axis axis = Axis::Columns;
        if (const auto* a = kwarg(e, "axis")) {
            const auto text = string_of(*a);
            if (text != "rows" && text != "columns") {
                bad(*a, "axis must be rows or columns");
            }
            axis = text == "rows" ? Axis::Rows : Axis::Columns;
        }
        return plan::rename(frame(0), std::move(mapping), axis);
    }
    if (f == "window") {
        arity(e, 2, SIZE_MAX);
        WindowSpec spec;
        const auto fn = window_fn_from_string(string_of(e.args[1]));
        if (!fn) {
            bad(e.args[1], "unknown window function (cumsum, cummax, diff, shift, rolling_sum)");
        }
        spec.fn = *fn;
        if (const auto* p = kwarg(e, "param")) {
            spec.param = int_of(*p);
        }
        spec.reverse = flag(e, "reverse", false);
        std::vector<ColumnRef> targets;
        for (const auto* x : rest(e, 2)) {
            targets.push_back(column_of(*x));
        }
        return plan::window(frame(0), spec, std::move(targets));
    }
    if (f == "transpose" || f == "T") {
        arity(e, 1, 1);
        return plan::transpose(frame(0));
    }
    if (f == "map") {
        arity(e, 2, SIZE_MAX);
        const auto name = string_of(e.args[1]);
        if (!is_builtin_udf(name)) {
            bad(e.args[1], "unknown map function '" + name + "'");
        }
        std::vector<CellValue> params;
        for (std::size_t i = 2; i < e.args.size(); ++i) {
            // Numbers stay typed so arith can tell a literal from a column label.
            const auto& x = e.args[i];
            if (x.kind == Kind::Int) {
                params.push_back(CellValue::integer(int_of(x)));
            } else if (x.kind == Kind::Float) {
                params.push_back(CellValue::real(std::stod(x.text)));
            } else {
                params.push_back(literal(x));
            }
        }
        return plan::map(frame(0), UdfSpec::builtin(name, std::move(params)));
    }
    if (f == "to_labels" || f == "set_index") {
        arity(e, 2, 2);
        return plan::to_labels(frame(0), string_of(e.args[1]));
    }
    if (f == "from_labels" || f == "reset_index") {
        arity(e, 1, 2);
        return plan::from_labels(frame(0), e.args.size() == 2 ? string_of(e.args[1]) : "index");
    }
    if (f == "head" || f == "tail") {
        arity(e, 1, 2);
        const std::size_t k = e.args.size() == 2 ? count_of(e.args[1]) : options_.render_rows;
        return f == "head" ? plan::head(frame(0), k) : plan::tail(frame(0), k);
    }
    if (f == "pivot") {
        arity(e, 4, 4);
        return plan::pivot(frame(0), string_of(e.args[1]), string_of(e.args[2]), string_of(e.args[3]));
    }
    if (f == "induce") {
        arity(e, 1, SIZE_MAX);
        std::optional<std::vector<ColumnRef>> cols;
        if (e.args.size() > 1) {
            cols.emplace();
            for (const auto* x : rest(e, 1)) {
                cols->push_back(column_of(*x));
            }
        }
        return plan::induce(frame(0), std::move(cols));
    }
    if (f == "set") {
        arity(e, 4, 4);
        return plan::point_set(frame(0), selector_of(e.args[1]), selector_of(e.args[2]), literal(e.args[3]));
    }
    bad(e, "unknown function '" + f + "'");
}

auto Session::run(const Statement& st) -> std::string {
    ++counter_;
    const Expr& e = st.expr;
    if (e.kind == Kind::Call && e.text == "stats" && !st.target) {
        arity(e, 0, 0);
        return counters().snapshot().dump();
    }
    if (e.kind == Kind::Call && e.text == "explain" && !st.target) {
        arity(e, 1, 1);
        return engine_->explain(build(e.args[0]));
    }
    if (e.kind == Kind::Call && e.text == "write_csv" && !st.target) {
        arity(e, 2, 2);
        allow_kwargs(e, {"row_labels", "delimiter"});
        io::CsvOptions opts;
        opts.has_row_labels = flag(e, "row_labels", false);
        opts.delimiter = delimiter_of(e);
        const auto h = engine_->submit(build(e.args[0]));
        io::write_csv(engine_->collect(h), string_of(e.args[1]), opts);
        return {};
    }
    std::string out;
    if (e.kind == Kind::Name && !st.target) {
        const auto& h = handle(e.text);
        if (options_.explain) {
            out += engine_->explain(h.plan());
        }
        return out + engine_->render(h, options_.render_rows);
    }
    const auto plan = fenced(build(e), st.target.value_or("_" + std::to_string(counter_)));
    if (options_.explain) {
        out += engine_->explain(plan);
    }
    const auto h = engine_->submit(plan);
    if (st.target) {
        bindings_.insert_or_assign(*st.target, h);
        return out;
    }
    return out + engine_->render(h, options_.render_rows);
}

auto Session::run_text(const std::string& text) -> std::string {
    std::string out;
    for (const auto& st : parse_script(text)) {
        out += run(st);
    }
    return out;
}

}  // namespace dfk::cli
