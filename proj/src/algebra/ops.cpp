#include <dfk/algebra/ops.hpp>

#include <dfk/core/counters.hpp>
#include <dfk/core/error.hpp>
#include <dfk/core/schema.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace dfk::algebra {

namespace {

void append_keyed(std::string& key, const std::string& text) {
    key += std::to_string(text.size());
    key += ':';
    key += text;
}

auto identity(std::size_t n) -> std::vector<std::size_t> {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

auto wrap_add(std::int64_t a, std::int64_t b) -> std::int64_t {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}

auto wrap_sub(std::int64_t a, std::int64_t b) -> std::int64_t {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}

auto parsed_column(const Dataframe& df, std::size_t col) -> std::vector<CellValue> {
    std::vector<CellValue> out;
    out.reserve(df.rows());
    const Domain d = df.domain(col);
    for (std::size_t i = 0; i < df.rows(); ++i) {
        out.push_back(parse(df.at(i, col), d));
    }
    return out;
}

auto comparable(Domain a, Domain b) -> bool {
    if (is_numeric(a) && is_numeric(b)) {
        return true;
    }
    auto textual = [](Domain d) { return d == Domain::Str || d == Domain::Category; };
    return (textual(a) && textual(b)) || (a == Domain::Bool && b == Domain::Bool);
}

auto canonical_key(const CellValue& v) -> std::string {
    if (v.is_int()) {
        return "n" + std::to_string(v.as_int());
    }
    if (v.is_float()) {
        const double f = v.as_float();
        constexpr double kLimit = 9223372036854775808.0;
        if (f >= -kLimit && f < kLimit && static_cast<double>(static_cast<std::int64_t>(f)) == f) {
            return "n" + std::to_string(static_cast<std::int64_t>(f));
        }
        return "n" + format_float(f);
    }
    if (v.is_bool()) {
        return v.as_bool() ? "b1" : "b0";
    }
    return "s" + v.to_text();
}

}  // namespace

auto row_schema(const Dataframe& df) -> RowSchema { return RowSchema{df.col_labels(), df.schema()}; }

auto make_frame(std::size_t rows, std::vector<CellValue> cells, std::vector<std::string> row_labels,
                std::vector<std::string> col_labels, std::vector<Domain> schema, BlockShape shape) -> Dataframe {
    const std::size_t cols = col_labels.size();
    if (cells.size() != rows * cols) {
        fail(ErrorKind::ArityMismatch, "cell count does not match frame shape");
    }
    counters().cells_copied.fetch_add(cells.size(), std::memory_order_relaxed);
    if (schema.empty()) {
        schema.assign(cols, Domain::Unspecified);
    }
    if (row_labels.empty()) {
        row_labels = positional_labels(rows);
    }
    auto grid = PartitionGrid::from_row_major(rows, cols, std::move(cells), shape);
    return Dataframe(std::move(grid), std::move(row_labels), std::move(col_labels), std::move(schema));
}

auto gather_rows(const Dataframe& df, std::span<const std::size_t> rows) -> Dataframe {
    std::vector<CellValue> cells;
    cells.reserve(rows.size() * df.cols());
    std::vector<std::string> labels;
    labels.reserve(rows.size());
    for (std::size_t i : rows) {
        for (std::size_t j = 0; j < df.cols(); ++j) {
            cells.push_back(df.at(i, j));
        }
        labels.push_back(df.row_label(i));
    }
    return make_frame(rows.size(), std::move(cells), std::move(labels), df.col_labels(), df.schema(),
                      df.grid().shape());
}

auto gather_cols(const Dataframe& df, std::span<const std::size_t> cols) -> Dataframe {
    std::vector<CellValue> cells;
    cells.reserve(df.rows() * cols.size());
    for (std::size_t i = 0; i < df.rows(); ++i) {
        for (std::size_t j : cols) {
            cells.push_back(df.at(i, j));
        }
    }
    std::vector<std::string> labels;
    std::vector<Domain> schema;
    for (std::size_t j : cols) {
        labels.push_back(df.col_label(j));
        schema.push_back(df.domain(j));
    }
    return make_frame(df.rows(), std::move(cells), df.row_labels(), std::move(labels), std::move(schema),
                      df.grid().shape());
}

auto slice_rows(const Dataframe& df, std::size_t begin, std::size_t end) -> Dataframe {
    end = std::min(end, df.rows());
    begin = std::min(begin, end);
    std::vector<std::size_t> rows(end - begin);
    std::iota(rows.begin(), rows.end(), begin);
    return gather_rows(df, rows);
}

auto concat_rows(std::span<const Dataframe> parts, const Dataframe& like) -> Dataframe {
    std::size_t rows = 0;
    for (const auto& p : parts) {
        rows += p.rows();
    }
    std::vector<CellValue> cells;
    cells.reserve(rows * like.cols());
    std::vector<std::string> labels;
    labels.reserve(rows);
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < p.rows(); ++i) {
            for (std::size_t j = 0; j < p.cols(); ++j) {
                cells.push_back(p.at(i, j));
            }
            labels.push_back(p.row_label(i));
        }
    }
    return make_frame(rows, std::move(cells), std::move(labels), like.col_labels(), like.schema(),
                      like.grid().shape());
}

auto resolve_columns(const std::vector<std::string>& labels, const std::vector<ColumnRef>& refs)
    -> std::vector<std::size_t> {
    std::vector<std::size_t> out;
    for (const auto& ref : refs) {
        if (const auto* name = std::get_if<std::string>(&ref.ref)) {
            bool any = false;
            for (std::size_t j = 0; j < labels.size(); ++j) {
                if (labels[j] == *name) {
                    out.push_back(j);
                    any = true;
                }
            }
            if (!any) {
                fail(ErrorKind::UnknownColumn, "no column labelled '" + *name + "'");
            }
        } else {
            out.push_back(ref.resolve(labels));
        }
    }
    return out;
}

auto selection(const Dataframe& df, const Predicate& predicate) -> Dataframe {
    std::vector<ColumnRef> typed;
    predicate.typed_columns(typed);
    std::vector<ColumnRef> all;
    predicate.all_columns(all);
    const auto labels = df.col_labels();
    for (const auto& c : all) {
        (void)c.resolve(labels);
    }
    std::vector<std::size_t> cols;
    for (const auto& c : typed) {
        cols.push_back(c.resolve(labels));
    }
    Dataframe induced = induce_all(df, cols);
    const auto bound = BoundPredicate::bind(predicate, row_schema(induced));
    std::vector<std::size_t> keep;
    std::vector<CellValue> row;
    for (std::size_t i = 0; i < induced.rows(); ++i) {
        row.clear();
        for (std::size_t j = 0; j < induced.cols(); ++j) {
            row.push_back(induced.at(i, j));
        }
        if (bound.eval(row)) {
            keep.push_back(i);
        }
    }
    return gather_rows(induced, keep);
}

auto select_positions(const Dataframe& df, std::span<const std::size_t> positions) -> Dataframe {
    for (std::size_t p : positions) {
        if (p >= df.rows()) {
            fail(ErrorKind::IndexOutOfBounds,
                 "row position " + std::to_string(p) + " out of range (" + std::to_string(df.rows()) + ")");
        }
    }
    return gather_rows(df, positions);
}

auto select_labels(const Dataframe& df, const std::vector<std::string>& labels) -> Dataframe {
    std::vector<std::size_t> rows;
    for (const auto& label : labels) {
        const auto& hits = df.find_rows(label);
        if (hits.empty()) {
            fail(ErrorKind::LabelNotFound, "no row labelled '" + label + "'");
        }
        rows.insert(rows.end(), hits.begin(), hits.end());
    }
    return gather_rows(df, rows);
}

auto projection(const Dataframe& df, const std::vector<ColumnRef>& columns) -> Dataframe {
    const auto cols = resolve_columns(df.col_labels(), columns);
    if (cols.size() == df.cols()) {
        std::vector<bool> seen(cols.size());
        bool perm = true;
        for (std::size_t j : cols) {
            perm = perm && !seen[j];
            seen[j] = true;
        }
        if (perm) {
            return df.with_col_permutation(cols);
        }
    }
    return gather_cols(df, cols);
}

auto align_union(const RowSchema& a, const RowSchema& b, bool strict) -> UnionAlignment {
    UnionAlignment out;
    if (a.labels == b.labels) {
        out.labels = a.labels;
        for (std::size_t j = 0; j < a.labels.size(); ++j) {
            out.schema.push_back(a.domains[j] == b.domains[j] ? a.domains[j] : Domain::Unspecified);
        }
        out.left_to_out = identity(a.labels.size());
        out.right_to_out = identity(b.labels.size());
        return out;
    }
    if (strict) {
        fail(ErrorKind::ArityMismatch, "union inputs have different column labels");
    }
    // Outer alignment: the k-th occurrence of a label on the right matches
    // the k-th occurrence on the left; unmatched right columns follow.
    out.labels = a.labels;
    out.schema = a.domains;
    out.left_to_out = identity(a.labels.size());
    std::unordered_map<std::string, std::vector<std::size_t>> left_slots;
    for (std::size_t j = 0; j < a.labels.size(); ++j) {
        left_slots[a.labels[j]].push_back(j);
    }
    std::unordered_map<std::string, std::size_t> used;
    for (std::size_t j = 0; j < b.labels.size(); ++j) {
        const auto& label = b.labels[j];
        std::size_t occurrence = used[label]++;
        auto it = left_slots.find(label);
        if (it != left_slots.end() && occurrence < it->second.size()) {
            const std::size_t slot = it->second[occurrence];
            out.right_to_out.push_back(slot);
            if (out.schema[slot] != b.domains[j]) {
                out.schema[slot] = Domain::Unspecified;
            }
        } else {
            out.right_to_out.push_back(out.labels.size());
            out.labels.push_back(label);
            out.schema.push_back(b.domains[j]);
        }
    }
    return out;
}

auto union_all(const Dataframe& a, const Dataframe& b, bool strict) -> Dataframe {
    const auto align = align_union(row_schema(a), row_schema(b), strict);
    const std::size_t n = align.labels.size();
    const std::size_t rows = a.rows() + b.rows();
    std::vector<CellValue> cells(rows * n);
    std::vector<std::string> labels;
    labels.reserve(rows);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            cells[i * n + align.left_to_out[j]] = a.at(i, j);
        }
        labels.push_back(a.row_label(i));
    }
    for (std::size_t i = 0; i < b.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            cells[(a.rows() + i) * n + align.right_to_out[j]] = b.at(i, j);
        }
        labels.push_back(b.row_label(i));
    }
    return make_frame(rows, std::move(cells), std::move(labels), align.labels, align.schema, a.grid().shape());
}

auto raw_row_key(const Dataframe& df, std::size_t row) -> std::string {
    std::string key;
    for (std::size_t j = 0; j < df.cols(); ++j) {
        append_keyed(key, df.at(row, j).to_text());
    }
    return key;
}

auto difference(const Dataframe& a, const Dataframe& b) -> Dataframe {
    if (a.cols() != b.cols()) {
        fail(ErrorKind::ArityMismatch, "difference inputs have " + std::to_string(a.cols()) + " and " +
                                           std::to_string(b.cols()) + " columns");
    }
    std::unordered_set<std::string> right;
    for (std::size_t i = 0; i < b.rows(); ++i) {
        right.insert(raw_row_key(b, i));
    }
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        if (!right.contains(raw_row_key(a, i))) {
            keep.push_back(i);
        }
    }
    return gather_rows(a, keep);
}

auto prepare_join(const Dataframe& a, const Dataframe& b, const JoinSpec& spec) -> JoinPlan {
    JoinPlan plan;
    plan.kind = spec.kind;
    if (spec.kind == JoinKind::Cross && !spec.on.empty()) {
        fail(ErrorKind::InvalidArgument, "cross join takes no join columns");
    }
    if (spec.kind != JoinKind::Cross && spec.on.empty()) {
        fail(ErrorKind::InvalidArgument, std::string(to_string(spec.kind)) + " join needs join columns");
    }
    const auto la = a.col_labels();
    const auto lb = b.col_labels();
    std::vector<std::size_t> left_cols;
    std::vector<std::size_t> right_cols;
    for (const auto& [l, r] : spec.on) {
        const std::size_t lc = ColumnRef::named(l).resolve(la);
        const std::size_t rc = ColumnRef::named(r).resolve(lb);
        plan.keys.emplace_back(lc, rc);
        left_cols.push_back(lc);
        right_cols.push_back(rc);
    }
    plan.left = induce_all(a, left_cols);
    plan.right = induce_all(b, right_cols);
    for (const auto& [lc, rc] : plan.keys) {
        if (!comparable(plan.left.domain(lc), plan.right.domain(rc))) {
            fail(ErrorKind::IncomparableDomains, "cannot join " + std::string(to_string(plan.left.domain(lc))) +
                                                     " column '" + la[lc] + "' with " +
                                                     std::string(to_string(plan.right.domain(rc))) + " column '" +
                                                     lb[rc] + "'");
        }
    }
    plan.labels = la;
    plan.schema = plan.left.schema();
    const auto right_schema = plan.right.schema();
    for (std::size_t j = 0; j < lb.size(); ++j) {
        if (std::find(right_cols.begin(), right_cols.end(), j) == right_cols.end()) {
            plan.right_kept.push_back(j);
            plan.labels.push_back(lb[j]);
            plan.schema.push_back(right_schema[j]);
        }
    }
    return plan;
}

auto join_key(const JoinPlan& plan, bool left_side, std::size_t row) -> std::optional<std::string> {
    const Dataframe& df = left_side ? plan.left : plan.right;
    std::string key;
    for (const auto& [lc, rc] : plan.keys) {
        const std::size_t c = left_side ? lc : rc;
        const CellValue v = parse(df.at(row, c), df.domain(c));
        // NaN compares unordered, so it never matches anything.
        if (v.is_null() || (v.is_float() && std::isnan(v.as_float()))) {
            return std::nullopt;
        }
        append_keyed(key, canonical_key(v));
    }
    return key;
}

auto join_pairs_nested(const JoinPlan& plan, std::size_t left_begin, std::size_t left_end)
    -> std::vector<std::pair<std::size_t, std::optional<std::size_t>>> {
    std::vector<std::pair<std::size_t, std::optional<std::size_t>>> pairs;
    auto matches = [&](std::size_t i, std::size_t r) {
        for (const auto& [lc, rc] : plan.keys) {
            const CellValue x = parse(plan.left.at(i, lc), plan.left.domain(lc));
            const CellValue y = parse(plan.right.at(r, rc), plan.right.domain(rc));
            if (x.is_null() || y.is_null() || compare_cells(x, y) != std::partial_ordering::equivalent) {
                return false;
            }
        }
        return true;
    };
    for (std::size_t i = left_begin; i < left_end; ++i) {
        bool any = false;
        for (std::size_t r = 0; r < plan.right.rows(); ++r) {
            if (matches(i, r)) {
                pairs.emplace_back(i, r);
                any = true;
            }
        }
        if (!any && plan.kind == JoinKind::Left) {
            pairs.emplace_back(i, std::nullopt);
        }
    }
    return pairs;
}

auto assemble_join(const JoinPlan& plan, std::span<const std::pair<std::size_t, std::optional<std::size_t>>> pairs)
    -> Dataframe {
    const std::size_t n = plan.labels.size();
    std::vector<CellValue> cells;
    cells.reserve(pairs.size() * n);
    std::vector<std::string> labels;
    labels.reserve(pairs.size());
    for (const auto& [i, r] : pairs) {
        for (std::size_t j = 0; j < plan.left.cols(); ++j) {
            cells.push_back(plan.left.at(i, j));
        }
        for (std::size_t j : plan.right_kept) {
            cells.push_back(r ? plan.right.at(*r, j) : CellValue::null());
        }
        labels.push_back(plan.left.row_label(i));
    }
    return make_frame(pairs.size(), std::move(cells), std::move(labels), plan.labels, plan.schema,
                      plan.left.grid().shape());
}

auto join(const Dataframe& a, const Dataframe& b, const JoinSpec& spec) -> Dataframe {
    const auto plan = prepare_join(a, b, spec);
    const auto pairs = join_pairs_nested(plan, 0, plan.left.rows());
    return assemble_join(plan, pairs);
}

auto drop_duplicates(const Dataframe& df) -> Dataframe {
    std::unordered_set<std::string> seen;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < df.rows(); ++i) {
        if (seen.insert(raw_row_key(df, i)).second) {
            keep.push_back(i);
        }
    }
    return gather_rows(df, keep);
}

auto prepare_groupby(const Dataframe& df, const GroupBySpec& spec) -> GroupByPlan {
    if (spec.keys.empty()) {
        fail(ErrorKind::InvalidArgument, "groupby needs at least one key");
    }
    GroupByPlan plan;
    const auto labels = df.col_labels();
    for (const auto& k : spec.keys) {
        plan.keys.push_back(ColumnRef::named(k).resolve(labels));
    }
    std::vector<std::size_t> rest;
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (std::find(plan.keys.begin(), plan.keys.end(), j) == plan.keys.end()) {
            rest.push_back(j);
        }
    }
    std::vector<std::size_t> typed;
    for (const auto& agg : spec.aggregates) {
        std::vector<std::size_t> cols;
        if (agg.column) {
            cols.push_back(ColumnRef::named(*agg.column).resolve(labels));
        } else {
            cols = rest;
        }
        if (agg.fn == AggFn::Collect) {
            plan.outputs.push_back({agg.fn, cols, agg.column ? *agg.column : "collect", Domain::Str});
            continue;
        }
        for (std::size_t c : cols) {
            plan.outputs.push_back({agg.fn, {c}, labels[c], Domain::Unspecified});
            if (agg.fn != AggFn::Count) {
                typed.push_back(c);
            }
        }
    }
    plan.input = induce_all(df, typed);
    for (auto& out : plan.outputs) {
        if (out.fn == AggFn::Collect) {
            continue;
        }
        const Domain d = plan.input.domain(out.columns[0]);
        switch (out.fn) {
            case AggFn::Count: out.domain = Domain::Int; break;
            case AggFn::Sum:
            case AggFn::Mean:
                if (!is_numeric(d)) {
                    fail(ErrorKind::DomainMismatch, std::string(to_string(out.fn)) + " over non-numeric column '" +
                                                        out.label + "'");
                }
                out.domain = out.fn == AggFn::Mean ? Domain::Float : d;
                break;
            default: out.domain = d; break;
        }
    }
    return plan;
}

auto group_key(const GroupByPlan& plan, std::size_t row) -> std::string {
    std::string key;
    for (std::size_t k : plan.keys) {
        append_keyed(key, plan.input.at(row, k).to_text());
    }
    return key;
}

auto group_rows(const GroupByPlan& plan) -> std::vector<std::vector<std::size_t>> {
    std::vector<std::vector<std::size_t>> groups;
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < plan.input.rows(); ++i) {
        auto [it, inserted] = index.emplace(group_key(plan, i), groups.size());
        if (inserted) {
            groups.emplace_back();
        }
        groups[it->second].push_back(i);
    }
    return groups;
}

auto aggregate(const GroupByPlan& plan, std::size_t output, std::span<const std::size_t> members) -> CellValue {
    const auto& out = plan.outputs[output];
    const Dataframe& df = plan.input;
    if (out.fn == AggFn::Collect) {
        std::vector<CellValue> cells;
        cells.reserve(members.size() * out.columns.size());
        std::vector<std::string> row_labels;
        for (std::size_t i : members) {
            for (std::size_t j : out.columns) {
                cells.push_back(df.at(i, j));
            }
            row_labels.push_back(df.row_label(i));
        }
        std::vector<std::string> labels;
        std::vector<Domain> schema;
        for (std::size_t j : out.columns) {
            labels.push_back(df.col_label(j));
            schema.push_back(df.domain(j));
        }
        auto group = make_frame(members.size(), std::move(cells), std::move(row_labels), std::move(labels),
                                std::move(schema), df.grid().shape())
                         .with_origin(std::vector<std::size_t>(members.begin(), members.end()));
        return CellValue::composite(std::make_shared<const Dataframe>(std::move(group)));
    }
    const std::size_t col = out.columns[0];
    const Domain d = df.domain(col);
    if (out.fn == AggFn::Count) {
        std::int64_t n = 0;
        for (std::size_t i : members) {
            n += is_null_token(df.at(i, col)) ? 0 : 1;
        }
        return CellValue::integer(n);
    }
    if (out.fn == AggFn::Sum || out.fn == AggFn::Mean) {
        std::int64_t isum = 0;
        double fsum = 0.0;
        std::size_t n = 0;
        for (std::size_t i : members) {
            const CellValue v = parse(df.at(i, col), d);
            if (v.is_null()) {
                continue;
            }
            ++n;
            if (out.fn == AggFn::Sum && d == Domain::Int) {
                isum = wrap_add(isum, v.as_int());
            } else {
                fsum += *numeric_value(v);
            }
        }
        if (out.fn == AggFn::Mean) {
            return n == 0 ? CellValue::null() : CellValue::real(fsum / static_cast<double>(n));
        }
        return d == Domain::Int ? CellValue::integer(isum) : CellValue::real(fsum);
    }
    std::optional<CellValue> best;
    for (std::size_t i : members) {
        CellValue v = parse(df.at(i, col), d);
        if (v.is_null()) {
            continue;
        }
        if (!best) {
            best = std::move(v);
            continue;
        }
        const auto ord = compare_cells(v, *best);
        if ((out.fn == AggFn::Min && ord < 0) || (out.fn == AggFn::Max && ord > 0)) {
            best = std::move(v);
        }
    }
    return best ? *best : CellValue::null();
}

auto assemble_groupby(const GroupByPlan& plan, const std::vector<std::vector<std::size_t>>& groups,
                      std::vector<CellValue> aggregate_cells) -> Dataframe {
    const std::size_t aggs = plan.outputs.size();
    const std::size_t n = plan.keys.size() + aggs;
    std::vector<CellValue> cells;
    cells.reserve(groups.size() * n);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (std::size_t k : plan.keys) {
            cells.push_back(plan.input.at(groups[g].front(), k));
        }
        for (std::size_t a = 0; a < aggs; ++a) {
            cells.push_back(std::move(aggregate_cells[g * aggs + a]));
        }
    }
    std::vector<std::string> labels;
    std::vector<Domain> schema;
    for (std::size_t k : plan.keys) {
        labels.push_back(plan.input.col_label(k));
        schema.push_back(plan.input.domain(k));
    }
    for (const auto& out : plan.outputs) {
        labels.push_back(out.label);
        schema.push_back(out.domain);
    }
    return make_frame(groups.size(), std::move(cells), {}, std::move(labels), std::move(schema),
                      plan.input.grid().shape());
}

auto groupby(const Dataframe& df, const GroupBySpec& spec) -> Dataframe {
    const auto plan = prepare_groupby(df, spec);
    const auto groups = group_rows(plan);
    std::vector<CellValue> cells;
    for (const auto& members : groups) {
        for (std::size_t a = 0; a < plan.outputs.size(); ++a) {
            cells.push_back(aggregate(plan, a, members));
        }
    }
    return assemble_groupby(plan, groups, std::move(cells));
}

auto SortKeys::less(std::size_t a, std::size_t b) const -> bool {
    for (std::size_t k = 0; k < columns.size(); ++k) {
        const CellValue& x = columns[k][a];
        const CellValue& y = columns[k][b];
        if (x.is_null() || y.is_null()) {
            if (x.is_null() && y.is_null()) {
                continue;
            }
            return y.is_null();
        }
        const auto ord = compare_cells(x, y);
        if (ord == 0 || ord == std::partial_ordering::unordered) {
            continue;
        }
        return ascending[k] ? ord < 0 : ord > 0;
    }
    return false;
}

auto prepare_sort(const Dataframe& df, const SortSpec& spec, Dataframe& induced) -> SortKeys {
    const auto labels = df.col_labels();
    std::vector<std::size_t> cols;
    for (const auto& key : spec) {
        cols.push_back(key.column.resolve(labels));
    }
    induced = induce_all(df, cols);
    SortKeys keys;
    for (std::size_t k = 0; k < cols.size(); ++k) {
        keys.columns.push_back(parsed_column(induced, cols[k]));
        keys.ascending.push_back(spec[k].ascending);
    }
    return keys;
}

auto sort(const Dataframe& df, const SortSpec& spec) -> Dataframe {
    Dataframe induced;
    const auto keys = prepare_sort(df, spec, induced);
    auto perm = identity(induced.rows());
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return keys.less(a, b); });
    return induced.with_row_permutation(perm);
}

auto sort_columns(const Dataframe& df, const SortSpec& spec) -> Dataframe {
    const auto row_labels = df.row_labels();
    SortKeys keys;
    for (const auto& key : spec) {
        const std::size_t r = key.column.resolve(row_labels);
        std::vector<CellValue> row = df.row(r);
        const Domain d = induce_schema(row);
        for (auto& c : row) {
            c = parse(c, d);
        }
        keys.columns.push_back(std::move(row));
        keys.ascending.push_back(key.ascending);
    }
    auto perm = identity(df.cols());
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return keys.less(a, b); });
    return df.with_col_permutation(perm).with_schema(std::vector<Domain>(df.cols(), Domain::Unspecified));
}

auto rename(const Dataframe& df, Axis axis, const std::vector<std::pair<std::string, std::string>>& mapping)
    -> Dataframe {
    auto labels = axis == Axis::Columns ? df.col_labels() : df.row_labels();
    for (auto& label : labels) {
        for (const auto& [from, to] : mapping) {
            if (label == from) {
                label = to;
                break;
            }
        }
    }
    return axis == Axis::Columns ? df.with_col_labels(std::move(labels)) : df.with_row_labels(std::move(labels));
}

auto window_targets(const Dataframe& df, const WindowParams& params) -> std::vector<std::size_t> {
    if (params.targets.empty()) {
        std::vector<std::size_t> all(df.cols());
        std::iota(all.begin(), all.end(), std::size_t{0});
        return all;
    }
    auto cols = resolve_columns(df.col_labels(), params.targets);
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    return cols;
}

auto window_column(std::span<const CellValue> values, const WindowSpec& spec, Domain domain)
    -> std::vector<CellValue> {
    const std::size_t m = values.size();
    std::vector<CellValue> out(m);
    auto at = [&](std::size_t t) -> std::size_t { return spec.reverse ? m - 1 - t : t; };
    const bool ints = domain == Domain::Int;
    switch (spec.fn) {
        case WindowFn::CumSum: {
            std::int64_t isum = 0;
            double fsum = 0.0;
            for (std::size_t t = 0; t < m; ++t) {
                const CellValue& v = values[at(t)];
                if (v.is_null()) {
                    continue;
                }
                if (ints) {
                    isum = wrap_add(isum, v.as_int());
                    out[at(t)] = CellValue::integer(isum);
                } else {
                    fsum += *numeric_value(v);
                    out[at(t)] = CellValue::real(fsum);
                }
            }
            break;
        }
        case WindowFn::CumMax: {
            std::optional<CellValue> best;
            for (std::size_t t = 0; t < m; ++t) {
                const CellValue& v = values[at(t)];
                if (v.is_null()) {
                    continue;
                }
                if (!best || compare_cells(v, *best) > 0) {
                    best = v;
                }
                out[at(t)] = *best;
            }
            break;
        }
        case WindowFn::Diff: {
            const std::int64_t p = spec.param;
            for (std::size_t t = 0; t < m; ++t) {
                const std::int64_t u = static_cast<std::int64_t>(t) - p;
                if (u < 0 || u >= static_cast<std::int64_t>(m)) {
                    continue;
                }
                const CellValue& x = values[at(t)];
                const CellValue& y = values[at(static_cast<std::size_t>(u))];
                if (x.is_null() || y.is_null()) {
                    continue;
                }
                out[at(t)] = ints ? CellValue::integer(wrap_sub(x.as_int(), y.as_int()))
                                  : CellValue::real(*numeric_value(x) - *numeric_value(y));
            }
            break;
        }
        case WindowFn::Shift: {
            const std::int64_t p = spec.param;
            for (std::size_t t = 0; t < m; ++t) {
                const std::int64_t u = static_cast<std::int64_t>(t) - p;
                if (u >= 0 && u < static_cast<std::int64_t>(m)) {
                    out[at(t)] = values[at(static_cast<std::size_t>(u))];
                }
            }
            break;
        }
        case WindowFn::RollingSum: {
            if (spec.param < 1) {
                fail(ErrorKind::InvalidArgument, "rolling_sum width must be at least 1");
            }
            const auto w = static_cast<std::size_t>(spec.param);
            for (std::size_t t = 0; t < m; ++t) {
                const std::size_t lo = t + 1 >= w ? t + 1 - w : 0;
                std::int64_t isum = 0;
                double fsum = 0.0;
                bool any = false;
                for (std::size_t u = lo; u <= t; ++u) {
                    const CellValue& v = values[at(u)];
                    if (v.is_null()) {
                        continue;
                    }
                    any = true;
                    if (ints) {
                        isum = wrap_add(isum, v.as_int());
                    } else {
                        fsum += *numeric_value(v);
                    }
                }
                if (any) {
                    out[at(t)] = ints ? CellValue::integer(isum) : CellValue::real(fsum);
                }
            }
            break;
        }
    }
    return out;
}

auto window(const Dataframe& df, const WindowParams& params, const ForEach& for_each) -> Dataframe {
    const auto targets = window_targets(df, params);
    const bool shift = params.spec.fn == WindowFn::Shift;
    if (params.spec.fn == WindowFn::RollingSum && params.spec.param < 1) {
        fail(ErrorKind::InvalidArgument, "rolling_sum width must be at least 1");
    }
    Dataframe input = shift ? df : induce_all(df, targets);
    if (!shift) {
        for (std::size_t j : targets) {
            if (!is_numeric(input.domain(j))) {
                fail(ErrorKind::DomainMismatch, std::string(to_string(params.spec.fn)) +
                                                    " over non-numeric column '" + input.col_label(j) + "'");
            }
        }
    }
    std::vector<std::vector<CellValue>> replaced(input.cols());
    auto one = [&](std::size_t t) {
        const std::size_t j = targets[t];
        replaced[j] = window_column(shift ? input.column(j) : parsed_column(input, j), params.spec, input.domain(j));
    };
    if (for_each) {
        for_each(targets.size(), one);
    } else {
        for (std::size_t t = 0; t < targets.size(); ++t) {
            one(t);
        }
    }
    std::vector<CellValue> cells;
    cells.reserve(input.rows() * input.cols());
    for (std::size_t i = 0; i < input.rows(); ++i) {
        for (std::size_t j = 0; j < input.cols(); ++j) {
            cells.push_back(replaced[j].empty() ? input.at(i, j) : std::move(replaced[j][i]));
        }
    }
    return make_frame(input.rows(), std::move(cells), input.row_labels(), input.col_labels(), input.schema(),
                      input.grid().shape());
}

auto transpose_copy(const Dataframe& df, const std::optional<std::vector<Domain>>& declared) -> Dataframe {
    const std::size_t m = df.rows();
    const std::size_t n = df.cols();
    if (declared && declared->size() != m) {
        fail(ErrorKind::ArityMismatch, "declared schema length does not match transposed arity");
    }
    std::vector<CellValue> cells;
    cells.reserve(m * n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            cells.push_back(df.at(i, j));
        }
    }
    auto schema = declared ? *declared : std::vector<Domain>(m, Domain::Unspecified);
    auto out = make_frame(n, std::move(cells), df.col_labels(), df.row_labels(), std::move(schema),
                          df.grid().shape());
    return out;
}

auto map_rows(const Dataframe& df, const PreparedMap& prepared) -> Dataframe {
    const std::size_t n = prepared.output.labels.size();
    std::vector<CellValue> cells;
    cells.reserve(df.rows() * n);
    std::vector<CellValue> row;
    for (std::size_t i = 0; i < df.rows(); ++i) {
        row.clear();
        for (std::size_t j = 0; j < df.cols(); ++j) {
            row.push_back(df.at(i, j));
        }
        const std::size_t before = cells.size();
        prepared.apply(row, cells);
        if (cells.size() - before != n) {
            fail(ErrorKind::UdfArityViolation, "map produced " + std::to_string(cells.size() - before) +
                                                   " values, expected " + std::to_string(n));
        }
    }
    return make_frame(df.rows(), std::move(cells), df.row_labels(), prepared.output.labels, prepared.output.domains,
                      df.grid().shape());
}

auto map(const Dataframe& df, const UdfSpec& udf) -> Dataframe {
    if (udf.two_pass()) {
        return run_two_pass(udf, df);
    }
    const auto typed = map_typed_columns(udf, row_schema(df));
    Dataframe induced = induce_all(df, typed);
    return map_rows(induced, prepare_map(udf, row_schema(induced)));
}

auto to_labels(const Dataframe& df, const std::string& label) -> Dataframe {
    const auto hits = df.find_cols(label);
    if (hits.empty()) {
        fail(ErrorKind::UnknownColumn, "no column labelled '" + label + "'");
    }
    if (hits.size() > 1) {
        fail(ErrorKind::AmbiguousLabel, "column label '" + label + "' is not unique");
    }
    std::vector<std::string> labels;
    labels.reserve(df.rows());
    for (std::size_t i = 0; i < df.rows(); ++i) {
        labels.push_back(df.at(i, hits[0]).to_text());
    }
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < df.cols(); ++j) {
        if (j != hits[0]) {
            keep.push_back(j);
        }
    }
    return gather_cols(df, keep).with_row_labels(std::move(labels));
}

auto from_labels(const Dataframe& df, const std::string& label) -> Dataframe {
    const std::size_t n = df.cols() + 1;
    std::vector<CellValue> cells;
    cells.reserve(df.rows() * n);
    for (std::size_t i = 0; i < df.rows(); ++i) {
        cells.push_back(CellValue::raw(df.row_label(i)));
        for (std::size_t j = 0; j < df.cols(); ++j) {
            cells.push_back(df.at(i, j));
        }
    }
    auto labels = df.col_labels();
    labels.insert(labels.begin(), label);
    auto schema = df.schema();
    schema.insert(schema.begin(), Domain::Unspecified);
    return make_frame(df.rows(), std::move(cells), {}, std::move(labels), std::move(schema), df.grid().shape());
}

auto head(const Dataframe& df, std::size_t k) -> Dataframe { return slice_rows(df, 0, k); }

auto tail(const Dataframe& df, std::size_t k) -> Dataframe {
    const std::size_t m = df.rows();
    return slice_rows(df, m > k ? m - k : 0, m);
}

auto pivot(const Dataframe& df, const PivotParams& params) -> Dataframe {
    if (params.pivot == params.key || params.pivot == params.value || params.key == params.value) {
        fail(ErrorKind::InvalidArgument, "pivot, key and value columns must be distinct");
    }
    auto grouped = groupby(df, GroupBySpec{{params.pivot}, {Aggregate{AggFn::Collect, std::nullopt}}});
    auto flat = map(grouped, UdfSpec::builtin("flatten", {CellValue::raw(params.key), CellValue::raw(params.value)}));
    return transpose_copy(to_labels(flat, params.pivot), std::nullopt);
}

auto induce(const Dataframe& df, const InduceParams& params) -> Dataframe {
    if (!params.columns) {
        return induce_all(df);
    }
    return induce_all(df, resolve_columns(df.col_labels(), *params.columns));
}

}  // namespace dfk::algebra
