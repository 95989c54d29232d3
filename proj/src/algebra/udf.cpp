#include <dfk/algebra/udf.hpp>

#include <dfk/core/counters.hpp>
#include <dfk/core/error.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <limits>
#include <unordered_map>

namespace dfk::algebra {

namespace {

constexpr std::array<std::string_view, 9> kBuiltins{"identity", "fillna",  "isnull",  "str_upper", "replace",
                                                    "arith",    "cast",    "one_hot", "flatten"};

auto param_text(const UdfSpec& udf, std::size_t i, std::string_view what) -> std::string {
    if (i >= udf.params.size() || udf.params[i].is_null()) {
        fail(ErrorKind::InvalidArgument, udf.name + ": missing " + std::string(what));
    }
    return udf.params[i].to_text();
}

void expect_params(const UdfSpec& udf, std::size_t lo, std::size_t hi) {
    if (udf.params.size() < lo || udf.params.size() > hi) {
        fail(ErrorKind::InvalidArgument, udf.name + ": wrong number of parameters (" +
                                             std::to_string(udf.params.size()) + ")");
    }
}

auto resolve(const RowSchema& s, const std::string& label) -> std::size_t {
    return ColumnRef::named(label).resolve(s.labels);
}

/// Columns a per-column builtin touches: the named one, or all of them.
auto target_columns(const UdfSpec& udf, std::size_t param_index, const RowSchema& s) -> std::vector<bool> {
    std::vector<bool> hit(s.labels.size(), udf.params.size() <= param_index);
    if (udf.params.size() > param_index) {
        hit[resolve(s, param_text(udf, param_index, "column"))] = true;
    }
    return hit;
}

auto upper(std::string s) -> std::string {
    for (char& c : s) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return s;
}

struct ArithPlan {
    std::size_t lhs = 0;
    std::optional<std::size_t> rhs_col;
    CellValue rhs_literal;
    char op = '+';
};

auto wrap_add(std::int64_t a, std::int64_t b) -> std::int64_t {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
auto wrap_sub(std::int64_t a, std::int64_t b) -> std::int64_t {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
auto wrap_mul(std::int64_t a, std::int64_t b) -> std::int64_t {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

auto arith(const CellValue& a, const CellValue& b, char op) -> CellValue {
    if (a.is_null() || b.is_null()) {
        return CellValue::null();
    }
    if (a.is_int() && b.is_int() && op != '/') {
        switch (op) {
            case '+': return CellValue::integer(wrap_add(a.as_int(), b.as_int()));
            case '-': return CellValue::integer(wrap_sub(a.as_int(), b.as_int()));
            default: return CellValue::integer(wrap_mul(a.as_int(), b.as_int()));
        }
    }
    const double x = *numeric_value(a);
    const double y = *numeric_value(b);
    switch (op) {
        case '+': return CellValue::real(x + y);
        case '-': return CellValue::real(x - y);
        case '*': return CellValue::real(x * y);
        default: return y == 0.0 ? CellValue::null() : CellValue::real(x / y);
    }
}

auto domain_param(const UdfSpec& udf, std::size_t i) -> Domain {
    auto text = param_text(udf, i, "domain");
    auto d = domain_from_string(text);
    if (!d || *d == Domain::Unspecified) {
        fail(ErrorKind::InvalidArgument, udf.name + ": unknown domain '" + text + "'");
    }
    return *d;
}

auto prepare_builtin(const UdfSpec& udf, const RowSchema& in) -> PreparedMap {
    const std::size_t n = in.labels.size();
    PreparedMap out;
    out.output = in;

    if (udf.name == "identity") {
        expect_params(udf, 0, 0);
        out.apply = [](std::span<const CellValue> row, std::vector<CellValue>& dst) {
            dst.insert(dst.end(), row.begin(), row.end());
        };
        return out;
    }
    if (udf.name == "fillna") {
        expect_params(udf, 1, 2);
        const CellValue fill = udf.params[0];
        auto hit = target_columns(udf, 1, in);
        for (std::size_t j = 0; j < n; ++j) {
            if (hit[j] && in.domains[j] != Domain::Unspecified && !try_parse(fill, in.domains[j])) {
                out.output.domains[j] = Domain::Unspecified;
            }
        }
        out.apply = [hit, fill](std::span<const CellValue> row, std::vector<CellValue>& dst) {
            for (std::size_t j = 0; j < row.size(); ++j) {
                dst.push_back(hit[j] && is_null_token(row[j]) ? fill : row[j]);
            }
        };
        return out;
    }
    if (udf.name == "isnull") {
        expect_params(udf, 0, 1);
        auto hit = target_columns(udf, 0, in);
        for (std::size_t j = 0; j < n; ++j) {
            if (hit[j]) {
                out.output.domains[j] = Domain::Bool;
            }
        }
        out.apply = [hit](std::span<const CellValue> row, std::vector<CellValue>& dst) {
            for (std::size_t j = 0; j < row.size(); ++j) {
                dst.push_back(hit[j] ? CellValue::boolean(is_null_token(row[j])) : row[j]);
            }
        };
        return out;
    }
    if (udf.name == "str_upper") {
        expect_params(udf, 0, 1);
        auto hit = target_columns(udf, 0, in);
        for (std::size_t j = 0; j < n; ++j) {
            if (hit[j] && in.domains[j] != Domain::Str && in.domains[j] != Domain::Category) {
                out.output.domains[j] = Domain::Unspecified;
            }
        }
        out.apply = [hit](std::span<const CellValue> row, std::vector<CellValue>& dst) {
            for (std::size_t j = 0; j < row.size(); ++j) {
                if (hit[j] && !row[j].is_null() && !row[j].is_composite()) {
                    dst.push_back(CellValue::raw(upper(row[j].to_text())));
                } else {
                    dst.push_back(row[j]);
                }
            }
        };
        return out;
    }
    if (udf.name == "replace") {
        if (udf.params.size() < 3 || udf.params.size() % 2 == 0) {
            fail(ErrorKind::InvalidArgument, "replace: expects a column then from/to pairs");
        }
        const std::size_t col = resolve(in, param_text(udf, 0, "column"));
        std::vector<std::pair<std::string, CellValue>> pairs;
        for (std::size_t i = 1; i + 1 < udf.params.size(); i += 2) {
            pairs.emplace_back(udf.params[i].to_text(), udf.params[i + 1]);
        }
        out.output.domains[col] = Domain::Unspecified;
        out.apply = [col, pairs](std::span<const CellValue> row, std::vector<CellValue>& dst) {
            for (std::size_t j = 0; j < row.size(); ++j) {
                if (j == col && !row[j].is_composite()) {
                    const std::string text = row[j].to_text();
                    auto it = std::find_if(pairs.begin(), pairs.end(), [&](const auto& p) { return p.first == text; });
                    dst.push_back(it == pairs.end() ? row[j] : it->second);
                } else {
                    dst.push_back(row[j]);
                }
            }
        };
        return out;
    }
    if (udf.name == "arith") {
        expect_params(udf, 4, 4);
        const std::string out_label = param_text(udf, 0, "output label");
        ArithPlan plan;
        plan.lhs = resolve(in, param_text(udf, 1, "left operand"));
        const std::string op = param_text(udf, 2, "operator");
        if (op.size() != 1 || std::string_view("+-*/").find(op[0]) == std::string_view::npos) {
            fail(ErrorKind::InvalidArgument, "arith: unknown operator '" + op + "'");
        }
        plan.op = op[0];
        const CellValue& rhs = udf.params[3];
        Domain rhs_domain = Domain::Unspecified;
        if (rhs.is_raw()) {
            plan.rhs_col = resolve(in, rhs.text());
            rhs_domain = in.domains[*plan.rhs_col];
        } else if (rhs.is_int() || rhs.is_float()) {
            plan.rhs_literal = rhs;
            rhs_domain = rhs.is_int() ? Domain::Int : Domain::Float;
        } else {
            fail(ErrorKind::InvalidArgument, "arith: right operand must be a column or a number");
        }
        const Domain lhs_domain = in.domains[plan.lhs];
        if (!is_numeric(lhs_domain) || !is_numeric(rhs_domain)) {
            fail(ErrorKind::DomainMismatch, "arith: operands must be numeric");
        }
        const Domain result =
            lhs_domain == Domain::Int && rhs_domain == Domain::Int && plan.op != '/' ? Domain::Int : Domain::Float;
        std::optional<std::size_t> replace_at;
        for (std::size_t j = 0; j < n; ++j) {
            if (in.labels[j] == out_label) {
                replace_at = j;
                break;
            }
        }
        if (replace_at) {
            out.output.domains[*replace_at] = result;
        } else {
            out.output.labels.push_back(out_label);
            out.output.domains.push_back(result);
        }
        const Domain ld = lhs_domain;
        out.apply = [plan, ld, rhs_domain, replace_at, result](std::span<const CellValue> row,
                                                               std::vector<CellValue>& dst) {
            const CellValue a = parse(row[plan.lhs], ld);
            const CellValue b = plan.rhs_col ? parse(row[*plan.rhs_col], rhs_domain) : plan.rhs_literal;
            CellValue v = arith(a, b, plan.op);
            if (result == Domain::Float && v.is_int()) {
                v = CellValue::real(static_cast<double>(v.as_int()));
            }
            for (std::size_t j = 0; j < row.size(); ++j) {
                dst.push_back(replace_at && *replace_at == j ? v : row[j]);
            }
            if (!replace_at) {
                dst.push_back(std::move(v));
            }
        };
        return out;
    }
    if (udf.name == "cast") {
        expect_params(udf, 2, 2);
        const std::size_t col = resolve(in, param_text(udf, 0, "column"));
        const Domain d = domain_param(udf, 1);
        out.output.domains[col] = d;
        out.apply = [col, d](std::span<const CellValue> row, std::vector<CellValue>& dst) {
            for (std::size_t j = 0; j < row.size(); ++j) {
                dst.push_back(j == col ? parse(row[j], d) : row[j]);
            }
        };
        return out;
    }
    fail(ErrorKind::InvalidArgument, "unknown builtin '" + udf.name + "'");
}

auto prepare_closure(const UdfSpec& udf, const RowSchema& in) -> PreparedMap {
    PreparedMap out;
    if (udf.declared_output) {
        out.output = RowSchema{udf.declared_output->labels, udf.declared_output->schema};
    } else {
        out.output = RowSchema{in.labels, std::vector<Domain>(in.labels.size(), Domain::Unspecified)};
    }
    const std::size_t arity = out.output.labels.size();
    auto fn = udf.host;
    auto name = udf.name;
    out.apply = [fn, name, arity](std::span<const CellValue> row, std::vector<CellValue>& dst) {
        std::vector<CellValue> result;
        try {
            result = (*fn)(row);
        } catch (const std::exception& e) {
            fail(ErrorKind::UdfFailure, name + ": " + e.what());
        } catch (...) {
            fail(ErrorKind::UdfFailure, name + ": unknown exception");
        }
        if (result.size() != arity) {
            fail(ErrorKind::UdfArityViolation, name + " returned " + std::to_string(result.size()) +
                                                   " values, expected " + std::to_string(arity));
        }
        for (auto& c : result) {
            dst.push_back(std::move(c));
        }
    };
    return out;
}

auto frame_from(std::size_t rows, std::vector<CellValue> cells, const Dataframe& like,
                std::vector<std::string> labels, std::vector<Domain> schema) -> Dataframe {
    const std::size_t cols = labels.size();
    counters().cells_copied.fetch_add(cells.size(), std::memory_order_relaxed);
    auto grid = PartitionGrid::from_row_major(rows, cols, std::move(cells), like.grid().shape());
    return Dataframe(std::move(grid), like.row_labels(), std::move(labels), std::move(schema));
}

auto one_hot(const UdfSpec& udf, const Dataframe& df) -> Dataframe {
    expect_params(udf, 1, 1);
    const auto labels = df.col_labels();
    const std::size_t col = ColumnRef::named(param_text(udf, 0, "column")).resolve(labels);
    std::vector<std::string> values;
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < df.rows(); ++i) {
        const CellValue& c = df.at(i, col);
        if (is_null_token(c)) {
            continue;
        }
        auto text = c.to_text();
        if (index.emplace(text, values.size()).second) {
            values.push_back(std::move(text));
        }
    }
    std::vector<std::string> out_labels;
    std::vector<Domain> out_schema;
    const auto schema = df.schema();
    for (std::size_t j = 0; j < df.cols(); ++j) {
        if (j == col) {
            out_labels.insert(out_labels.end(), values.begin(), values.end());
            out_schema.insert(out_schema.end(), values.size(), Domain::Bool);
        } else {
            out_labels.push_back(labels[j]);
            out_schema.push_back(schema[j]);
        }
    }
    std::vector<CellValue> cells;
    cells.reserve(df.rows() * out_labels.size());
    for (std::size_t i = 0; i < df.rows(); ++i) {
        for (std::size_t j = 0; j < df.cols(); ++j) {
            if (j != col) {
                cells.push_back(df.at(i, j));
                continue;
            }
            const CellValue& c = df.at(i, col);
            const std::size_t hot = is_null_token(c) ? values.size() : index.at(c.to_text());
            for (std::size_t v = 0; v < values.size(); ++v) {
                cells.push_back(CellValue::boolean(v == hot));
            }
        }
    }
    return frame_from(df.rows(), std::move(cells), df, std::move(out_labels), std::move(out_schema));
}

auto flatten(const UdfSpec& udf, const Dataframe& df) -> Dataframe {
    expect_params(udf, 2, 3);
    const std::string key_label = param_text(udf, 0, "key column");
    const std::string value_label = param_text(udf, 1, "value column");
    const auto labels = df.col_labels();
    std::size_t comp = 0;
    if (udf.params.size() == 3) {
        comp = ColumnRef::named(param_text(udf, 2, "composite column")).resolve(labels);
    } else {
        auto it = std::find(labels.begin(), labels.end(), "collect");
        if (it == labels.end()) {
            fail(ErrorKind::UnknownColumn, "flatten: no 'collect' column");
        }
        comp = static_cast<std::size_t>(it - labels.begin());
    }

    // Pass 1: distinct keys. With origin positions every key is placed by
    // its earliest source row, otherwise by scan order.
    std::vector<std::string> keys;
    std::vector<std::size_t> key_rank;
    std::unordered_map<std::string, std::size_t> slot_of;
    std::vector<std::pair<std::size_t, std::size_t>> key_value_cols(df.rows(), {0, 0});
    std::optional<Domain> value_domain;
    bool domain_agrees = true;
    std::size_t scan_rank = 0;
    for (std::size_t i = 0; i < df.rows(); ++i) {
        const CellValue& cell = df.at(i, comp);
        if (is_null_token(cell)) {
            continue;
        }
        if (!cell.is_composite()) {
            fail(ErrorKind::DomainMismatch, "flatten: column does not hold collected groups");
        }
        const Dataframe& group = *cell.as_composite();
        const auto glabels = group.col_labels();
        const std::size_t kc = ColumnRef::named(key_label).resolve(glabels);
        const std::size_t vc = ColumnRef::named(value_label).resolve(glabels);
        key_value_cols[i] = {kc, vc};
        const Domain d = group.domain(vc);
        if (!value_domain) {
            value_domain = d;
        } else if (*value_domain != d) {
            domain_agrees = false;
        }
        const auto* origin = group.origin();
        for (std::size_t r = 0; r < group.rows(); ++r) {
            const std::size_t rank = origin ? (*origin)[r] : std::numeric_limits<std::size_t>::max() / 2 + scan_rank;
            ++scan_rank;
            auto text = group.at(r, kc).to_text();
            auto [it, inserted] = slot_of.emplace(text, keys.size());
            if (inserted) {
                keys.push_back(std::move(text));
                key_rank.push_back(rank);
            } else {
                key_rank[it->second] = std::min(key_rank[it->second], rank);
            }
        }
    }
    std::vector<std::size_t> order(keys.size());
    for (std::size_t s = 0; s < order.size(); ++s) {
        order[s] = s;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key_rank[a] < key_rank[b]; });
    std::vector<std::size_t> column_of(keys.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        column_of[order[pos]] = pos;
    }

    const Domain out_domain = value_domain && domain_agrees ? *value_domain : Domain::Unspecified;
    std::vector<std::string> out_labels;
    std::vector<Domain> out_schema;
    const auto schema = df.schema();
    for (std::size_t j = 0; j < df.cols(); ++j) {
        if (j != comp) {
            out_labels.push_back(labels[j]);
            out_schema.push_back(schema[j]);
        }
    }
    for (std::size_t pos : order) {
        out_labels.push_back(keys[pos]);
        out_schema.push_back(out_domain);
    }

    // Pass 2: one output row per group, first matching key wins.
    std::vector<CellValue> cells;
    cells.reserve(df.rows() * out_labels.size());
    std::vector<CellValue> wide(keys.size());
    std::vector<bool> filled(keys.size());
    for (std::size_t i = 0; i < df.rows(); ++i) {
        for (std::size_t j = 0; j < df.cols(); ++j) {
            if (j != comp) {
                cells.push_back(df.at(i, j));
            }
        }
        std::fill(wide.begin(), wide.end(), CellValue::null());
        std::fill(filled.begin(), filled.end(), false);
        const CellValue& cell = df.at(i, comp);
        if (cell.is_composite()) {
            const Dataframe& group = *cell.as_composite();
            auto [kc, vc] = key_value_cols[i];
            for (std::size_t r = 0; r < group.rows(); ++r) {
                const std::size_t col = column_of[slot_of.at(group.at(r, kc).to_text())];
                if (!filled[col]) {
                    filled[col] = true;
                    wide[col] = group.at(r, vc);
                }
            }
        }
        cells.insert(cells.end(), wide.begin(), wide.end());
    }
    return frame_from(df.rows(), std::move(cells), df, std::move(out_labels), std::move(out_schema));
}

}  // namespace

auto UdfSpec::builtin(std::string name, std::vector<CellValue> params) -> UdfSpec {
    UdfSpec u;
    u.name = std::move(name);
    u.params = std::move(params);
    return u;
}

auto UdfSpec::closure(std::string name, HostFn fn, std::optional<DeclaredOutput> declared) -> UdfSpec {
    UdfSpec u;
    u.name = std::move(name);
    u.kind = Kind::HostClosure;
    u.host = std::make_shared<const HostFn>(std::move(fn));
    u.declared_output = std::move(declared);
    return u;
}

auto UdfSpec::two_pass() const -> bool {
    return kind == Kind::Builtin && (name == "one_hot" || name == "flatten");
}

auto UdfSpec::to_string() const -> std::string {
    std::string s = name + "(";
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (i > 0) {
            s += ", ";
        }
        s += params[i].is_raw() ? "\"" + params[i].text() + "\"" : params[i].to_text();
    }
    s += ")";
    if (kind == Kind::HostClosure) {
        s += " [host]";
    }
    return s;
}

auto is_builtin_udf(std::string_view name) -> bool {
    return std::find(kBuiltins.begin(), kBuiltins.end(), name) != kBuiltins.end();
}

auto map_typed_columns(const UdfSpec& udf, const RowSchema& input) -> std::vector<std::size_t> {
    if (udf.kind != UdfSpec::Kind::Builtin || udf.name != "arith" || udf.params.size() != 4) {
        return {};
    }
    std::vector<std::size_t> cols{resolve(input, param_text(udf, 1, "left operand"))};
    if (udf.params[3].is_raw()) {
        cols.push_back(resolve(input, udf.params[3].text()));
    }
    return cols;
}

auto prepare_map(const UdfSpec& udf, const RowSchema& input) -> PreparedMap {
    PreparedMap prepared =
        udf.kind == UdfSpec::Kind::HostClosure ? prepare_closure(udf, input) : prepare_builtin(udf, input);
    if (udf.kind == UdfSpec::Kind::Builtin && udf.declared_output) {
        if (udf.declared_output->labels.size() != prepared.output.labels.size()) {
            fail(ErrorKind::UdfArityViolation, udf.name + ": declared output arity differs from the builtin's");
        }
        prepared.output = RowSchema{udf.declared_output->labels, udf.declared_output->schema};
    }
    if (prepared.output.domains.size() != prepared.output.labels.size()) {
        fail(ErrorKind::InvalidArgument, udf.name + ": declared schema and labels differ in length");
    }
    return prepared;
}

auto run_two_pass(const UdfSpec& udf, const Dataframe& df) -> Dataframe {
    Dataframe out = udf.name == "one_hot" ? one_hot(udf, df) : flatten(udf, df);
    if (udf.declared_output) {
        if (udf.declared_output->labels.size() != out.cols()) {
            fail(ErrorKind::UdfArityViolation, udf.name + ": produced " + std::to_string(out.cols()) +
                                                   " columns, declared " +
                                                   std::to_string(udf.declared_output->labels.size()));
        }
        out = out.with_col_labels(udf.declared_output->labels).with_schema(udf.declared_output->schema);
    }
    return out;
}

}  // namespace dfk::algebra
