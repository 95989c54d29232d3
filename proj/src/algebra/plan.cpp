#include <dfk/algebra/plan.hpp>

#include <dfk/core/error.hpp>

#include <cstdio>
#include <sstream>
#include <unordered_map>

namespace dfk::algebra {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

auto fnv(std::uint64_t h, std::string_view bytes) -> std::uint64_t {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

auto fnv_u64(std::uint64_t h, std::uint64_t v) -> std::uint64_t {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffU;
        h *= kFnvPrime;
    }
    return h;
}

auto quote(const std::string& s) -> std::string { return "\"" + s + "\""; }

auto literal(const CellValue& v) -> std::string {
    if (v.is_raw()) {
        return quote(v.text());
    }
    if (v.is_null()) {
        return "null";
    }
    return v.to_text();
}

auto list(const std::vector<std::string>& items) -> std::string {
    std::string s = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
        s += (i ? ", " : "") + items[i];
    }
    return s + "]";
}

auto refs(const std::vector<ColumnRef>& cols) -> std::string {
    std::vector<std::string> items;
    for (const auto& c : cols) {
        items.push_back(c.to_string());
    }
    return list(items);
}

auto selector(const Selector& s) -> std::string {
    if (const auto* p = std::get_if<std::size_t>(&s)) {
        return "#" + std::to_string(*p);
    }
    return quote(std::get<std::string>(s));
}

auto sort_spec(const SortSpec& spec) -> std::string {
    std::vector<std::string> items;
    for (const auto& k : spec) {
        items.push_back(k.column.to_string() + (k.ascending ? " asc" : " desc"));
    }
    return list(items);
}

struct KeyWriter {
    auto operator()(const NoParams&) const -> std::string { return ""; }
    auto operator()(const ScanParams& p) const -> std::string {
        if (p.csv) {
            return "csv " + quote(p.csv->path) + (p.csv->has_row_labels ? " row_labels" : "") +
                   (p.csv->delimiter != ',' ? std::string(" delim=") + p.csv->delimiter : "") +
                   (p.csv->fuse_induction ? " fused" : "");
        }
        char buf[32];
        std::snprintf(buf, sizeof buf, "%p", static_cast<const void*>(p.frame.get()));
        return std::string("frame@") + buf;
    }
    auto operator()(const SelectionParams& p) const -> std::string {
        switch (p.mode) {
            case SelectionParams::Mode::Predicate: return p.predicate.to_string();
            case SelectionParams::Mode::Positions: {
                std::vector<std::string> items;
                for (auto i : p.positions) {
                    items.push_back(std::to_string(i));
                }
                return "positions " + list(items);
            }
            case SelectionParams::Mode::Labels: {
                std::vector<std::string> items;
                for (const auto& l : p.labels) {
                    items.push_back(quote(l));
                }
                return "labels " + list(items);
            }
        }
        return "";
    }
    auto operator()(const ProjectionParams& p) const -> std::string { return refs(p.columns); }
    auto operator()(const UnionParams& p) const -> std::string { return p.strict ? "strict" : ""; }
    auto operator()(const JoinSpec& p) const -> std::string {
        std::string s(to_string(p.kind));
        if (!p.on.empty()) {
            std::vector<std::string> items;
            for (const auto& [l, r] : p.on) {
                items.push_back(quote(l) + "=" + quote(r));
            }
            s += " on " + list(items);
        }
        return s;
    }
    auto operator()(const GroupBySpec& p) const -> std::string {
        std::vector<std::string> keys;
        for (const auto& k : p.keys) {
            keys.push_back(quote(k));
        }
        std::vector<std::string> aggs;
        for (const auto& a : p.aggregates) {
            aggs.push_back(std::string(to_string(a.fn)) + (a.column ? "(" + quote(*a.column) + ")" : ""));
        }
        return "keys=" + list(keys) + " aggs=" + list(aggs);
    }
    auto operator()(const SortSpec& p) const -> std::string { return sort_spec(p); }
    auto operator()(const RenameParams& p) const -> std::string {
        std::vector<std::string> items;
        for (const auto& [from, to] : p.mapping) {
            items.push_back(quote(from) + "->" + quote(to));
        }
        return std::string(p.axis == Axis::Columns ? "columns " : "rows ") + list(items);
    }
    auto operator()(const WindowParams& p) const -> std::string {
        std::string s(to_string(p.spec.fn));
        s += "(" + std::to_string(p.spec.param) + ")";
        if (p.spec.reverse) {
            s += " reverse";
        }
        if (!p.targets.empty()) {
            s += " on " + refs(p.targets);
        }
        return s;
    }
    auto operator()(const TransposeParams& p) const -> std::string {
        if (!p.declared) {
            return "";
        }
        std::vector<std::string> items;
        for (auto d : *p.declared) {
            items.emplace_back(to_string(d));
        }
        return "schema=" + list(items);
    }
    auto operator()(const UdfSpec& p) const -> std::string {
        std::string s = p.to_string();
        if (p.kind == UdfSpec::Kind::HostClosure) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%p", static_cast<const void*>(p.host.get()));
            s += std::string("@") + buf;
        }
        if (p.declared_output) {
            std::vector<std::string> items;
            for (std::size_t i = 0; i < p.declared_output->labels.size(); ++i) {
                items.push_back(quote(p.declared_output->labels[i]) + ":" +
                                std::string(to_string(p.declared_output->schema[i])));
            }
            s += " -> " + list(items);
        }
        return s;
    }
    auto operator()(const LabelParams& p) const -> std::string { return quote(p.label); }
    auto operator()(const CountParams& p) const -> std::string { return std::to_string(p.k); }
    auto operator()(const PivotParams& p) const -> std::string {
        return "pivot=" + quote(p.pivot) + " key=" + quote(p.key) + " value=" + quote(p.value);
    }
    auto operator()(const InduceParams& p) const -> std::string {
        std::string s = p.columns ? refs(*p.columns) : "all";
        return s + (p.explicit_request ? "" : " implicit");
    }
    auto operator()(const PointSetParams& p) const -> std::string {
        return selector(p.row) + ", " + selector(p.col) + " := " + literal(p.value);
    }
};

auto finish(PlanNode node) -> PlanRef {
    node.param_key = std::visit(KeyWriter{}, node.params);
    std::uint64_t h = fnv(kFnvOffset, to_string(node.kind));
    h = fnv(h, "|");
    h = fnv(h, node.param_key);
    for (const auto& in : node.inputs) {
        h = fnv_u64(h, in->hash);
    }
    node.hash = h;
    return std::make_shared<const PlanNode>(std::move(node));
}

auto single(PlanRef in) -> std::vector<PlanRef> {
    if (!in) {
        fail(ErrorKind::InvalidArgument, "plan input missing");
    }
    return {std::move(in)};
}

}  // namespace

auto make_node(OpKind kind, std::vector<PlanRef> inputs, PlanParams params) -> PlanRef {
    PlanNode node{};
    node.kind = kind;
    node.inputs = std::move(inputs);
    node.params = std::move(params);
    return finish(std::move(node));
}

auto with_inputs(const PlanRef& node, std::vector<PlanRef> inputs) -> PlanRef {
    PlanNode copy = *node;
    copy.inputs = std::move(inputs);
    return finish(std::move(copy));
}

auto fenced(const PlanRef& node, std::string binding) -> PlanRef {
    PlanNode copy = *node;
    copy.fence = true;
    copy.binding = std::move(binding);
    return std::make_shared<const PlanNode>(std::move(copy));
}

auto structurally_equal(const PlanRef& a, const PlanRef& b) -> bool {
    if (a == b) {
        return true;
    }
    if (a->hash != b->hash || a->kind != b->kind || a->param_key != b->param_key ||
        a->inputs.size() != b->inputs.size()) {
        return false;
    }
    if (a->kind == OpKind::Scan) {
        const auto& pa = a->as<ScanParams>();
        const auto& pb = b->as<ScanParams>();
        if (pa.frame != pb.frame) {
            return false;
        }
    }
    for (std::size_t i = 0; i < a->inputs.size(); ++i) {
        if (!structurally_equal(a->inputs[i], b->inputs[i])) {
            return false;
        }
    }
    return true;
}

namespace plan {

auto scan(Dataframe frame, std::string name) -> PlanRef {
    return make_node(OpKind::Scan, {}, ScanParams{std::make_shared<const Dataframe>(std::move(frame)), std::nullopt,
                                                  std::move(name)});
}

auto scan_csv(CsvSource source) -> PlanRef {
    std::string name = source.path;
    return make_node(OpKind::Scan, {}, ScanParams{nullptr, std::move(source), std::move(name)});
}

auto select(PlanRef in, Predicate predicate) -> PlanRef {
    SelectionParams p;
    p.predicate = std::move(predicate);
    return make_node(OpKind::Selection, single(std::move(in)), std::move(p));
}

auto select_positions(PlanRef in, std::vector<std::size_t> positions) -> PlanRef {
    SelectionParams p;
    p.mode = SelectionParams::Mode::Positions;
    p.positions = std::move(positions);
    return make_node(OpKind::Selection, single(std::move(in)), std::move(p));
}

auto select_labels(PlanRef in, std::vector<std::string> labels) -> PlanRef {
    SelectionParams p;
    p.mode = SelectionParams::Mode::Labels;
    p.labels = std::move(labels);
    return make_node(OpKind::Selection, single(std::move(in)), std::move(p));
}

auto project(PlanRef in, std::vector<ColumnRef> columns) -> PlanRef {
    return make_node(OpKind::Projection, single(std::move(in)), ProjectionParams{std::move(columns)});
}

auto project(PlanRef in, const std::vector<std::string>& labels) -> PlanRef {
    std::vector<ColumnRef> cols;
    for (const auto& l : labels) {
        cols.push_back(ColumnRef::named(l));
    }
    return project(std::move(in), std::move(cols));
}

auto union_of(PlanRef a, PlanRef b, bool strict) -> PlanRef {
    return make_node(OpKind::Union, {std::move(a), std::move(b)}, UnionParams{strict});
}

auto difference(PlanRef a, PlanRef b) -> PlanRef {
    return make_node(OpKind::Difference, {std::move(a), std::move(b)}, NoParams{});
}

auto join(PlanRef a, PlanRef b, JoinSpec spec) -> PlanRef {
    return make_node(OpKind::Join, {std::move(a), std::move(b)}, std::move(spec));
}

auto drop_duplicates(PlanRef in) -> PlanRef {
    return make_node(OpKind::DropDuplicates, single(std::move(in)), NoParams{});
}

auto groupby(PlanRef in, GroupBySpec spec) -> PlanRef {
    return make_node(OpKind::GroupBy, single(std::move(in)), std::move(spec));
}

auto sort(PlanRef in, SortSpec spec) -> PlanRef {
    return make_node(OpKind::Sort, single(std::move(in)), std::move(spec));
}

auto sort_columns(PlanRef in, SortSpec spec) -> PlanRef {
    return make_node(OpKind::SortColumns, single(std::move(in)), std::move(spec));
}

auto rename(PlanRef in, std::vector<std::pair<std::string, std::string>> mapping, Axis axis) -> PlanRef {
    return make_node(OpKind::Rename, single(std::move(in)), RenameParams{axis, std::move(mapping)});
}

auto window(PlanRef in, WindowSpec spec, std::vector<ColumnRef> targets) -> PlanRef {
    return make_node(OpKind::Window, single(std::move(in)), WindowParams{spec, std::move(targets)});
}

auto transpose(PlanRef in, std::optional<std::vector<Domain>> declared) -> PlanRef {
    return make_node(OpKind::Transpose, single(std::move(in)), TransposeParams{std::move(declared)});
}

auto map(PlanRef in, UdfSpec udf) -> PlanRef {
    return make_node(OpKind::Map, single(std::move(in)), std::move(udf));
}

auto to_labels(PlanRef in, std::string label) -> PlanRef {
    return make_node(OpKind::ToLabels, single(std::move(in)), LabelParams{std::move(label)});
}

auto from_labels(PlanRef in, std::string label) -> PlanRef {
    return make_node(OpKind::FromLabels, single(std::move(in)), LabelParams{std::move(label)});
}

auto head(PlanRef in, std::size_t k) -> PlanRef {
    return make_node(OpKind::Head, single(std::move(in)), CountParams{k});
}

auto tail(PlanRef in, std::size_t k) -> PlanRef {
    return make_node(OpKind::Tail, single(std::move(in)), CountParams{k});
}

auto pivot(PlanRef in, std::string pivot, std::string key, std::string value) -> PlanRef {
    return make_node(OpKind::Pivot, single(std::move(in)),
                     PivotParams{std::move(pivot), std::move(key), std::move(value)});
}

auto induce(PlanRef in, std::optional<std::vector<ColumnRef>> columns, bool explicit_request) -> PlanRef {
    return make_node(OpKind::Induce, single(std::move(in)), InduceParams{std::move(columns), explicit_request});
}

auto point_set(PlanRef in, Selector row, Selector col, CellValue value) -> PlanRef {
    return make_node(OpKind::PointSet, single(std::move(in)),
                     PointSetParams{std::move(row), std::move(col), std::move(value)});
}

}  // namespace plan

auto expand_pivot(const PlanRef& pivot_node) -> PlanRef {
    const auto& p = pivot_node->as<PivotParams>();
    if (p.pivot == p.key || p.pivot == p.value || p.key == p.value) {
        fail(ErrorKind::InvalidArgument, "pivot, key and value columns must be distinct");
    }
    GroupBySpec g{{p.pivot}, {Aggregate{AggFn::Collect, std::nullopt}}};
    auto grouped = plan::groupby(pivot_node->inputs[0], std::move(g));
    auto flat = plan::map(std::move(grouped), UdfSpec::builtin("flatten", {CellValue::raw(p.key), CellValue::raw(p.value)}));
    return plan::transpose(plan::to_labels(std::move(flat), p.pivot));
}

auto preserves_parent_order(OpKind kind) -> bool {
    switch (kind) {
        case OpKind::GroupBy:
        case OpKind::Sort:
        case OpKind::Pivot:
            return false;
        default:
            return true;
    }
}

auto static_schema(OpKind kind) -> bool {
    switch (kind) {
        case OpKind::Transpose:
        case OpKind::Map:
        case OpKind::ToLabels:
        case OpKind::FromLabels:
        case OpKind::Pivot:
        case OpKind::SortColumns:
            return false;
        default:
            return true;
    }
}

auto describe(const PlanNode& node) -> std::string {
    std::string s(to_string(node.kind));
    std::string key = node.param_key;
    if (node.kind == OpKind::Scan) {
        const auto& p = node.as<ScanParams>();
        key = p.csv ? "csv " + quote(p.csv->path) + (p.csv->has_row_labels ? " row_labels" : "") +
                          (p.csv->fuse_induction ? " fused" : "")
                    : p.name;
    }
    if (!key.empty()) {
        s += " " + key;
    }
    return s;
}

auto to_string(const PlanRef& plan) -> std::string {
    std::unordered_map<const PlanNode*, std::size_t> refs;
    auto count = [&](auto&& self, const PlanRef& node) -> void {
        if (refs[node.get()]++ > 0 || (node->fence && !node->binding.empty())) {
            return;
        }
        for (const auto& in : node->inputs) {
            self(self, in);
        }
    };
    count(count, plan);

    std::ostringstream out;
    std::unordered_map<const PlanNode*, std::size_t> ids;
    auto walk = [&](auto&& self, const PlanRef& node, std::size_t depth) -> void {
        out << std::string(depth * 2, ' ');
        if (node->fence && !node->binding.empty()) {
            out << "$" << node->binding << "\n";
            return;
        }
        if (auto it = ids.find(node.get()); it != ids.end()) {
            out << "^" << it->second << "\n";
            return;
        }
        out << describe(*node);
        if (refs[node.get()] > 1) {
            const std::size_t id = ids.size() + 1;
            ids.emplace(node.get(), id);
            out << "  ^" << id;
        }
        out << "\n";
        for (const auto& in : node->inputs) {
            self(self, in, depth + 1);
        }
    };
    walk(walk, plan, 0);
    return out.str();
}

}  // namespace dfk::algebra
