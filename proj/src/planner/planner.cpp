#include <dfk/planner/planner.hpp>

#include <dfk/core/schema.hpp>

#include <algorithm>
#include <functional>
#include <unordered_set>

namespace dfk::planner {

using namespace algebra;

namespace {

constexpr std::size_t kMaxIterations = 32;
constexpr std::size_t kMaxLocalSteps = 16;

auto open(const PlanRef& n) -> bool { return !n->fence; }

/// Bottom-up rebuild. Fenced subplans below the root are returned as is;
/// `f` rewrites a node whose inputs have already been rebuilt.
auto transform(const PlanRef& root, const std::function<PlanRef(const PlanRef&)>& f) -> PlanRef {
    std::unordered_map<const PlanNode*, PlanRef> memo;
    std::function<PlanRef(const PlanRef&)> go = [&](const PlanRef& n) -> PlanRef {
        if (n->fence && n != root) {
            return n;
        }
        if (auto it = memo.find(n.get()); it != memo.end()) {
            return it->second;
        }
        std::vector<PlanRef> inputs;
        bool changed = false;
        for (const auto& c : n->inputs) {
            inputs.push_back(go(c));
            changed = changed || inputs.back() != c;
        }
        PlanRef cur = changed ? with_inputs(n, std::move(inputs)) : n;
        cur = f(cur);
        memo.emplace(n.get(), cur);
        return cur;
    };
    auto out = go(root);
    if (root->fence && (!out->fence || out->binding != root->binding)) {
        out = fenced(out, root->binding);
    }
    return out;
}

auto canonical(const Predicate& p) -> Predicate {
    switch (p.kind()) {
        case Predicate::Kind::And:
        case Predicate::Kind::Or: {
            auto a = canonical(p.children()[0]);
            auto b = canonical(p.children()[1]);
            if (b.to_string() < a.to_string()) {
                std::swap(a, b);
            }
            return p.kind() == Predicate::Kind::And ? Predicate::both(std::move(a), std::move(b))
                                                    : Predicate::either(std::move(a), std::move(b));
        }
        case Predicate::Kind::Not: return Predicate::negate(canonical(p.children()[0]));
        default: return p;
    }
}

// Flags for schema-induction elision; see elide_induction.
auto reads_domains(const PlanNode& n) -> bool {
    switch (n.kind) {
        case OpKind::Selection: {
            if (n.as<SelectionParams>().mode != SelectionParams::Mode::Predicate) {
                return false;
            }
            std::vector<ColumnRef> typed;
            n.as<SelectionParams>().predicate.typed_columns(typed);
            return !typed.empty();
        }
        case OpKind::Sort:
        case OpKind::Join:
        case OpKind::GroupBy:
        case OpKind::Window:
        case OpKind::Map:
        case OpKind::Union:
        case OpKind::Induce:
        case OpKind::PointSet:
        case OpKind::Pivot:
            return true;
        default: return false;
    }
}

auto passes_domains(OpKind kind) -> bool {
    return kind != OpKind::Transpose && kind != OpKind::SortColumns && kind != OpKind::Scan;
}

auto changes_columns(OpKind kind) -> bool {
    switch (kind) {
        case OpKind::Projection:
        case OpKind::Rename:
        case OpKind::Sort:
        case OpKind::Induce:
        case OpKind::FromLabels:
        case OpKind::ToLabels:
            return false;
        default: return true;
    }
}

class Rules {
public:
    Rules(const PlanStats& stats, const RewriteOptions& opts, std::vector<std::string>& fired)
        : stats_(stats), opts_(opts), fired_(fired) {}

    auto local(PlanRef n) -> PlanRef {
        for (std::size_t step = 0; step < kMaxLocalSteps; ++step) {
            auto next = once(n);
            if (!next) {
                break;
            }
            n = *next;
        }
        return n;
    }

    auto pivot_choice(const PlanRef& n) -> PlanRef {
        if (n->kind != OpKind::Pivot) {
            return n;
        }
        auto out = n;
        const auto& p = n->as<PivotParams>();
        if (p.pivot == p.key || p.pivot == p.value || p.key == p.value) {
            // Left alone; the pivot kernel reports it at evaluation.
            return n;
        }
        if (opts_.r7) {
            const auto flags = stats_.flags(n->inputs[0]);
            auto flag = [&](const std::string& c) {
                auto it = flags.find(c);
                return it == flags.end() ? ColumnFlags{} : it->second;
            };
            const auto key = flag(p.key);
            if (key.any() && !flag(p.pivot).any()) {
                const char* why = key.sorted ? "sorted" : "clustered";
                fired_.push_back("R7 pivot-column-choice: pivot on \"" + p.key + "\" and transpose (\"" + p.key +
                                 "\" is " + why + ", \"" + p.pivot + "\" is not)");
                out = plan::transpose(plan::pivot(n->inputs[0], p.key, p.pivot, p.value));
            }
        }
        if (opts_.expand_pivots) {
            if (out->kind == OpKind::Transpose) {
                out = with_inputs(out, {expand_pivot(out->inputs[0])});
            } else {
                out = expand_pivot(out);
            }
        }
        return out;
    }

private:
    auto once(const PlanRef& n) -> std::optional<PlanRef> {
        const auto in = [&](std::size_t i) -> const PlanRef& { return n->inputs[i]; };
        switch (n->kind) {
            case OpKind::Transpose: {
                const bool plain = !n->as<TransposeParams>().declared;
                if (opts_.r1 && plain && in(0)->kind == OpKind::Transpose && open(in(0))) {
                    fired_.emplace_back("R1 transpose-elimination");
                    return in(0)->inputs[0];
                }
                if (opts_.r3 && plain && in(0)->kind == OpKind::Sort && open(in(0))) {
                    const auto& inner = in(0)->inputs[0];
                    if (inner->kind == OpKind::Transpose && open(inner) && !inner->as<TransposeParams>().declared) {
                        fired_.emplace_back("R3 column-reorder");
                        return plan::sort_columns(inner->inputs[0], in(0)->as<SortSpec>());
                    }
                }
                break;
            }
            case OpKind::Selection: {
                const auto& p = n->as<SelectionParams>();
                if (opts_.r2 && p.mode == SelectionParams::Mode::Positions && in(0)->kind == OpKind::Transpose &&
                    open(in(0))) {
                    std::vector<ColumnRef> cols;
                    for (auto i : p.positions) {
                        cols.push_back(ColumnRef::at(i));
                    }
                    fired_.emplace_back("R2 transpose-pull-up (selection to projection)");
                    return plan::transpose(plan::project(in(0)->inputs[0], std::move(cols)),
                                           in(0)->as<TransposeParams>().declared);
                }
                break;
            }
            case OpKind::Rename: {
                const auto& p = n->as<RenameParams>();
                if (opts_.r2 && in(0)->kind == OpKind::Transpose && open(in(0))) {
                    const Axis axis = p.axis == Axis::Columns ? Axis::Rows : Axis::Columns;
                    fired_.emplace_back("R2 transpose-pull-up (rename)");
                    return plan::transpose(plan::rename(in(0)->inputs[0], p.mapping, axis),
                                           in(0)->as<TransposeParams>().declared);
                }
                break;
            }
            case OpKind::Difference:
                if (opts_.r4 && in(1)->kind == OpKind::Sort && open(in(1))) {
                    fired_.emplace_back("R4 sort-elision (difference)");
                    return with_inputs(n, {in(0), in(1)->inputs[0]});
                }
                break;
            case OpKind::Sort:
                if (opts_.r4 && in(0)->kind == OpKind::Sort && open(in(0))) {
                    SortSpec spec = n->as<SortSpec>();
                    const auto& inner = in(0)->as<SortSpec>();
                    spec.insert(spec.end(), inner.begin(), inner.end());
                    fired_.emplace_back("R4 sort-merge");
                    return plan::sort(in(0)->inputs[0], std::move(spec));
                }
                break;
            default: break;
        }
        return std::nullopt;
    }

    const PlanStats& stats_;
    const RewriteOptions& opts_;
    std::vector<std::string>& fired_;
};

// Drops implicit Induce nodes whose domains cannot reach an observable
// difference. Walking top-down, a node is "observed" when some consumer
// reads its domains, and "sensitive" when removing domain information at
// that point could change what is read later: the domains travel through a
// consumer that changes the per-column multiset before someone reads them.
auto elide_induction(const PlanRef& root, std::vector<std::string>& fired) -> PlanRef {
    std::unordered_map<const PlanNode*, std::size_t> parents;
    std::vector<PlanRef> order;
    std::unordered_set<const PlanNode*> seen;
    std::function<void(const PlanRef&)> dfs = [&](const PlanRef& n) {
        if (!seen.insert(n.get()).second) {
            return;
        }
        if (n->fence && n != root) {
            order.push_back(n);
            return;
        }
        for (const auto& c : n->inputs) {
            ++parents[c.get()];
            dfs(c);
        }
        order.push_back(n);
    };
    dfs(root);
    std::reverse(order.begin(), order.end());

    struct Flags {
        bool observed = false;
        bool sensitive = false;
    };
    std::unordered_map<const PlanNode*, Flags> flags;
    for (const auto& n : order) {
        auto& f = flags[n.get()];
        if (parents[n.get()] > 1) {
            f = {true, true};
        }
        if (n->fence && n != root) {
            continue;
        }
        const bool uses = reads_domains(*n);
        const bool passes = passes_domains(n->kind);
        const bool changes = changes_columns(n->kind);
        // Induction of every column redoes whatever a lower one did over the
        // same rows, so nothing below depends on those lower domains.
        const bool resets = n->kind == OpKind::Induce && !n->as<InduceParams>().columns;
        for (const auto& c : n->inputs) {
            auto& cf = flags[c.get()];
            cf.observed = cf.observed || uses || (passes && f.observed);
            cf.sensitive = cf.sensitive || (!resets && ((passes && f.sensitive) || (changes && passes && f.observed)));
        }
    }

    std::unordered_map<const PlanNode*, PlanRef> memo;
    std::function<PlanRef(const PlanRef&)> go = [&](const PlanRef& n) -> PlanRef {
        if (n->fence && n != root) {
            return n;
        }
        if (auto it = memo.find(n.get()); it != memo.end()) {
            return it->second;
        }
        PlanRef out;
        const auto& f = flags[n.get()];
        if (n->kind == OpKind::Induce && !n->as<InduceParams>().explicit_request && !n->fence &&
            parents[n.get()] <= 1 && !f.sensitive) {
            fired.emplace_back("R5 induction-elision");
            out = go(n->inputs[0]);
        } else {
            std::vector<PlanRef> inputs;
            bool changed = false;
            for (const auto& c : n->inputs) {
                inputs.push_back(go(c));
                changed = changed || inputs.back() != c;
            }
            out = changed ? with_inputs(n, std::move(inputs)) : n;
        }
        memo.emplace(n.get(), out);
        return out;
    };
    auto out = go(root);
    if (root->fence && (!out->fence || out->binding != root->binding)) {
        out = fenced(out, root->binding);
    }
    return out;
}

auto observed_sorted(const Dataframe& df, std::size_t j) -> bool {
    Domain d = df.domain(j);
    if (d == Domain::Unspecified) {
        SchemaAccumulator acc;
        for (std::size_t i = 0; i < df.rows(); ++i) {
            acc.observe(df.at(i, j));
        }
        d = acc.result();
    }
    bool null_seen = false;
    CellValue prev;
    for (std::size_t i = 0; i < df.rows(); ++i) {
        auto v = try_parse(df.at(i, j), d);
        if (!v) {
            return false;
        }
        if (v->is_null()) {
            null_seen = true;
            continue;
        }
        if (null_seen) {
            return false;
        }
        if (!prev.is_null()) {
            const auto ord = compare_cells(prev, *v);
            if (ord == std::partial_ordering::greater || ord == std::partial_ordering::unordered) {
                return false;
            }
        }
        prev = std::move(*v);
    }
    return true;
}

auto observed_clustered(const Dataframe& df, std::size_t j) -> bool {
    std::unordered_set<std::string> closed;
    std::string current;
    for (std::size_t i = 0; i < df.rows(); ++i) {
        auto text = df.at(i, j).to_text();
        if (i > 0 && text == current) {
            continue;
        }
        if (i > 0) {
            closed.insert(current);
        }
        if (closed.contains(text)) {
            return false;
        }
        current = std::move(text);
    }
    return true;
}

}  // namespace

auto PlanStats::flags(const PlanRef& node) const -> ColumnStats {
    if (auto it = known.find(node->hash); it != known.end()) {
        return it->second;
    }
    switch (node->kind) {
        case OpKind::Selection:
        case OpKind::Head:
        case OpKind::Tail:
        case OpKind::Induce:
        case OpKind::Projection:
            return flags(node->inputs[0]);
        case OpKind::Rename: {
            const auto& p = node->as<RenameParams>();
            auto in = flags(node->inputs[0]);
            if (p.axis == Axis::Rows) {
                return in;
            }
            ColumnStats out;
            std::unordered_set<std::string> clash;
            for (const auto& [label, f] : in) {
                std::string to = label;
                for (const auto& [a, b] : p.mapping) {
                    if (a == label) {
                        to = b;
                        break;
                    }
                }
                if (!out.emplace(to, f).second) {
                    clash.insert(to);
                }
            }
            for (const auto& c : clash) {
                out[c] = ColumnFlags{};
            }
            return out;
        }
        case OpKind::Sort: {
            const auto& spec = node->as<SortSpec>();
            ColumnStats out;
            if (!spec.empty()) {
                if (const auto* name = std::get_if<std::string>(&spec.front().column.ref)) {
                    out[*name] = ColumnFlags{true, true};
                }
            }
            return out;
        }
        default: return {};
    }
}

void PlanStats::mark(const PlanRef& node, const std::string& column, ColumnFlags f) { known[node->hash][column] = f; }

auto observe(const Dataframe& df) -> ColumnStats {
    ColumnStats out;
    std::unordered_map<std::string, std::size_t> occurrences;
    for (std::size_t j = 0; j < df.cols(); ++j) {
        ++occurrences[df.col_label(j)];
    }
    for (std::size_t j = 0; j < df.cols(); ++j) {
        if (occurrences[df.col_label(j)] != 1) {
            continue;
        }
        out[df.col_label(j)] = ColumnFlags{observed_sorted(df, j), observed_clustered(df, j)};
    }
    return out;
}

auto canonicalize(const PlanRef& plan) -> PlanRef {
    return transform(plan, [](const PlanRef& n) -> PlanRef {
        if (n->kind == OpKind::Selection && n->as<SelectionParams>().mode == SelectionParams::Mode::Predicate) {
            auto p = n->as<SelectionParams>();
            auto c = canonical(p.predicate);
            if (c == p.predicate) {
                return n;
            }
            p.predicate = std::move(c);
            auto out = make_node(n->kind, n->inputs, std::move(p));
            return n->fence ? fenced(out, n->binding) : out;
        }
        if (n->kind == OpKind::Join) {
            auto spec = n->as<JoinSpec>();
            if (std::is_sorted(spec.on.begin(), spec.on.end())) {
                return n;
            }
            std::sort(spec.on.begin(), spec.on.end());
            auto out = make_node(n->kind, n->inputs, std::move(spec));
            return n->fence ? fenced(out, n->binding) : out;
        }
        return n;
    });
}

auto share_common(const PlanRef& plan, std::size_t* merged) -> PlanRef {
    std::unordered_map<std::uint64_t, std::vector<PlanRef>> table;
    std::unordered_map<const PlanNode*, PlanRef> memo;
    std::size_t count = 0;
    std::function<PlanRef(const PlanRef&)> go = [&](const PlanRef& n) -> PlanRef {
        if (auto it = memo.find(n.get()); it != memo.end()) {
            return it->second;
        }
        PlanRef cur = n;
        if (!n->fence || n == plan) {
            std::vector<PlanRef> inputs;
            bool changed = false;
            for (const auto& c : n->inputs) {
                inputs.push_back(go(c));
                changed = changed || inputs.back() != c;
            }
            if (changed) {
                cur = with_inputs(n, std::move(inputs));
            }
        }
        auto& bucket = table[cur->hash];
        for (auto& other : bucket) {
            if (other == cur) {
                break;
            }
            if (structurally_equal(other, cur)) {
                ++count;
                if (cur->fence && !other->fence) {
                    other = fenced(other, cur->binding);
                }
                cur = other;
                break;
            }
        }
        if (std::find(bucket.begin(), bucket.end(), cur) == bucket.end()) {
            bucket.push_back(cur);
        }
        memo.emplace(n.get(), cur);
        return cur;
    };
    auto out = go(plan);
    if (merged) {
        *merged = count;
    }
    return out;
}

auto rewrite(const PlanRef& plan, const PlanStats& stats, const RewriteOptions& opts) -> RewriteResult {
    RewriteResult res;
    Rules rules(stats, opts, res.fired);
    PlanRef p = canonicalize(plan);
    p = transform(p, [&](const PlanRef& n) { return rules.pivot_choice(n); });
    for (std::size_t iter = 0; iter < kMaxIterations; ++iter) {
        const std::size_t before = res.fired.size();
        p = transform(p, [&](const PlanRef& n) { return rules.local(n); });
        if (opts.r5) {
            p = elide_induction(p, res.fired);
        }
        if (opts.r6) {
            std::size_t merged = 0;
            p = share_common(p, &merged);
            if (merged > 0) {
                res.fired.push_back("R6 common-subplan (" + std::to_string(merged) + " merged)");
            }
        }
        res.iterations = iter + 1;
        if (res.fired.size() == before) {
            break;
        }
    }
    res.plan = p;
    return res;
}

auto insert_eager_induction(const PlanRef& plan) -> PlanRef {
    return transform(plan, [](const PlanRef& n) -> PlanRef {
        if (n->kind == OpKind::Induce) {
            return n;
        }
        return plan::induce(n, std::nullopt, false);
    });
}

auto explain(const PlanRef& plan, const PlanStats& stats, const RewriteOptions& opts) -> std::string {
    const auto res = rewrite(plan, stats, opts);
    std::string out = "plan:\n" + to_string(plan) + "rewritten:\n" + to_string(res.plan) + "rules:\n";
    if (res.fired.empty()) {
        return out + "  (no rules fired)\n";
    }
    // Firings grouped by rule text, in order of first occurrence.
    std::vector<std::pair<std::string, std::size_t>> grouped;
    for (const auto& f : res.fired) {
        auto it = std::find_if(grouped.begin(), grouped.end(), [&](const auto& g) { return g.first == f; });
        if (it == grouped.end()) {
            grouped.emplace_back(f, 1);
        } else {
            ++it->second;
        }
    }
    for (const auto& [rule, n] : grouped) {
        out += "  " + rule + (n > 1 ? " x" + std::to_string(n) : "") + "\n";
    }
    return out;
}

}  // namespace dfk::planner
