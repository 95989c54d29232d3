#include <dfk/engine/engine.hpp>

#include <dfk/algebra/ops.hpp>
#include <dfk/core/counters.hpp>
#include <dfk/core/error.hpp>
#include <dfk/core/schema.hpp>
#include <dfk/io/csv.hpp>
#include <dfk/io/render.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <numeric>
#include <unordered_set>

namespace dfk::engine {

using namespace algebra;

auto to_string(Mode mode) -> std::string_view {
    switch (mode) {
        case Mode::Eager: return "eager";
        case Mode::Lazy: return "lazy";
        case Mode::Opportunistic: return "opportunistic";
    }
    return "?";
}

auto mode_from_string(std::string_view name) -> std::optional<Mode> {
    if (name == "eager") {
        return Mode::Eager;
    }
    if (name == "lazy") {
        return Mode::Lazy;
    }
    if (name == "opportunistic") {
        return Mode::Opportunistic;
    }
    return std::nullopt;
}

auto to_string(HandleStatus status) -> std::string_view {
    switch (status) {
        case HandleStatus::Pending: return "pending";
        case HandleStatus::Running: return "running";
        case HandleStatus::Partial: return "partial";
        case HandleStatus::Complete: return "complete";
        case HandleStatus::Failed: return "failed";
    }
    return "?";
}

namespace {

auto row_local(const PlanNode& n) -> bool {
    switch (n.kind) {
        case OpKind::Selection: return n.as<SelectionParams>().mode == SelectionParams::Mode::Predicate;
        case OpKind::Projection:
        case OpKind::Rename:
            return true;
        case OpKind::Map: return !n.as<UdfSpec>().two_pass();
        default: return false;
    }
}

// Renames stacked directly on a materialized input only relabel it; running
// them as a partitioned pipeline would copy every cell.
auto pure_rename(const PlanNode& n) -> bool {
    if (n.kind != OpKind::Rename) {
        return false;
    }
    const auto& in = *n.inputs[0];
    return !row_local(in) || pure_rename(in);
}

auto pipelined(const PlanNode& n) -> bool { return row_local(n) && !pure_rename(n); }

auto typed_columns(const PlanNode& n, const RowSchema& schema) -> std::vector<std::size_t> {
    std::vector<std::size_t> cols;
    if (n.kind == OpKind::Selection) {
        std::vector<ColumnRef> refs;
        n.as<SelectionParams>().predicate.typed_columns(refs);
        for (const auto& r : refs) {
            cols.push_back(r.resolve(schema.labels));
        }
    } else if (n.kind == OpKind::Map) {
        cols = map_typed_columns(n.as<UdfSpec>(), schema);
    }
    return cols;
}

auto output_schema(const PlanNode& n, const RowSchema& in) -> RowSchema {
    switch (n.kind) {
        case OpKind::Selection: {
            std::vector<ColumnRef> refs;
            n.as<SelectionParams>().predicate.all_columns(refs);
            for (const auto& r : refs) {
                (void)r.resolve(in.labels);
            }
            (void)BoundPredicate::bind(n.as<SelectionParams>().predicate, in);
            return in;
        }
        case OpKind::Projection: {
            RowSchema out;
            for (std::size_t j : resolve_columns(in.labels, n.as<ProjectionParams>().columns)) {
                out.labels.push_back(in.labels[j]);
                out.domains.push_back(in.domains[j]);
            }
            return out;
        }
        case OpKind::Rename: {
            const auto& p = n.as<RenameParams>();
            RowSchema out = in;
            if (p.axis == Axis::Columns) {
                for (auto& label : out.labels) {
                    for (const auto& [from, to] : p.mapping) {
                        if (label == from) {
                            label = to;
                            break;
                        }
                    }
                }
            }
            return out;
        }
        case OpKind::Map: return prepare_map(n.as<UdfSpec>(), in).output;
        default: return in;
    }
}

/// Source column behind each output column, when its values are unchanged.
auto column_origin(const PlanNode& n, const RowSchema& in, const std::vector<std::optional<std::size_t>>& origin)
    -> std::vector<std::optional<std::size_t>> {
    switch (n.kind) {
        case OpKind::Selection:
        case OpKind::Rename:
            return origin;
        case OpKind::Projection: {
            std::vector<std::optional<std::size_t>> out;
            for (std::size_t j : resolve_columns(in.labels, n.as<ProjectionParams>().columns)) {
                out.push_back(origin[j]);
            }
            return out;
        }
        default: return std::vector<std::optional<std::size_t>>(output_schema(n, in).labels.size());
    }
}

auto apply_op(const PlanNode& n, const Dataframe& df) -> Dataframe {
    switch (n.kind) {
        case OpKind::Selection: return selection(df, n.as<SelectionParams>().predicate);
        case OpKind::Projection: return projection(df, n.as<ProjectionParams>().columns);
        case OpKind::Rename: {
            const auto& p = n.as<RenameParams>();
            return rename(df, p.axis, p.mapping);
        }
        case OpKind::Map: return map(df, n.as<UdfSpec>());
        default: fail(ErrorKind::InvalidArgument, "not a row-local operator");
    }
}

auto cells_of(const Dataframe& df) -> std::uint64_t { return static_cast<std::uint64_t>(df.rows()) * df.cols(); }

auto contains_pivot(const PlanRef& plan) -> bool {
    std::unordered_set<const PlanNode*> seen;
    std::function<bool(const PlanRef&)> go = [&](const PlanRef& n) {
        if (!seen.insert(n.get()).second) {
            return false;
        }
        if (n->kind == OpKind::Pivot) {
            return true;
        }
        return std::any_of(n->inputs.begin(), n->inputs.end(), go);
    };
    return go(plan);
}

}  // namespace

/// Evaluation state of one handle: finished nodes, row pipelines with the
/// partitions computed so far, and which kernels were already counted.
class Run {
public:
    Run(Engine& engine, PlanRef root) : eng_(engine), root_(std::move(root)) { count_parents(root_); }

    auto full(const PlanRef& n) -> Dataframe;
    auto prefix(const PlanRef& n, std::size_t k, bool from_head) -> Dataframe;
    auto render(std::size_t k) -> std::string;
    /// One unit of background work; true once the root is complete.
    auto step() -> bool;
    [[nodiscard]] auto complete() const -> bool { return done_.contains(root_.get()); }
    [[nodiscard]] auto started() const -> bool { return !done_.empty() || !pipes_.empty(); }

private:
    struct Pipe {
        std::vector<PlanRef> ops;
        Dataframe source;
        std::vector<std::pair<std::size_t, std::size_t>> ranges;
        std::vector<std::optional<Dataframe>> parts;
        Dataframe like;
        std::uint64_t source_cost = 0;

        [[nodiscard]] auto remaining() const -> std::size_t {
            return static_cast<std::size_t>(std::count(parts.begin(), parts.end(), std::nullopt));
        }
    };

    void count_parents(const PlanRef& n) {
        for (const auto& c : n->inputs) {
            if (parents_[c.get()]++ == 0 && (!c->fence)) {
                count_parents(c);
            }
        }
    }

    void count_kernel(const PlanNode& n) {
        if (counted_.insert(&n).second) {
            counters().count_kernel(n.kind);
        }
    }

    auto cached(const PlanRef& n) -> std::optional<Dataframe> {
        if (auto it = done_.find(n.get()); it != done_.end()) {
            return it->second;
        }
        return std::nullopt;
    }

    auto cacheable(const PlanRef& n) const -> bool {
        return !(n->kind == OpKind::Scan && n->as<ScanParams>().frame) && n->kind != OpKind::Head &&
               n->kind != OpKind::Tail;
    }

    void finish(const PlanRef& n, const Dataframe& out, std::uint64_t cost) {
        done_.emplace(n.get(), out);
        costs_[n.get()] = cost;
        if (cacheable(n)) {
            eng_.cache_.store(n, out, cost);
        }
    }

    auto child_cost(const PlanRef& n) const -> std::uint64_t {
        std::uint64_t c = 0;
        for (const auto& in : n->inputs) {
            if (auto it = costs_.find(in.get()); it != costs_.end()) {
                c += it->second;
            }
        }
        return c;
    }

    auto for_each() -> ForEach {
        return [this](std::size_t n, const std::function<void(std::size_t)>& fn) { eng_.pool_.parallel_for(n, fn); };
    }

    auto ranges_for(std::size_t rows) const -> std::vector<std::pair<std::size_t, std::size_t>> {
        const std::size_t step = std::max<std::size_t>(eng_.config_.block_shape.rows, 1);
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (std::size_t r = 0; r < rows; r += step) {
            out.emplace_back(r, std::min(rows, r + step));
        }
        return out;
    }

    auto induce_for(const PlanNode& op, const Dataframe& src) -> Dataframe {
        std::vector<std::size_t> cols;
        try {
            cols = typed_columns(op, row_schema(src));
        } catch (const Error&) {
            return src;  // the operator itself reports the problem
        }
        return eng_.induce_cached(src, cols);
    }

    /// Runs ops over `src` operator by operator, partitions in parallel.
    auto run_ops(const std::vector<PlanRef>& ops, const Dataframe& src) -> Dataframe {
        const auto ranges = ranges_for(src.rows());
        std::vector<Dataframe> parts(ranges.size());
        for (std::size_t p = 0; p < ranges.size(); ++p) {
            parts[p] = slice_rows(src, ranges[p].first, ranges[p].second);
        }
        Dataframe like = slice_rows(src, 0, 0);
        for (const auto& op : ops) {
            like = apply_op(*op, like);
            eng_.pool_.parallel_for(parts.size(), [&](std::size_t p) { parts[p] = apply_op(*op, parts[p]); });
        }
        counters().partitions_evaluated.fetch_add(parts.size(), std::memory_order_relaxed);
        return concat_rows(parts, like);
    }

    auto pipe_for(const PlanRef& top) -> Pipe&;
    void eval_parts(Pipe& pipe, const std::vector<std::size_t>& which);
    auto finish_pipe(const PlanRef& top, Pipe& pipe) -> Dataframe;
    auto compute(const PlanRef& n) -> Dataframe;
    auto groupby(const Dataframe& in, const GroupBySpec& spec) -> Dataframe;
    auto join(const Dataframe& a, const Dataframe& b, const JoinSpec& spec) -> Dataframe;
    auto sort(const Dataframe& in, const SortSpec& spec) -> Dataframe;

    Engine& eng_;
    PlanRef root_;
    std::unordered_map<const PlanNode*, std::size_t> parents_;
    std::unordered_map<const PlanNode*, Dataframe> done_;
    std::unordered_map<const PlanNode*, std::uint64_t> costs_;
    std::unordered_map<const PlanNode*, std::unique_ptr<Pipe>> pipes_;
    std::unordered_set<const PlanNode*> counted_;
    std::vector<PlanRef> keep_;
};

auto Run::pipe_for(const PlanRef& top) -> Pipe& {
    if (auto it = pipes_.find(top.get()); it != pipes_.end()) {
        return *it->second;
    }
    std::vector<PlanRef> ops{top};
    PlanRef cur = top->inputs[0];
    while (row_local(*cur) && !cur->fence && parents_[cur.get()] <= 1 && !done_.contains(cur.get()) &&
           !eng_.cache_.contains(cur)) {
        ops.push_back(cur);
        cur = cur->inputs[0];
    }
    std::reverse(ops.begin(), ops.end());
    Dataframe src = full(cur);
    std::uint64_t cost = costs_[cur.get()];
    for (const auto& op : ops) {
        count_kernel(*op);
    }
    // Split where an operator past the first needs the domain of a column
    // that only exists after the earlier operators ran on all rows. Columns
    // that still hold the source values (no selection has dropped rows yet)
    // are induced on the source instead.
    std::size_t start = 0;
    while (true) {
        src = induce_for(*ops[start], src);
        RowSchema schema = row_schema(src);
        std::vector<std::optional<std::size_t>> origin(src.cols());
        std::iota(origin.begin(), origin.end(), std::size_t{0});
        bool filtered = false;
        std::size_t split = ops.size();
        std::vector<std::size_t> pull;
        for (std::size_t i = start; i < ops.size(); ++i) {
            if (i > start) {
                bool needs = false;
                try {
                    for (std::size_t j : typed_columns(*ops[i], schema)) {
                        if (schema.domains[j] != Domain::Unspecified) {
                            continue;
                        }
                        if (!filtered && origin[j]) {
                            pull.push_back(*origin[j]);
                        } else {
                            needs = true;
                        }
                    }
                    if (!needs && pull.empty()) {
                        (void)output_schema(*ops[i], schema);
                    }
                } catch (const Error&) {
                    needs = true;
                }
                if (needs) {
                    pull.clear();
                    split = i;
                    break;
                }
                if (!pull.empty()) {
                    break;
                }
            }
            origin = column_origin(*ops[i], schema, origin);
            schema = output_schema(*ops[i], schema);
            filtered = filtered || ops[i]->kind == OpKind::Selection;
        }
        if (!pull.empty()) {
            src = eng_.induce_cached(src, pull);
            continue;
        }
        if (split == ops.size()) {
            break;
        }
        src = run_ops(std::vector<PlanRef>(ops.begin() + static_cast<std::ptrdiff_t>(start),
                                           ops.begin() + static_cast<std::ptrdiff_t>(split)),
                      src);
        cost += cells_of(src);
        start = split;
    }
    auto pipe = std::make_unique<Pipe>();
    pipe->ops.assign(ops.begin() + static_cast<std::ptrdiff_t>(start), ops.end());
    pipe->source = src;
    pipe->ranges = ranges_for(src.rows());
    pipe->parts.resize(pipe->ranges.size());
    pipe->like = slice_rows(src, 0, 0);
    for (const auto& op : pipe->ops) {
        pipe->like = apply_op(*op, pipe->like);
    }
    pipe->source_cost = cost;
    auto& ref = *pipe;
    pipes_.emplace(top.get(), std::move(pipe));
    return ref;
}

void Run::eval_parts(Pipe& pipe, const std::vector<std::size_t>& which) {
    std::vector<Dataframe> parts(which.size());
    for (std::size_t w = 0; w < which.size(); ++w) {
        const auto [lo, hi] = pipe.ranges[which[w]];
        parts[w] = slice_rows(pipe.source, lo, hi);
    }
    for (const auto& op : pipe.ops) {
        eng_.pool_.parallel_for(parts.size(), [&](std::size_t w) { parts[w] = apply_op(*op, parts[w]); });
    }
    for (std::size_t w = 0; w < which.size(); ++w) {
        pipe.parts[which[w]] = std::move(parts[w]);
    }
    counters().partitions_evaluated.fetch_add(which.size(), std::memory_order_relaxed);
}

auto Run::finish_pipe(const PlanRef& top, Pipe& pipe) -> Dataframe {
    std::vector<std::size_t> missing;
    for (std::size_t p = 0; p < pipe.parts.size(); ++p) {
        if (!pipe.parts[p]) {
            missing.push_back(p);
        }
    }
    eval_parts(pipe, missing);
    std::vector<Dataframe> parts;
    parts.reserve(pipe.parts.size());
    for (auto& p : pipe.parts) {
        parts.push_back(*p);
    }
    auto out = concat_rows(parts, pipe.like);
    finish(top, out, pipe.source_cost + cells_of(out));
    pipes_.erase(top.get());
    return out;
}

auto Run::full(const PlanRef& n) -> Dataframe {
    if (auto hit = cached(n)) {
        return *hit;
    }
    if (n->fence && n != root_) {
        if (auto bound = eng_.resolve_binding(n)) {
            done_.emplace(n.get(), *bound);
            costs_[n.get()] = cells_of(*bound);
            return *bound;
        }
    }
    if (cacheable(n)) {
        if (auto hit = eng_.cache_.lookup(n)) {
            done_.emplace(n.get(), *hit);
            costs_[n.get()] = eng_.cache_.cost_of(n).value_or(cells_of(*hit));
            return *hit;
        }
    }
    if (pipelined(*n)) {
        return finish_pipe(n, pipe_for(n));
    }
    auto out = compute(n);
    count_kernel(*n);
    finish(n, out, cells_of(out) + child_cost(n));
    return out;
}

auto Run::compute(const PlanRef& n) -> Dataframe {
    auto in = [&](std::size_t i) { return full(n->inputs[i]); };
    switch (n->kind) {
        case OpKind::Scan: {
            const auto& p = n->as<ScanParams>();
            if (p.frame) {
                return *p.frame;
            }
            io::CsvOptions opts;
            opts.has_row_labels = p.csv->has_row_labels;
            opts.delimiter = p.csv->delimiter;
            opts.fuse_induction = p.csv->fuse_induction;
            opts.shape = eng_.config_.block_shape;
            return io::read_csv(p.csv->path, opts);
        }
        case OpKind::Selection: {
            const auto& p = n->as<SelectionParams>();
            if (p.mode == SelectionParams::Mode::Positions) {
                return select_positions(in(0), p.positions);
            }
            return select_labels(in(0), p.labels);
        }
        case OpKind::Union: {
            auto a = in(0);
            auto b = in(1);
            return union_all(a, b, n->as<UnionParams>().strict || eng_.config_.strict_union);
        }
        case OpKind::Difference: {
            auto a = in(0);
            return difference(a, in(1));
        }
        case OpKind::Join: {
            auto a = in(0);
            return join(a, in(1), n->as<JoinSpec>());
        }
        case OpKind::DropDuplicates: return drop_duplicates(in(0));
        case OpKind::GroupBy: return groupby(in(0), n->as<GroupBySpec>());
        case OpKind::Sort: return sort(in(0), n->as<SortSpec>());
        case OpKind::SortColumns: return sort_columns(in(0), n->as<SortSpec>());
        case OpKind::Window: return window(in(0), n->as<WindowParams>(), for_each());
        case OpKind::Transpose: return in(0).transposed(n->as<TransposeParams>().declared);
        case OpKind::Map: return map(in(0), n->as<UdfSpec>());
        case OpKind::ToLabels: return to_labels(in(0), n->as<LabelParams>().label);
        case OpKind::FromLabels: return from_labels(in(0), n->as<LabelParams>().label);
        case OpKind::Head: return prefix(n->inputs[0], n->as<CountParams>().k, true);
        case OpKind::Tail: return prefix(n->inputs[0], n->as<CountParams>().k, false);
        case OpKind::Pivot: {
            (void)in(0);
            auto expanded = expand_pivot(n);
            keep_.push_back(expanded);
            return full(expanded);
        }
        case OpKind::Induce: {
            auto df = in(0);
            const auto& p = n->as<InduceParams>();
            std::vector<std::size_t> cols(df.cols());
            std::iota(cols.begin(), cols.end(), std::size_t{0});
            if (p.columns) {
                cols = resolve_columns(df.col_labels(), *p.columns);
            }
            return eng_.induce_cached(df, cols);
        }
        case OpKind::PointSet: {
            const auto& p = n->as<PointSetParams>();
            return point_set(in(0), p.row, p.col, p.value);
        }
        case OpKind::Projection:
        case OpKind::Rename:
            break;
    }
    return apply_op(*n, in(0));
}

auto Run::prefix(const PlanRef& n, std::size_t k, bool from_head) -> Dataframe {
    auto slice = [&](const Dataframe& df) { return from_head ? head(df, k) : tail(df, k); };
    if (auto hit = cached(n)) {
        return slice(*hit);
    }
    if (n->kind == OpKind::Head && from_head) {
        return prefix(n->inputs[0], std::min(k, n->as<CountParams>().k), true);
    }
    if (n->kind == OpKind::Tail && !from_head) {
        return prefix(n->inputs[0], std::min(k, n->as<CountParams>().k), false);
    }
    if (!pipelined(*n) || (n->fence && n != root_) || eng_.cache_.contains(n)) {
        return slice(full(n));
    }
    Pipe& pipe = pipe_for(n);
    std::vector<Dataframe> got;
    std::size_t rows = 0;
    const std::size_t count = pipe.parts.size();
    for (std::size_t t = 0; t < count && rows < k; ++t) {
        const std::size_t p = from_head ? t : count - 1 - t;
        if (!pipe.parts[p]) {
            eval_parts(pipe, {p});
        }
        rows += pipe.parts[p]->rows();
        got.push_back(*pipe.parts[p]);
    }
    if (!from_head) {
        std::reverse(got.begin(), got.end());
    }
    if (pipe.remaining() == 0) {
        return slice(finish_pipe(n, pipe));
    }
    return slice(concat_rows(got, pipe.like));
}

auto Run::render(std::size_t k) -> std::string {
    if (auto hit = cached(root_)) {
        return io::render(*hit, k);
    }
    if (!pipelined(*root_) || eng_.cache_.contains(root_)) {
        return io::render(full(root_), k);
    }
    Pipe& pipe = pipe_for(root_);
    const std::size_t count = pipe.parts.size();
    auto ensure = [&](std::size_t p) {
        if (!pipe.parts[p]) {
            eval_parts(pipe, {p});
        }
        return pipe.parts[p]->rows();
    };
    std::size_t front = 0;
    std::size_t head_rows = 0;
    while (front < count && head_rows < k) {
        head_rows += ensure(front++);
    }
    std::size_t back = count;
    std::size_t tail_rows = 0;
    while (back > front && tail_rows < k) {
        tail_rows += ensure(--back);
    }
    // Rows beyond 2k already seen in disjoint partitions prove m > 2k.
    if (back > front && head_rows + tail_rows > 2 * k) {
        std::vector<Dataframe> bottom;
        for (std::size_t p = back; p < count; ++p) {
            bottom.push_back(*pipe.parts[p]);
        }
        std::vector<Dataframe> top_frames;
        for (std::size_t p = 0; p < front; ++p) {
            top_frames.push_back(*pipe.parts[p]);
        }
        return io::render_split(head(concat_rows(top_frames, pipe.like), k), tail(concat_rows(bottom, pipe.like), k));
    }
    return io::render(finish_pipe(root_, pipe), k);
}

auto Run::step() -> bool {
    if (complete()) {
        return true;
    }
    if (!pipelined(*root_) || eng_.cache_.contains(root_)) {
        full(root_);
        return true;
    }
    Pipe& pipe = pipe_for(root_);
    std::vector<std::size_t> next;
    for (std::size_t p = 0; p < pipe.parts.size() && next.size() < eng_.pool_.size(); ++p) {
        if (!pipe.parts[p]) {
            next.push_back(p);
        }
    }
    if (next.empty()) {
        finish_pipe(root_, pipe);
        return true;
    }
    eval_parts(pipe, next);
    return false;
}

auto Run::groupby(const Dataframe& in, const GroupBySpec& spec) -> Dataframe {
    const auto plan = prepare_groupby(in, spec);
    const auto ranges = ranges_for(plan.input.rows());
    // Per-partition groups in first-occurrence order, then an ordered merge.
    using Local = std::vector<std::pair<std::string, std::vector<std::size_t>>>;
    std::vector<Local> local(ranges.size());
    eng_.pool_.parallel_for(ranges.size(), [&](std::size_t p) {
        std::unordered_map<std::string, std::size_t> index;
        for (std::size_t i = ranges[p].first; i < ranges[p].second; ++i) {
            auto key = group_key(plan, i);
            auto [it, inserted] = index.emplace(key, local[p].size());
            if (inserted) {
                local[p].emplace_back(std::move(key), std::vector<std::size_t>{});
            }
            local[p][it->second].second.push_back(i);
        }
    });
    std::vector<std::vector<std::size_t>> groups;
    std::unordered_map<std::string, std::size_t> index;
    for (auto& part : local) {
        for (auto& [key, members] : part) {
            auto [it, inserted] = index.emplace(key, groups.size());
            if (inserted) {
                groups.emplace_back();
            }
            auto& g = groups[it->second];
            g.insert(g.end(), members.begin(), members.end());
        }
    }
    const std::size_t aggs = plan.outputs.size();
    std::vector<CellValue> cells(groups.size() * aggs);
    eng_.pool_.parallel_for(groups.size(), [&](std::size_t g) {
        for (std::size_t a = 0; a < aggs; ++a) {
            cells[g * aggs + a] = aggregate(plan, a, groups[g]);
        }
    });
    return assemble_groupby(plan, groups, std::move(cells));
}

auto Run::join(const Dataframe& a, const Dataframe& b, const JoinSpec& spec) -> Dataframe {
    const auto plan = prepare_join(a, b, spec);
    std::unordered_map<std::string, std::vector<std::size_t>> table;
    if (plan.kind != JoinKind::Cross) {
        for (std::size_t r = 0; r < plan.right.rows(); ++r) {
            if (auto key = join_key(plan, false, r)) {
                table[*key].push_back(r);
            }
        }
    }
    const auto ranges = ranges_for(plan.left.rows());
    using Pairs = std::vector<std::pair<std::size_t, std::optional<std::size_t>>>;
    std::vector<Pairs> local(ranges.size());
    eng_.pool_.parallel_for(ranges.size(), [&](std::size_t p) {
        for (std::size_t i = ranges[p].first; i < ranges[p].second; ++i) {
            if (plan.kind == JoinKind::Cross) {
                for (std::size_t r = 0; r < plan.right.rows(); ++r) {
                    local[p].emplace_back(i, r);
                }
                continue;
            }
            const auto key = join_key(plan, true, i);
            auto it = key ? table.find(*key) : table.end();
            if (it == table.end()) {
                if (plan.kind == JoinKind::Left) {
                    local[p].emplace_back(i, std::nullopt);
                }
                continue;
            }
            for (std::size_t r : it->second) {
                local[p].emplace_back(i, r);
            }
        }
    });
    Pairs pairs;
    for (auto& l : local) {
        pairs.insert(pairs.end(), l.begin(), l.end());
    }
    return assemble_join(plan, pairs);
}

auto Run::sort(const Dataframe& in, const SortSpec& spec) -> Dataframe {
    Dataframe induced;
    const auto keys = prepare_sort(in, spec, induced);
    const std::size_t m = induced.rows();
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    auto less = [&](std::size_t x, std::size_t y) { return keys.less(x, y); };
    // Stable sort per chunk, then stable pairwise merges.
    const std::size_t chunks = std::max<std::size_t>(1, std::min(eng_.pool_.size(), m / 2 + 1));
    std::vector<std::size_t> bounds(chunks + 1);
    for (std::size_t c = 0; c <= chunks; ++c) {
        bounds[c] = m * c / chunks;
    }
    eng_.pool_.parallel_for(chunks, [&](std::size_t c) {
        std::stable_sort(perm.begin() + static_cast<std::ptrdiff_t>(bounds[c]),
                         perm.begin() + static_cast<std::ptrdiff_t>(bounds[c + 1]), less);
    });
    for (std::size_t width = 1; width < chunks; width *= 2) {
        for (std::size_t c = 0; c + width < chunks; c += 2 * width) {
            const auto lo = perm.begin() + static_cast<std::ptrdiff_t>(bounds[c]);
            const auto mid = perm.begin() + static_cast<std::ptrdiff_t>(bounds[c + width]);
            const auto hi = perm.begin() + static_cast<std::ptrdiff_t>(bounds[std::min(c + 2 * width, chunks)]);
            std::inplace_merge(lo, mid, hi, less);
        }
    }
    return induced.with_row_permutation(perm);
}

struct HandleState {
    PlanRef original;
    PlanRef plan;
    std::vector<std::string> fired;
    std::mutex mutex;
    std::atomic<int> demand{0};
    std::atomic<HandleStatus> status{HandleStatus::Pending};
    std::unique_ptr<Run> run;
    std::optional<Dataframe> result;
    std::exception_ptr error;

    void advance(HandleStatus s) {
        auto cur = status.load();
        if (cur == HandleStatus::Complete || cur == HandleStatus::Failed) {
            return;
        }
        if (static_cast<int>(s) > static_cast<int>(cur)) {
            status = s;
        }
    }
};

auto Handle::status() const -> HandleStatus { return state_->status.load(); }
auto Handle::plan() const -> const PlanRef& { return state_->original; }
auto Handle::rewritten() const -> const PlanRef& { return state_->plan; }
auto Handle::fired_rules() const -> const std::vector<std::string>& { return state_->fired; }

Engine::Engine(EngineConfig config)
    : config_(config), pool_(std::max<std::size_t>(config.threads, 1)), cache_(config.cache_bytes) {
    if (config_.mode == Mode::Opportunistic) {
        worker_ = std::thread([this] { background(); });
    }
}

Engine::~Engine() {
    {
        std::lock_guard lock(queue_mutex_);
        stop_ = true;
    }
    queue_cv_.notify_all();
    if (worker_.joinable()) {
        worker_.join();
    }
}

auto Engine::find(const PlanRef& plan) -> std::optional<Handle> {
    std::lock_guard lock(registry_mutex_);
    auto [lo, hi] = registry_.equal_range(plan->hash);
    for (auto it = lo; it != hi; ++it) {
        if (structurally_equal(it->second->original, plan)) {
            return Handle(it->second);
        }
    }
    return std::nullopt;
}

auto Engine::submit(const PlanRef& plan) -> Handle {
    if (auto existing = find(plan)) {
        if (config_.mode == Mode::Eager) {
            collect(*existing);
        }
        return *existing;
    }
    auto state = std::make_shared<HandleState>();
    state->original = plan;
    state->plan = plan;
    if (config_.rewrite) {
        try {
            auto res = planner::rewrite(plan, stats_for(plan));
            state->plan = res.plan;
            state->fired = std::move(res.fired);
        } catch (const Error&) {
            // An invalid pivot cannot be expanded; evaluation reports it.
        }
    }
    state->run = std::make_unique<Run>(*this, state->plan);
    {
        std::lock_guard lock(registry_mutex_);
        registry_.emplace(plan->hash, state);
    }
    Handle h(state);
    switch (config_.mode) {
        case Mode::Eager: collect(h); break;
        case Mode::Lazy: break;
        case Mode::Opportunistic: {
            {
                std::lock_guard lock(queue_mutex_);
                queue_.push_back(state);
            }
            queue_cv_.notify_all();
            break;
        }
    }
    return h;
}

void Engine::run_to_completion(const std::shared_ptr<HandleState>& s) {
    if (s->status == HandleStatus::Complete || s->status == HandleStatus::Failed) {
        return;
    }
    s->advance(HandleStatus::Running);
    try {
        s->result = s->run->full(s->plan);
        s->status = HandleStatus::Complete;
    } catch (...) {
        s->error = std::current_exception();
        s->status = HandleStatus::Failed;
    }
    s->run.reset();
}

namespace {

/// Marks a demand so the background worker yields at its next unit.
class Demand {
public:
    explicit Demand(HandleState& s) : s_(s) {
        ++s_.demand;
        lock_ = std::unique_lock(s_.mutex);
        --s_.demand;
    }

private:
    HandleState& s_;
    std::unique_lock<std::mutex> lock_;
};

}  // namespace

auto Engine::collect(const Handle& h) -> Dataframe {
    auto& s = *h.state_;
    Demand d(s);
    run_to_completion(h.state_);
    if (s.status == HandleStatus::Failed) {
        std::rethrow_exception(s.error);
    }
    return *s.result;
}

auto Engine::head(const Handle& h, std::size_t k) -> Dataframe {
    auto& s = *h.state_;
    Demand d(s);
    if (s.status == HandleStatus::Failed) {
        std::rethrow_exception(s.error);
    }
    if (s.result) {
        return algebra::head(*s.result, k);
    }
    s.advance(HandleStatus::Running);
    auto out = s.run->prefix(s.plan, k, true);
    s.advance(HandleStatus::Partial);
    return out;
}

auto Engine::tail(const Handle& h, std::size_t k) -> Dataframe {
    auto& s = *h.state_;
    Demand d(s);
    if (s.status == HandleStatus::Failed) {
        std::rethrow_exception(s.error);
    }
    if (s.result) {
        return algebra::tail(*s.result, k);
    }
    s.advance(HandleStatus::Running);
    auto out = s.run->prefix(s.plan, k, false);
    s.advance(HandleStatus::Partial);
    return out;
}

auto Engine::render(const Handle& h, std::size_t k) -> std::string {
    auto& s = *h.state_;
    Demand d(s);
    if (s.status == HandleStatus::Failed) {
        std::rethrow_exception(s.error);
    }
    if (s.result) {
        return io::render(*s.result, k);
    }
    s.advance(HandleStatus::Running);
    auto out = s.run->render(k);
    if (s.run->complete()) {
        s.result = s.run->full(s.plan);
        s.status = HandleStatus::Complete;
        s.run.reset();
    } else {
        s.advance(HandleStatus::Partial);
    }
    return out;
}

auto Engine::execute(const PlanRef& plan) -> Dataframe { return collect(submit(plan)); }

void Engine::background() {
    while (true) {
        std::shared_ptr<HandleState> s;
        {
            std::unique_lock lock(queue_mutex_);
            queue_cv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
            if (stop_) {
                return;
            }
            s = queue_.front();
            busy_ = true;
        }
        while (true) {
            {
                std::lock_guard lock(queue_mutex_);
                if (stop_) {
                    return;
                }
            }
            if (s->demand > 0) {
                std::this_thread::sleep_for(std::chrono::microseconds(200));
                continue;
            }
            std::unique_lock lock(s->mutex);
            if (s->status == HandleStatus::Complete || s->status == HandleStatus::Failed) {
                break;
            }
            s->advance(HandleStatus::Running);
            try {
                if (s->run->step()) {
                    s->result = s->run->full(s->plan);
                    s->status = HandleStatus::Complete;
                    s->run.reset();
                    break;
                }
                s->advance(HandleStatus::Partial);
            } catch (...) {
                s->error = std::current_exception();
                s->status = HandleStatus::Failed;
                s->run.reset();
                break;
            }
        }
        {
            std::lock_guard lock(queue_mutex_);
            queue_.pop_front();
            busy_ = false;
        }
        idle_cv_.notify_all();
    }
}

void Engine::wait_idle() {
    std::unique_lock lock(queue_mutex_);
    idle_cv_.wait(lock, [&] { return (queue_.empty() && !busy_) || stop_ || !worker_.joinable(); });
}

auto Engine::resolve_binding(const PlanRef& node) -> std::optional<Dataframe> {
    auto h = find(node);
    if (!h) {
        return std::nullopt;
    }
    return collect(*h);
}

auto Engine::induce_cached(const Dataframe& df, const std::vector<std::size_t>& cols) -> Dataframe {
    std::vector<Domain> schema = df.schema();
    bool changed = false;
    for (std::size_t j : cols) {
        if (schema[j] != Domain::Unspecified) {
            continue;
        }
        const std::size_t pc = df.physical_col(j);
        std::optional<Domain> known;
        {
            std::lock_guard lock(schema_mutex_);
            auto it = schema_cache_.find(df.storage_id());
            if (it != schema_cache_.end() && it->second.domains[pc]) {
                known = it->second.domains[pc];
            }
        }
        if (!known) {
            known = induce_schema(df.column(j));
            std::lock_guard lock(schema_mutex_);
            auto& entry = schema_cache_[df.storage_id()];
            if (entry.domains.empty()) {
                entry.keepalive = df;
                entry.domains.resize(df.grid().cols());
            }
            entry.domains[pc] = known;
        }
        schema[j] = *known;
        changed = true;
    }
    return changed ? df.with_schema(std::move(schema)) : df;
}

auto Engine::stats_for(const PlanRef& plan) -> planner::PlanStats {
    planner::PlanStats stats;
    if (!contains_pivot(plan)) {
        return stats;
    }
    std::unordered_set<const PlanNode*> seen;
    std::function<void(const PlanRef&)> go = [&](const PlanRef& n) {
        if (!seen.insert(n.get()).second) {
            return;
        }
        if (n->kind == OpKind::Scan && n->as<ScanParams>().frame) {
            stats.known[n->hash] = planner::observe(*n->as<ScanParams>().frame);
            return;
        }
        if (n->fence && n != plan) {
            {
                std::lock_guard lock(registry_mutex_);
                if (auto it = observed_.find(n->hash); it != observed_.end()) {
                    stats.known[n->hash] = it->second;
                    return;
                }
            }
            if (auto h = find(n); h && h->status() == HandleStatus::Complete) {
                auto flags = planner::observe(*h->state_->result);
                std::lock_guard lock(registry_mutex_);
                observed_[n->hash] = flags;
                stats.known[n->hash] = std::move(flags);
            }
            return;
        }
        for (const auto& c : n->inputs) {
            go(c);
        }
    };
    go(plan);
    return stats;
}

auto Engine::explain(const PlanRef& plan) -> std::string {
    planner::RewriteOptions opts;
    if (!config_.rewrite) {
        opts = planner::RewriteOptions{false, false, false, false, false, false, false, true};
    }
    return planner::explain(plan, stats_for(plan), opts);
}

}  // namespace dfk::engine
