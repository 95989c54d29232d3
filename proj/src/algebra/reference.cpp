#include <dfk/algebra/reference.hpp>

#include <dfk/algebra/ops.hpp>
#include <dfk/io/csv.hpp>

#include <unordered_map>

namespace dfk::algebra {

namespace {

auto scan(const ScanParams& p) -> Dataframe {
    if (p.frame) {
        return *p.frame;
    }
    io::CsvOptions opts;
    opts.has_row_labels = p.csv->has_row_labels;
    opts.delimiter = p.csv->delimiter;
    opts.fuse_induction = p.csv->fuse_induction;
    return io::read_csv(p.csv->path, opts);
}

class Evaluator {
public:
    explicit Evaluator(const ReferenceOptions& opts) : opts_(opts) {}

    auto eval(const PlanRef& node) -> Dataframe {
        if (auto it = memo_.find(node.get()); it != memo_.end()) {
            return it->second;
        }
        auto out = compute(*node);
        memo_.emplace(node.get(), out);
        return out;
    }

private:
    auto compute(const PlanNode& n) -> Dataframe {
        std::vector<Dataframe> in;
        for (const auto& child : n.inputs) {
            in.push_back(eval(child));
        }
        switch (n.kind) {
            case OpKind::Scan: return scan(n.as<ScanParams>());
            case OpKind::Selection: {
                const auto& p = n.as<SelectionParams>();
                switch (p.mode) {
                    case SelectionParams::Mode::Predicate: return selection(in[0], p.predicate);
                    case SelectionParams::Mode::Positions: return select_positions(in[0], p.positions);
                    case SelectionParams::Mode::Labels: return select_labels(in[0], p.labels);
                }
                break;
            }
            case OpKind::Projection: return projection(in[0], n.as<ProjectionParams>().columns);
            case OpKind::Union: return union_all(in[0], in[1], n.as<UnionParams>().strict || opts_.strict_union);
            case OpKind::Difference: return difference(in[0], in[1]);
            case OpKind::Join: return join(in[0], in[1], n.as<JoinSpec>());
            case OpKind::DropDuplicates: return drop_duplicates(in[0]);
            case OpKind::GroupBy: return groupby(in[0], n.as<GroupBySpec>());
            case OpKind::Sort: return sort(in[0], n.as<SortSpec>());
            case OpKind::SortColumns: return sort_columns(in[0], n.as<SortSpec>());
            case OpKind::Rename: {
                const auto& p = n.as<RenameParams>();
                return rename(in[0], p.axis, p.mapping);
            }
            case OpKind::Window: return window(in[0], n.as<WindowParams>());
            case OpKind::Transpose: return transpose_copy(in[0], n.as<TransposeParams>().declared);
            case OpKind::Map: return map(in[0], n.as<UdfSpec>());
            case OpKind::ToLabels: return to_labels(in[0], n.as<LabelParams>().label);
            case OpKind::FromLabels: return from_labels(in[0], n.as<LabelParams>().label);
            case OpKind::Head: return head(in[0], n.as<CountParams>().k);
            case OpKind::Tail: return tail(in[0], n.as<CountParams>().k);
            case OpKind::Pivot: return pivot(in[0], n.as<PivotParams>());
            case OpKind::Induce: return induce(in[0], n.as<InduceParams>());
            case OpKind::PointSet: {
                const auto& p = n.as<PointSetParams>();
                return point_set(in[0], p.row, p.col, p.value);
            }
        }
        return in.empty() ? Dataframe() : in[0];
    }

    const ReferenceOptions& opts_;
    std::unordered_map<const PlanNode*, Dataframe> memo_;
};

}  // namespace

auto evaluate(const PlanRef& plan, const ReferenceOptions& opts) -> Dataframe {
    Evaluator ev(opts);
    return ev.eval(plan);
}

}  // namespace dfk::algebra
