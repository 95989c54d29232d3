#include <dfk/core/counters.hpp>

#include <map>
#include <sstream>

namespace dfk {

auto to_string(OpKind kind) -> std::string_view {
    switch (kind) {
        case OpKind::Selection: return "Selection";
        case OpKind::Projection: return "Projection";
        case OpKind::Union: return "Union";
        case OpKind::Difference: return "Difference";
        case OpKind::Join: return "Join";
        case OpKind::DropDuplicates: return "DropDuplicates";
        case OpKind::GroupBy: return "GroupBy";
        case OpKind::Sort: return "Sort";
        case OpKind::Rename: return "Rename";
        case OpKind::Window: return "Window";
        case OpKind::Transpose: return "Transpose";
        case OpKind::Map: return "Map";
        case OpKind::ToLabels: return "ToLabels";
        case OpKind::FromLabels: return "FromLabels";
        case OpKind::Scan: return "Scan";
        case OpKind::Head: return "Head";
        case OpKind::Tail: return "Tail";
        case OpKind::Pivot: return "Pivot";
        case OpKind::Induce: return "Induce";
        case OpKind::PointSet: return "PointSet";
        case OpKind::SortColumns: return "SortColumns";
    }
    return "?";
}

auto stats_key(OpKind kind) -> std::string_view {
    switch (kind) {
        case OpKind::Selection: return "selection";
        case OpKind::Projection: return "projection";
        case OpKind::Union: return "union";
        case OpKind::Difference: return "difference";
        case OpKind::Join: return "join";
        case OpKind::DropDuplicates: return "drop_duplicates";
        case OpKind::GroupBy: return "groupby";
        case OpKind::Sort: return "sort";
        case OpKind::Rename: return "rename";
        case OpKind::Window: return "window";
        case OpKind::Transpose: return "transpose";
        case OpKind::Map: return "map";
        case OpKind::ToLabels: return "to_labels";
        case OpKind::FromLabels: return "from_labels";
        case OpKind::Scan: return "scan";
        case OpKind::Head: return "head";
        case OpKind::Tail: return "tail";
        case OpKind::Pivot: return "pivot";
        case OpKind::Induce: return "induce";
        case OpKind::PointSet: return "point_set";
        case OpKind::SortColumns: return "sort_columns";
    }
    return "?";
}

auto EngineStats::dump() const -> std::string {
    std::map<std::string, std::uint64_t> flat{
        {"cache_hits", cache_hits},
        {"cache_misses", cache_misses},
        {"cells_copied", cells_copied},
        {"cells_scanned", cells_scanned},
        {"cross_block_moves", cross_block_moves},
        {"label_index_builds", label_index_builds},
        {"partitions_evaluated", partitions_evaluated},
        {"s_invocations", s_invocations},
    };
    for (std::size_t i = 0; i < kOpKindCount; ++i) {
        flat.emplace("kernel." + std::string(stats_key(static_cast<OpKind>(i))), kernel_executions[i]);
    }
    std::ostringstream out;
    for (const auto& [key, value] : flat) {
        out << key << '=' << value << '\n';
    }
    return out.str();
}

auto Counters::snapshot() const -> EngineStats {
    EngineStats s;
    s.cells_copied = cells_copied.load();
    s.cross_block_moves = cross_block_moves.load();
    s.s_invocations = s_invocations.load();
    s.cells_scanned = cells_scanned.load();
    s.partitions_evaluated = partitions_evaluated.load();
    s.cache_hits = cache_hits.load();
    s.cache_misses = cache_misses.load();
    s.label_index_builds = label_index_builds.load();
    for (std::size_t i = 0; i < kOpKindCount; ++i) {
        s.kernel_executions[i] = kernel_executions[i].load();
    }
    return s;
}

void Counters::reset() {
    cells_copied = 0;
    cross_block_moves = 0;
    s_invocations = 0;
    cells_scanned = 0;
    partitions_evaluated = 0;
    cache_hits = 0;
    cache_misses = 0;
    label_index_builds = 0;
    for (auto& k : kernel_executions) {
        k = 0;
    }
}

auto counters() -> Counters& {
    static Counters instance;
    return instance;
}

}  // namespace dfk
