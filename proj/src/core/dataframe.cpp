#include <dfk/core/dataframe.hpp>

#include <dfk/core/counters.hpp>
#include <dfk/core/error.hpp>

#include <atomic>
#include <mutex>
#include <numeric>
#include <unordered_map>

namespace dfk {

class LabelIndex {
public:
    auto lookup(const Dataframe& df, const std::string& label) -> const std::vector<std::size_t>& {
        std::call_once(built_, [&] {
            counters().label_index_builds.fetch_add(1, std::memory_order_relaxed);
            for (std::size_t i = 0; i < df.rows(); ++i) {
                index_[df.row_label(i)].push_back(i);
            }
            built_flag_.store(true, std::memory_order_release);
        });
        static const std::vector<std::size_t> kNone;
        auto it = index_.find(label);
        return it == index_.end() ? kNone : it->second;
    }

    [[nodiscard]] auto built() const -> bool { return built_flag_.load(std::memory_order_acquire); }

private:
    std::once_flag built_;
    std::atomic<bool> built_flag_{false};
    std::unordered_map<std::string, std::vector<std::size_t>> index_;
};

auto positional_labels(std::size_t n) -> std::vector<std::string> {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(std::to_string(i));
    }
    return out;
}

Dataframe::Dataframe() : Dataframe(PartitionGrid::from_row_major(0, 0, {}, {}), {}, {}, {}) {}

Dataframe::Dataframe(PartitionGrid grid, std::vector<std::string> row_labels, std::vector<std::string> col_labels,
                     std::vector<Domain> schema) {
    const std::size_t m = grid.rows();
    const std::size_t n = grid.cols();
    if (row_labels.empty()) {
        row_labels = positional_labels(m);
    }
    if (schema.empty()) {
        schema.assign(n, Domain::Unspecified);
    }
    if (row_labels.size() != m || col_labels.size() != n || schema.size() != n) {
        fail(ErrorKind::InvalidArgument, "label or schema length does not match the grid");
    }
    grid_ = std::make_shared<const PartitionGrid>(std::move(grid));
    row_labels_ = std::make_shared<const std::vector<std::string>>(std::move(row_labels));
    col_labels_ = std::make_shared<const std::vector<std::string>>(std::move(col_labels));
    schema_ = std::make_shared<const std::vector<Domain>>(std::move(schema));
    label_index_ = std::make_shared<LabelIndex>();
}

auto Dataframe::from_rows(const std::vector<std::vector<CellValue>>& rows, std::vector<std::string> col_labels,
                          std::vector<std::string> row_labels, std::vector<Domain> schema, BlockShape shape)
    -> Dataframe {
    const std::size_t n = col_labels.size();
    std::vector<CellValue> cells;
    cells.reserve(rows.size() * n);
    for (const auto& r : rows) {
        if (r.size() != n) {
            fail(ErrorKind::ArityMismatch, "row has " + std::to_string(r.size()) + " cells, expected " + std::to_string(n));
        }
        cells.insert(cells.end(), r.begin(), r.end());
    }
    return Dataframe(PartitionGrid::from_row_major(rows.size(), n, std::move(cells), shape), std::move(row_labels),
                     std::move(col_labels), std::move(schema));
}

auto Dataframe::from_text(const std::vector<std::vector<std::string>>& rows, std::vector<std::string> col_labels,
                          std::vector<std::string> row_labels, BlockShape shape) -> Dataframe {
    std::vector<std::vector<CellValue>> cells;
    cells.reserve(rows.size());
    for (const auto& r : rows) {
        std::vector<CellValue> out;
        out.reserve(r.size());
        for (const auto& s : r) {
            out.push_back(CellValue::raw(s));
        }
        cells.push_back(std::move(out));
    }
    return from_rows(cells, std::move(col_labels), std::move(row_labels), {}, shape);
}

auto Dataframe::row_labels() const -> std::vector<std::string> {
    std::vector<std::string> out;
    out.reserve(rows());
    for (std::size_t i = 0; i < rows(); ++i) {
        out.push_back(row_label(i));
    }
    return out;
}

auto Dataframe::col_labels() const -> std::vector<std::string> {
    std::vector<std::string> out;
    out.reserve(cols());
    for (std::size_t j = 0; j < cols(); ++j) {
        out.push_back(col_label(j));
    }
    return out;
}

auto Dataframe::schema() const -> std::vector<Domain> {
    std::vector<Domain> out;
    out.reserve(cols());
    for (std::size_t j = 0; j < cols(); ++j) {
        out.push_back(domain(j));
    }
    return out;
}

auto Dataframe::row(std::size_t i) const -> std::vector<CellValue> {
    std::vector<CellValue> out;
    out.reserve(cols());
    for (std::size_t j = 0; j < cols(); ++j) {
        out.push_back(at(i, j));
    }
    return out;
}

auto Dataframe::column(std::size_t j) const -> std::vector<CellValue> {
    std::vector<CellValue> out;
    out.reserve(rows());
    for (std::size_t i = 0; i < rows(); ++i) {
        out.push_back(at(i, j));
    }
    return out;
}

auto Dataframe::row_order() const -> std::vector<std::size_t> {
    if (row_order_) {
        return *row_order_;
    }
    std::vector<std::size_t> out(rows());
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
}

namespace {

auto compose(const std::shared_ptr<const std::vector<std::size_t>>& current, std::span<const std::size_t> perm,
             std::size_t extent) -> std::shared_ptr<const std::vector<std::size_t>> {
    if (perm.size() != extent) {
        fail(ErrorKind::InvalidArgument, "permutation length does not match the axis");
    }
    std::vector<bool> seen(extent, false);
    std::vector<std::size_t> out(extent);
    bool identity = true;
    for (std::size_t i = 0; i < extent; ++i) {
        const std::size_t p = perm[i];
        if (p >= extent || seen[p]) {
            fail(ErrorKind::InvalidArgument, "not a permutation");
        }
        seen[p] = true;
        out[i] = current ? (*current)[p] : p;
        identity = identity && out[i] == i;
    }
    if (identity) {
        return nullptr;
    }
    return std::make_shared<const std::vector<std::size_t>>(std::move(out));
}

}  // namespace

auto Dataframe::with_row_permutation(std::span<const std::size_t> perm) const -> Dataframe {
    Dataframe out = *this;
    out.row_order_ = compose(row_order_, perm, rows());
    out.label_index_ = std::make_shared<LabelIndex>();
    if (origin_) {
        std::vector<std::size_t> o(rows());
        for (std::size_t i = 0; i < rows(); ++i) {
            o[i] = (*origin_)[perm[i]];
        }
        out.origin_ = std::make_shared<const std::vector<std::size_t>>(std::move(o));
    }
    return out;
}

auto Dataframe::with_col_permutation(std::span<const std::size_t> perm) const -> Dataframe {
    Dataframe out = *this;
    out.col_order_ = compose(col_order_, perm, cols());
    return out;
}

auto Dataframe::with_col_labels(std::vector<std::string> labels) const -> Dataframe {
    if (labels.size() != cols()) {
        fail(ErrorKind::ArityMismatch, "column label count does not match");
    }
    std::vector<std::string> physical(cols());
    for (std::size_t j = 0; j < cols(); ++j) {
        physical[physical_col(j)] = std::move(labels[j]);
    }
    Dataframe out = *this;
    out.col_labels_ = std::make_shared<const std::vector<std::string>>(std::move(physical));
    return out;
}

auto Dataframe::with_row_labels(std::vector<std::string> labels) const -> Dataframe {
    if (labels.size() != rows()) {
        fail(ErrorKind::ArityMismatch, "row label count does not match");
    }
    std::vector<std::string> physical(rows());
    for (std::size_t i = 0; i < rows(); ++i) {
        physical[physical_row(i)] = std::move(labels[i]);
    }
    Dataframe out = *this;
    out.row_labels_ = std::make_shared<const std::vector<std::string>>(std::move(physical));
    out.label_index_ = std::make_shared<LabelIndex>();
    return out;
}

auto Dataframe::with_schema(std::vector<Domain> schema) const -> Dataframe {
    if (schema.size() != cols()) {
        fail(ErrorKind::ArityMismatch, "schema length does not match");
    }
    std::vector<Domain> physical(cols());
    for (std::size_t j = 0; j < cols(); ++j) {
        physical[physical_col(j)] = schema[j];
    }
    Dataframe out = *this;
    out.schema_ = std::make_shared<const std::vector<Domain>>(std::move(physical));
    return out;
}

auto Dataframe::transposed(const std::optional<std::vector<Domain>>& declared) const -> Dataframe {
    Dataframe out;
    out.grid_ = std::make_shared<const PartitionGrid>(grid_->transposed());
    out.row_labels_ = col_labels_;
    out.col_labels_ = row_labels_;
    out.row_order_ = col_order_;
    out.col_order_ = row_order_;
    out.label_index_ = std::make_shared<LabelIndex>();
    out.schema_ = std::make_shared<const std::vector<Domain>>(rows(), Domain::Unspecified);
    if (declared) {
        if (declared->size() != rows()) {
            fail(ErrorKind::ArityMismatch, "declared schema length does not match transposed arity");
        }
        out = out.with_schema(*declared);
    }
    return out;
}

auto Dataframe::with_origin(std::vector<std::size_t> positions) const -> Dataframe {
    if (positions.size() != rows()) {
        fail(ErrorKind::InvalidArgument, "origin length does not match row count");
    }
    Dataframe out = *this;
    out.origin_ = std::make_shared<const std::vector<std::size_t>>(std::move(positions));
    return out;
}

auto Dataframe::find_rows(const std::string& label) const -> const std::vector<std::size_t>& {
    return label_index_->lookup(*this, label);
}

auto Dataframe::has_label_index() const -> bool { return label_index_->built(); }

auto Dataframe::find_cols(const std::string& label) const -> std::vector<std::size_t> {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < cols(); ++j) {
        if (col_label(j) == label) {
            out.push_back(j);
        }
    }
    return out;
}

auto Dataframe::approx_bytes() const -> std::size_t {
    std::size_t bytes = grid_->approx_bytes();
    for (const auto& l : *row_labels_) {
        bytes += sizeof(std::string) + (l.size() > 15 ? l.size() : 0);
    }
    for (const auto& l : *col_labels_) {
        bytes += sizeof(std::string) + (l.size() > 15 ? l.size() : 0);
    }
    return bytes + (row_order_ ? row_order_->size() * sizeof(std::size_t) : 0) +
           (col_order_ ? col_order_->size() * sizeof(std::size_t) : 0);
}

auto same_data(const Dataframe& a, const Dataframe& b) -> bool {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        return false;
    }
    for (std::size_t i = 0; i < a.rows(); ++i) {
        if (a.row_label(i) != b.row_label(i)) {
            return false;
        }
    }
    for (std::size_t j = 0; j < a.cols(); ++j) {
        if (a.col_label(j) != b.col_label(j)) {
            return false;
        }
    }
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (!(a.at(i, j) == b.at(i, j))) {
                return false;
            }
        }
    }
    return true;
}

auto operator==(const Dataframe& a, const Dataframe& b) -> bool {
    return same_data(a, b) && a.schema() == b.schema();
}

namespace {

auto resolve_rows(const Dataframe& df, const Selector& sel, bool all_matches) -> std::vector<std::size_t> {
    if (const auto* pos = std::get_if<std::size_t>(&sel)) {
        if (*pos >= df.rows()) {
            fail(ErrorKind::IndexOutOfBounds, "row position " + std::to_string(*pos) + " out of range (" +
                                                  std::to_string(df.rows()) + " rows)");
        }
        return {*pos};
    }
    const auto& label = std::get<std::string>(sel);
    const auto& matches = df.find_rows(label);
    if (matches.empty()) {
        fail(ErrorKind::LabelNotFound, "row label '" + label + "' not found");
    }
    if (!all_matches) {
        return {matches.front()};
    }
    return matches;
}

auto resolve_cols(const Dataframe& df, const Selector& sel, bool all_matches) -> std::vector<std::size_t> {
    if (const auto* pos = std::get_if<std::size_t>(&sel)) {
        if (*pos >= df.cols()) {
            fail(ErrorKind::IndexOutOfBounds, "column position " + std::to_string(*pos) + " out of range (" +
                                                  std::to_string(df.cols()) + " columns)");
        }
        return {*pos};
    }
    const auto& label = std::get<std::string>(sel);
    auto matches = df.find_cols(label);
    if (matches.empty()) {
        fail(ErrorKind::LabelNotFound, "column label '" + label + "' not found");
    }
    if (!all_matches) {
        matches.resize(1);
    }
    return matches;
}

}  // namespace

auto point_get(const Dataframe& df, const Selector& row, const Selector& col) -> CellValue {
    const auto i = resolve_rows(df, row, false).front();
    const auto j = resolve_cols(df, col, false).front();
    return df.at(i, j);
}

auto point_set(const Dataframe& df, const Selector& row, const Selector& col, const CellValue& value) -> Dataframe {
    const auto rows = resolve_rows(df, row, true);
    const auto cols = resolve_cols(df, col, true);
    PartitionGrid grid = df.grid();
    for (auto i : rows) {
        for (auto j : cols) {
            grid = grid.with_cell(df.physical_row(i), df.physical_col(j), value);
        }
    }
    // Rebuild over the new grid keeping all metadata and order.
    std::vector<std::string> phys_rows(df.rows());
    std::vector<std::string> phys_cols(df.cols());
    std::vector<Domain> phys_schema(df.cols());
    for (std::size_t i = 0; i < df.rows(); ++i) {
        phys_rows[df.physical_row(i)] = df.row_label(i);
    }
    for (std::size_t j = 0; j < df.cols(); ++j) {
        phys_cols[df.physical_col(j)] = df.col_label(j);
        phys_schema[df.physical_col(j)] = df.domain(j);
    }
    for (auto j : cols) {
        const Domain d = df.domain(j);
        if (d != Domain::Unspecified && !try_parse(value, d)) {
            phys_schema[df.physical_col(j)] = Domain::Unspecified;
        }
    }
    Dataframe out(std::move(grid), std::move(phys_rows), std::move(phys_cols), std::move(phys_schema));
    std::vector<std::size_t> row_perm(df.rows());
    std::vector<std::size_t> col_perm(df.cols());
    for (std::size_t i = 0; i < df.rows(); ++i) {
        row_perm[i] = df.physical_row(i);
    }
    for (std::size_t j = 0; j < df.cols(); ++j) {
        col_perm[j] = df.physical_col(j);
    }
    return out.with_row_permutation(row_perm).with_col_permutation(col_perm);
}

}  // namespace dfk
