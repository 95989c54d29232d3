#include <dfk/io/render.hpp>

#include <algorithm>
#include <vector>

namespace dfk::io {

namespace {

auto display_width(const std::string& s) -> std::size_t {
    std::size_t n = 0;
    for (unsigned char c : s) {
        n += (c & 0xC0) != 0x80 ? 1 : 0;
    }
    return n;
}

auto cell_text(const CellValue& c) -> std::string {
    if (is_null_token(c)) {
        return "NULL";
    }
    if (c.is_composite()) {
        const auto& f = *c.as_composite();
        return "<" + std::to_string(f.rows()) + "x" + std::to_string(f.cols()) + " frame>";
    }
    return c.to_text();
}

struct Line {
    std::string label;
    std::vector<std::string> cells;
    bool ellipsis = false;
};

void collect(const Dataframe& df, std::size_t begin, std::size_t end, std::vector<Line>& lines) {
    for (std::size_t i = begin; i < end; ++i) {
        Line line{df.row_label(i), {}, false};
        for (std::size_t j = 0; j < df.cols(); ++j) {
            line.cells.push_back(cell_text(df.at(i, j)));
        }
        lines.push_back(std::move(line));
    }
}

auto layout(const std::vector<std::string>& header, const std::vector<Line>& lines) -> std::string {
    std::size_t label_w = 0;
    std::vector<std::size_t> widths;
    for (const auto& h : header) {
        widths.push_back(display_width(h));
    }
    for (const auto& l : lines) {
        if (l.ellipsis) {
            continue;
        }
        label_w = std::max(label_w, display_width(l.label));
        for (std::size_t j = 0; j < l.cells.size(); ++j) {
            widths[j] = std::max(widths[j], display_width(l.cells[j]));
        }
    }
    std::string out;
    auto emit = [&](const std::string& label, const std::vector<std::string>& cells) {
        std::string row = label + std::string(label_w - display_width(label), ' ');
        for (std::size_t j = 0; j < cells.size(); ++j) {
            row += "  ";
            row += std::string(widths[j] - display_width(cells[j]), ' ');
            row += cells[j];
        }
        while (!row.empty() && row.back() == ' ') {
            row.pop_back();
        }
        out += row;
        out += '\n';
    };
    emit("", header);
    for (const auto& l : lines) {
        if (l.ellipsis) {
            out += "...\n";
        } else {
            emit(l.label, l.cells);
        }
    }
    return out;
}

}  // namespace

auto render(const Dataframe& df, std::size_t k) -> std::string {
    const std::size_t m = df.rows();
    std::vector<Line> lines;
    if (m <= 2 * k) {
        collect(df, 0, m, lines);
    } else {
        collect(df, 0, k, lines);
        lines.push_back(Line{{}, {}, true});
        collect(df, m - k, m, lines);
    }
    return layout(df.col_labels(), lines);
}

auto render_split(const Dataframe& head, const Dataframe& tail) -> std::string {
    std::vector<Line> lines;
    collect(head, 0, head.rows(), lines);
    lines.push_back(Line{{}, {}, true});
    collect(tail, 0, tail.rows(), lines);
    return layout(head.col_labels(), lines);
}

}  // namespace dfk::io
