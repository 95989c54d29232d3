#include <dfk/io/csv.hpp>

#include <dfk/core/counters.hpp>
#include <dfk/core/error.hpp>
#include <dfk/core/schema.hpp>

#include <fstream>
#include <sstream>

namespace dfk::io {

namespace {

struct Reader {
    std::string_view text;
    const CsvOptions& opts;
    std::size_t pos = 0;
    std::size_t line = 1;

    [[nodiscard]] auto done() const -> bool { return pos >= text.size(); }

    [[noreturn]] void quote_error(const std::string& what) const {
        fail(ErrorKind::QuoteError, what + " on line " + std::to_string(line));
    }

    // Consumes one record including its terminator.
    auto record() -> std::vector<std::string> {
        std::vector<std::string> fields;
        std::string field;
        while (true) {
            if (!done() && text[pos] == '"') {
                ++pos;
                while (true) {
                    if (done()) {
                        quote_error("unterminated quoted field");
                    }
                    const char c = text[pos++];
                    if (c == '"') {
                        if (!done() && text[pos] == '"') {
                            field += '"';
                            ++pos;
                            continue;
                        }
                        break;
                    }
                    if (c == '\n' || c == '\r') {
                        quote_error("record separator inside quoted field");
                    }
                    field += c;
                }
                if (!done() && text[pos] != opts.delimiter && text[pos] != '\n' && text[pos] != '\r') {
                    quote_error("text after closing quote");
                }
            } else {
                while (!done() && text[pos] != opts.delimiter && text[pos] != '\n' &&
                       !(text[pos] == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n')) {
                    if (text[pos] == '"' && opts.strict_quoting) {
                        quote_error("quote inside unquoted field");
                    }
                    field += text[pos++];
                }
            }
            fields.push_back(std::move(field));
            field.clear();
            if (done()) {
                return fields;
            }
            const char c = text[pos++];
            if (c == opts.delimiter) {
                continue;
            }
            if (c == '\r') {
                ++pos;
            }
            ++line;
            return fields;
        }
    }
};

}  // namespace

auto parse_csv(std::string_view text, const CsvOptions& opts) -> Dataframe {
    Reader reader{text, opts};
    if (reader.done()) {
        return Dataframe::from_rows({}, {});
    }
    auto header = reader.record();
    if (opts.has_row_labels) {
        header.erase(header.begin());
    }
    const std::size_t width = header.size() + (opts.has_row_labels ? 1 : 0);
    std::vector<CellValue> cells;
    std::vector<std::string> row_labels;
    std::size_t rows = 0;
    while (!reader.done()) {
        const std::size_t line = reader.line;
        auto fields = reader.record();
        if (fields.size() != width) {
            fail(ErrorKind::RaggedRow, "line " + std::to_string(line) + " has " + std::to_string(fields.size()) +
                                           " fields, expected " + std::to_string(width));
        }
        std::size_t j = 0;
        if (opts.has_row_labels) {
            row_labels.push_back(std::move(fields[0]));
            j = 1;
        }
        for (; j < fields.size(); ++j) {
            cells.push_back(CellValue::raw(std::move(fields[j])));
        }
        ++rows;
    }
    const std::size_t cols = header.size();
    counters().cells_scanned.fetch_add(rows * cols, std::memory_order_relaxed);
    std::vector<Domain> schema(cols, Domain::Unspecified);
    if (opts.fuse_induction) {
        // Accumulators observe the cells as they sit in the scan buffer, so
        // the whole read is one pass.
        std::vector<SchemaAccumulator> acc(cols);
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t c = 0; c < cols; ++c) {
                acc[c].observe(cells[i * cols + c]);
            }
        }
        counters().s_invocations.fetch_add(cols, std::memory_order_relaxed);
        for (std::size_t c = 0; c < cols; ++c) {
            schema[c] = acc[c].result();
        }
    }
    if (!opts.has_row_labels) {
        row_labels = positional_labels(rows);
    }
    auto grid = PartitionGrid::from_row_major(rows, cols, std::move(cells), opts.shape);
    return Dataframe(std::move(grid), std::move(row_labels), std::move(header), std::move(schema));
}

auto read_csv(const std::string& path, const CsvOptions& opts) -> Dataframe {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::Io, "cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), opts);
}

namespace {

void put_field(std::string& out, const std::string& field, char delimiter, bool lone) {
    if (field.find_first_of("\r\n") != std::string::npos) {
        fail(ErrorKind::QuoteError, "field with a line break cannot be written");
    }
    const bool quote = field.find(delimiter) != std::string::npos || field.find('"') != std::string::npos ||
                       (lone && field.empty());
    if (!quote) {
        out += field;
        return;
    }
    out += '"';
    for (char c : field) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
}

}  // namespace

auto format_csv(const Dataframe& df, const CsvOptions& opts) -> std::string {
    std::string out;
    const std::size_t width = df.cols() + (opts.has_row_labels ? 1 : 0);
    auto line = [&](auto&& field_at) {
        for (std::size_t j = 0; j < width; ++j) {
            if (j > 0) {
                out += opts.delimiter;
            }
            put_field(out, field_at(j), opts.delimiter, width == 1);
        }
        out += '\n';
    };
    const std::size_t shift = opts.has_row_labels ? 1 : 0;
    line([&](std::size_t j) -> std::string { return j < shift ? std::string() : df.col_label(j - shift); });
    for (std::size_t i = 0; i < df.rows(); ++i) {
        line([&](std::size_t j) -> std::string { return j < shift ? df.row_label(i) : df.at(i, j - shift).to_text(); });
    }
    return out;
}

void write_csv(const Dataframe& df, const std::string& path, const CsvOptions& opts) {
    const auto text = format_csv(df, opts);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(ErrorKind::Io, "cannot write '" + path + "'");
    }
    out << text;
}

}  // namespace dfk::io
