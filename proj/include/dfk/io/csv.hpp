#pragma once

#include <dfk/core/dataframe.hpp>

#include <string>
#include <string_view>

namespace dfk::io {

struct CsvOptions {
    /// Column 0 holds the row labels (its header field is ignored on read).
    bool has_row_labels = false;
    char delimiter = ',';
    /// Reject a quote character inside an unquoted field.
    bool strict_quoting = true;
    /// Induce every column's domain while scanning (single pass).
    bool fuse_induction = false;
    BlockShape shape{};
};

auto parse_csv(std::string_view text, const CsvOptions& opts = {}) -> Dataframe;
auto read_csv(const std::string& path, const CsvOptions& opts = {}) -> Dataframe;

/// Writes raw text; row labels go to column 0 when `has_row_labels` is set.
auto format_csv(const Dataframe& df, const CsvOptions& opts = {}) -> std::string;
void write_csv(const Dataframe& df, const std::string& path, const CsvOptions& opts = {});

}  // namespace dfk::io
