#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace optpolicy::csv {

/// A header plus string cells; rows may be ragged only if the input was.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of `name` in the header, or -1.
    int column(std::string_view name) const;
};

/// RFC-4180 parsing: comma separator, double-quote quoting with "" escapes,
/// CRLF or LF record terminators. A leading UTF-8 BOM is skipped.
Table parse(std::string_view text);
Table read_file(const std::string& path);

/// Quotes a field only when it contains a comma, quote, CR or LF.
std::string quote(std::string_view field);
void write(std::ostream& out, const Table& table);
void write_file(const std::string& path, const Table& table);

}  // namespace optpolicy::csv
