#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace loyalty::csv {

using Row = std::vector<std::string>;

// Parses RFC 4180 style CSV: comma separated, fields optionally enclosed in
// double quotes, "" as an escaped quote, quoted fields may span lines. CRLF
// and LF line endings are both accepted. A UTF-8 byte-order mark is skipped.
// Throws DataError on an unterminated quoted field.
std::vector<Row> parse(std::string_view text);

std::vector<Row> read_file(const std::string& path);

// Quotes a field only when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const Row& row);

}  // namespace loyalty::csv
