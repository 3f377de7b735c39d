#pragma once

#include <istream>
#include <string>
#include <vector>

namespace prism::eval {

using CsvRow = std::vector<std::string>;

/// RFC 4180 reader: quoted fields, doubled quotes, embedded newlines, CRLF.
/// Throws ParseError on an unterminated quote.
std::vector<CsvRow> read_csv(std::istream& in);

/// Quotes a field when it contains a comma, quote or newline.
std::string csv_escape(const std::string& field);

}  // namespace prism::eval
