#pragma once

#include <optional>
#include <string>
#include <vector>

namespace missddim::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int columns() const { return static_cast<int>(header.size()); }
};

/// RFC-4180 parse: quoted fields, escaped quotes, embedded separators and
/// newlines, CRLF line endings. Every record must match the header arity.
Table parse(const std::string& text);
Table read_file(const std::string& path);

std::string escape_field(const std::string& field);
void write_file(const std::string& path, const Table& table);

/// Shortest round-trip decimal form, locale-independent. Used everywhere a
/// double reaches a file so reruns are byte-identical.
std::string format_double(double value);

/// Full-string numeric parse; nullopt when the text is not a number.
std::optional<double> parse_double(const std::string& text);

}  // namespace missddim::csv
