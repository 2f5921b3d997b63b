#include "csv.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace missddim::csv {

namespace {

std::vector<std::vector<std::string>> parse_records(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        switch (ch) {
            case '"':
                if (field.empty() && !field_started) {
                    in_quotes = true;
                    field_started = true;
                } else {
                    field.push_back(ch);
                }
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') {
                    ++i;
                }
                end_record();
                break;
            case '\n':
                end_record();
                break;
            default:
                field.push_back(ch);
                field_started = true;
                break;
        }
    }
    require(!in_quotes, ErrorCode::io, "CSV ends inside a quoted field");
    if (field_started || !field.empty() || !record.empty()) {
        end_record();
    }
    return records;
}

}  // namespace

Table parse(const std::string& text) {
    auto records = parse_records(text);
    require(!records.empty(), ErrorCode::io, "CSV has no header row");

    Table table;
    table.header = std::move(records.front());
    for (std::size_t i = 1; i < records.size(); ++i) {
        require(records[i].size() == table.header.size(), ErrorCode::io, "CSV row ", i,
                " has ", records[i].size(), " fields, header has ", table.header.size());
        table.rows.push_back(std::move(records[i]));
    }
    return table;
}

Table read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io, "cannot open '", path, "' for reading");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

std::string escape_field(const std::string& field) {
    const bool needs_quotes =
        field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) {
        return field;
    }
    std::string out = "\"";
    for (const char ch : field) {
        if (ch == '"') {
            out += "\"\"";
        } else {
            out.push_back(ch);
        }
    }
    out.push_back('"');
    return out;
}

void write_file(const std::string& path, const Table& table) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::io, "cannot open '", path, "' for writing");
    auto write_record = [&out](const std::vector<std::string>& record) {
        for (std::size_t i = 0; i < record.size(); ++i) {
            if (i > 0) {
                out.put(',');
            }
            out << escape_field(record[i]);
        }
        out.put('\n');
    };
    write_record(table.header);
    for (const auto& row : table.rows) {
        require(row.size() == table.header.size(), ErrorCode::io,
                "CSV row arity does not match header");
        write_record(row);
    }
    require(out.good(), ErrorCode::io, "write failed for '", path, "'");
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::optional<double> parse_double(const std::string& text) {
    if (text.empty()) {
        return std::nullopt;
    }
    const char* begin = text.c_str();
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(begin, &end);
    if (errno == ERANGE || end != begin + text.size()) {
        return std::nullopt;
    }
    return value;
}

}  // namespace missddim::csv
