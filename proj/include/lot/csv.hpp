#pragma once

// Minimal RFC-4180 CSV reader: quoted fields, "" escapes, embedded commas
// and newlines, CRLF endings, optional UTF-8 BOM. Enough for the VAST
// distribution files, which quote post text containing both.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lot {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by header name, or -1.
    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return static_cast<int>(i);
        }
        return -1;
    }
};

inline CsvTable parse_csv(const std::string& content, const std::string& origin = "<csv>") {
    CsvTable table;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool record_started = false;

    std::size_t i = 0;
    if (content.size() >= 3 && content.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;

    auto end_field = [&] {
        record.push_back(field);
        field.clear();
        record_started = true;
    };
    auto end_record = [&] {
        end_field();
        if (table.header.empty()) {
            table.header = record;
        } else {
            if (record.size() != table.header.size()) {
                throw std::runtime_error(origin + ": row " + std::to_string(table.rows.size() + 1) +
                                         " has " + std::to_string(record.size()) + " fields, header has " +
                                         std::to_string(table.header.size()));
            }
            table.rows.push_back(record);
        }
        record.clear();
        record_started = false;
    };

    for (; i < content.size(); ++i) {
        char c = content[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                record_started = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (i + 1 < content.size() && content[i + 1] == '\n') break; // consumed by \n
                if (!record_started && record.empty()) break;                // blank line
                end_record();
                break;
            case '\n':
                if (!record_started && record.empty()) break; // blank line
                end_record();
                break;
            default:
                field.push_back(c);
                record_started = true;
        }
    }
    if (in_quotes) throw std::runtime_error(origin + ": unterminated quoted field");
    if (record_started || !record.empty() || !field.empty()) end_record();
    return table;
}

inline CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path);
}

} // namespace lot
