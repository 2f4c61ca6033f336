#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "toxtopic/error.hpp"

namespace toxtopic::csv {

struct Record {
    std::size_t line = 0;  // 1-based physical line where the record starts
    std::vector<std::string> fields;
};

// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF, embedded
// newlines inside quotes. A trailing line break does not open a new record.
inline std::vector<Record> parse(std::string_view text) {
    std::vector<Record> records;
    Record current;
    std::string field;
    std::size_t line = 1;
    current.line = 1;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool record_open = false;

    auto end_field = [&] {
        current.fields.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(current));
        current = Record{};
        record_open = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (!record_open) {
            current.line = line;
            record_open = true;
        }
        switch (c) {
            case '"':
                if (!field.empty() || field_was_quoted) {
                    throw ValidationError("csv line " + std::to_string(line) +
                                          ": stray quote inside unquoted field");
                }
                in_quotes = true;
                field_was_quoted = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') break;
                [[fallthrough]];
            case '\n':
                end_record();
                ++line;
                break;
            default:
                if (field_was_quoted) {
                    throw ValidationError("csv line " + std::to_string(line) +
                                          ": characters after closing quote");
                }
                field.push_back(c);
        }
    }
    if (in_quotes) {
        throw ValidationError("csv line " + std::to_string(current.line) +
                              ": unterminated quoted field");
    }
    if (record_open) end_record();
    return records;
}

inline std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline std::string join_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(fields[i]);
    }
    out.push_back('\n');
    return out;
}

}  // namespace toxtopic::csv
