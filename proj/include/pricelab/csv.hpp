#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "pricelab/error.hpp"

namespace pricelab::csv {

struct Row {
    std::size_t line = 0; // 1-based line where the row starts
    std::vector<std::string> fields;
};

// RFC 4180 reader: quoted fields may contain separators, doubled quotes and
// newlines. A trailing '\r' before a newline is dropped.
class Reader {
public:
    explicit Reader(std::istream& in, char separator = ',') : in_(in), sep_(separator) {}

    bool next(Row& row) {
        row.fields.clear();
        int c = in_.get();
        if (c == EOF) return false;
        ++line_;
        row.line = line_;
        std::string field;
        bool quoted = false;
        bool was_quoted = false;
        for (;; c = in_.get()) {
            if (c == EOF) {
                if (quoted) throw DataError("unterminated quoted field starting on line " + std::to_string(row.line));
                break;
            }
            char ch = static_cast<char>(c);
            if (quoted) {
                if (ch == '"') {
                    if (in_.peek() == '"') {
                        field += '"';
                        in_.get();
                    } else {
                        quoted = false;
                    }
                } else {
                    if (ch == '\n') ++line_;
                    field += ch;
                }
                continue;
            }
            if (ch == '"' && field.empty() && !was_quoted) {
                quoted = was_quoted = true;
            } else if (ch == sep_) {
                row.fields.push_back(std::move(field));
                field.clear();
                was_quoted = false;
            } else if (ch == '\n') {
                break;
            } else if (ch == '\r' && in_.peek() == '\n') {
                continue;
            } else {
                field += ch;
            }
        }
        row.fields.push_back(std::move(field));
        return true;
    }

private:
    std::istream& in_;
    char sep_;
    std::size_t line_ = 0;
};

inline std::string quote(std::string_view field, char separator = ',') {
    if (field.find_first_of(std::string{separator} + "\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields, char separator = ',') {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << separator;
        out << quote(fields[i], separator);
    }
    out << '\n';
}

} // namespace pricelab::csv
