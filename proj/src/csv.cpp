#include "qtrail/csv.hpp"

#include "qtrail/error.hpp"

namespace qtrail::csv {

std::optional<Record> Reader::next() {
    int c = in_.peek();
    if (c == std::char_traits<char>::eof()) {
        return std::nullopt;
    }
    record_line_ = line_;
    Record record;
    Field field;
    bool in_quotes = false;
    bool after_quote = false; // closing quote seen, expecting delimiter
    while (true) {
        c = in_.get();
        if (c == std::char_traits<char>::eof()) {
            if (in_quotes) {
                throw ParseError("unterminated quoted field starting on line " + std::to_string(record_line_),
                                 record_line_);
            }
            record.push_back(std::move(field));
            return record;
        }
        char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field.text.push_back('"');
                } else {
                    in_quotes = false;
                    after_quote = true;
                }
            } else {
                if (ch == '\n') {
                    ++line_;
                }
                field.text.push_back(ch);
            }
            continue;
        }
        if (ch == ',') {
            record.push_back(std::move(field));
            field = Field{};
            after_quote = false;
        } else if (ch == '\n' || ch == '\r') {
            if (ch == '\r' && in_.peek() == '\n') {
                in_.get();
            }
            ++line_;
            record.push_back(std::move(field));
            return record;
        } else if (ch == '"' && field.text.empty() && !field.quoted) {
            in_quotes = true;
            field.quoted = true;
        } else if (after_quote) {
            throw ParseError("unexpected character after closing quote on line " + std::to_string(line_), line_);
        } else {
            field.text.push_back(ch);
        }
    }
}

std::string escape(std::string_view text, bool force_quote) {
    bool quote = force_quote || text.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!quote) {
        return std::string(text);
    }
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_record(std::ostream &out, const std::vector<std::string> &escaped_fields) {
    for (std::size_t i = 0; i < escaped_fields.size(); ++i) {
        if (i > 0) {
            out << ',';
        }
        out << escaped_fields[i];
    }
    out << '\n';
}

} // namespace qtrail::csv
