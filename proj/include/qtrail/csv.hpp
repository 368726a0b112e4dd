#pragma once

// Minimal RFC 4180 reader/writer. The reader remembers whether each field
// was quoted: an unquoted empty field is a null, a quoted one an empty string.

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace qtrail::csv {

struct Field {
    std::string text;
    bool quoted = false;
};

using Record = std::vector<Field>;

class Reader {
public:
    explicit Reader(std::istream &in) : in_(in) {}

    // nullopt at end of input. ParseError on an unterminated quote.
    std::optional<Record> next();

    // 1-based line on which the last returned record started.
    std::size_t line() const { return record_line_; }

private:
    std::istream &in_;
    std::size_t line_ = 1;
    std::size_t record_line_ = 0;
};

// Quotes when forced or when the text contains a delimiter, quote, CR/LF.
std::string escape(std::string_view text, bool force_quote = false);

void write_record(std::ostream &out, const std::vector<std::string> &escaped_fields);

} // namespace qtrail::csv
