#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qtrail {

enum class ColumnType { Integer, Real, Text };

std::string_view column_type_name(ColumnType type);
ColumnType parse_column_type(std::string_view name);

// A data cell: null, integer, real or text.
class Value {
public:
    Value() = default;
    Value(std::int64_t v) : data_(v) {}
    Value(int v) : data_(static_cast<std::int64_t>(v)) {}
    Value(double v) : data_(v) {}
    Value(std::string v) : data_(std::move(v)) {}
    Value(const char *v) : data_(std::string(v)) {}

    static Value null() { return {}; }

    bool is_null() const { return std::holds_alternative<std::monostate>(data_); }
    bool is_integer() const { return std::holds_alternative<std::int64_t>(data_); }
    bool is_real() const { return std::holds_alternative<double>(data_); }
    bool is_text() const { return std::holds_alternative<std::string>(data_); }
    bool is_numeric() const { return is_integer() || is_real(); }

    std::int64_t as_integer() const { return std::get<std::int64_t>(data_); }
    double as_real() const { return std::get<double>(data_); }
    const std::string &as_text() const { return std::get<std::string>(data_); }
    // Integer or real widened to double.
    double as_number() const { return is_integer() ? static_cast<double>(as_integer()) : as_real(); }

    // Null for nulls, otherwise the natural column type.
    std::optional<ColumnType> type() const;

    // Human-readable form; null prints as "NULL".
    std::string to_string() const;

    // Identity equality: null == null, no numeric widening. Used for
    // grouping, distinct and set membership.
    friend bool operator==(const Value &, const Value &) = default;

    std::size_t hash() const;

private:
    std::variant<std::monostate, std::int64_t, double, std::string> data_;
};

// SQL-style comparison: nullopt when either side is null or the types are
// not comparable (text vs number).
std::optional<std::partial_ordering> compare_values(const Value &a, const Value &b);

// Total order for sorting rows: null < numbers < text.
std::strong_ordering total_order(const Value &a, const Value &b);

struct ValueHasher {
    std::size_t operator()(const Value &v) const { return v.hash(); }
};

using Row = std::vector<Value>;

struct RowHash {
    std::size_t operator()(const Row &row) const;
};

struct Column {
    std::string name;
    std::string qualifier; // originating table, empty for derived columns
    ColumnType type = ColumnType::Text;

    friend bool operator==(const Column &, const Column &) = default;
};

class Schema {
public:
    Schema() = default;
    explicit Schema(std::vector<Column> columns) : columns_(std::move(columns)) {}

    std::size_t size() const { return columns_.size(); }
    const Column &column(std::size_t i) const { return columns_.at(i); }
    const std::vector<Column> &columns() const { return columns_; }

    // Resolves "name" or "qualifier.name". PlanError if unknown or ambiguous.
    std::size_t resolve(std::string_view ref) const;
    std::optional<std::size_t> find(std::string_view ref) const;

    // Column name, qualified only when the bare name would be ambiguous.
    std::string display_name(std::size_t i) const;

    Schema with_qualifier(const std::string &qualifier) const;

    // Same arity and column types.
    bool union_compatible(const Schema &other) const;

    friend bool operator==(const Schema &, const Schema &) = default;

private:
    std::vector<Column> columns_;
};

} // namespace qtrail
