#include "qtrail/value.hpp"

#include "qtrail/error.hpp"

#include <charconv>
#include <cmath>
#include <functional>

namespace qtrail {

std::string_view column_type_name(ColumnType type) {
    switch (type) {
    case ColumnType::Integer:
        return "integer";
    case ColumnType::Real:
        return "real";
    case ColumnType::Text:
        return "text";
    }
    return "text";
}

ColumnType parse_column_type(std::string_view name) {
    if (name == "integer") return ColumnType::Integer;
    if (name == "real") return ColumnType::Real;
    if (name == "text") return ColumnType::Text;
    throw StorageError("unknown column type '" + std::string(name) + "'");
}

std::optional<ColumnType> Value::type() const {
    if (is_integer()) return ColumnType::Integer;
    if (is_real()) return ColumnType::Real;
    if (is_text()) return ColumnType::Text;
    return std::nullopt;
}

std::string Value::to_string() const {
    if (is_null()) {
        return "NULL";
    }
    if (is_integer()) {
        return std::to_string(as_integer());
    }
    if (is_real()) {
        char buf[64];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), as_real());
        std::string out(buf, ptr);
        if (std::isfinite(as_real()) && out.find_first_of(".eE") == std::string::npos) {
            out += ".0";
        }
        return out;
    }
    return as_text();
}

std::size_t Value::hash() const {
    std::size_t seed = data_.index() * 0x9e3779b97f4a7c15ULL;
    std::size_t h = std::visit(
        [](const auto &v) -> std::size_t {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return 0;
            } else {
                return std::hash<T>{}(v);
            }
        },
        data_);
    return seed ^ (h + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::optional<std::partial_ordering> compare_values(const Value &a, const Value &b) {
    if (a.is_null() || b.is_null()) {
        return std::nullopt;
    }
    if (a.is_integer() && b.is_integer()) {
        return a.as_integer() <=> b.as_integer();
    }
    if (a.is_numeric() && b.is_numeric()) {
        return a.as_number() <=> b.as_number();
    }
    if (a.is_text() && b.is_text()) {
        return a.as_text() <=> b.as_text();
    }
    return std::nullopt;
}

std::strong_ordering total_order(const Value &a, const Value &b) {
    auto rank = [](const Value &v) { return v.is_null() ? 0 : v.is_text() ? 2 : 1; };
    if (auto c = rank(a) <=> rank(b); c != 0) {
        return c;
    }
    if (a.is_null()) {
        return std::strong_ordering::equal;
    }
    if (a.is_text()) {
        return a.as_text() <=> b.as_text();
    }
    if (a.is_integer() && b.is_integer()) {
        return a.as_integer() <=> b.as_integer();
    }
    double x = a.as_number();
    double y = b.as_number();
    if (x < y) return std::strong_ordering::less;
    if (y < x) return std::strong_ordering::greater;
    // equal numerically: order integers before reals for a strict total order
    return a.is_integer() == b.is_integer() ? std::strong_ordering::equal
           : a.is_integer()                 ? std::strong_ordering::less
                                            : std::strong_ordering::greater;
}

std::size_t RowHash::operator()(const Row &row) const {
    std::size_t seed = row.size();
    for (const auto &v : row) {
        seed ^= v.hash() + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
    }
    return seed;
}

std::optional<std::size_t> Schema::find(std::string_view ref) const {
    std::optional<std::size_t> hit;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].name == ref) {
            if (hit) {
                throw PlanError("ambiguous column reference '" + std::string(ref) + "'");
            }
            hit = i;
        }
    }
    if (hit) {
        return hit;
    }
    auto dot = ref.rfind('.');
    if (dot == std::string_view::npos) {
        return std::nullopt;
    }
    auto qualifier = ref.substr(0, dot);
    auto name = ref.substr(dot + 1);
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].name == name && columns_[i].qualifier == qualifier) {
            if (hit) {
                throw PlanError("ambiguous column reference '" + std::string(ref) + "'");
            }
            hit = i;
        }
    }
    return hit;
}

std::size_t Schema::resolve(std::string_view ref) const {
    auto hit = find(ref);
    if (!hit) {
        throw PlanError("unknown column '" + std::string(ref) + "'");
    }
    return *hit;
}

std::string Schema::display_name(std::size_t i) const {
    const Column &col = columns_.at(i);
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        if (j != i && columns_[j].name == col.name && !col.qualifier.empty()) {
            return col.qualifier + "." + col.name;
        }
    }
    return col.name;
}

Schema Schema::with_qualifier(const std::string &qualifier) const {
    Schema out = *this;
    for (auto &col : out.columns_) {
        col.qualifier = qualifier;
    }
    return out;
}

bool Schema::union_compatible(const Schema &other) const {
    if (columns_.size() != other.columns_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].type != other.columns_[i].type) {
            return false;
        }
    }
    return true;
}

} // namespace qtrail
