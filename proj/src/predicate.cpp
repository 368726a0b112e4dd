#include "qtrail/predicate.hpp"

#include "qtrail/error.hpp"

namespace qtrail {

CompareOp parse_compare_op(std::string_view text) {
    if (text == "=" || text == "==" || text == "eq") return CompareOp::Eq;
    if (text == "!=" || text == "<>" || text == "ne") return CompareOp::Ne;
    if (text == "<" || text == "lt") return CompareOp::Lt;
    if (text == "<=" || text == "le") return CompareOp::Le;
    if (text == ">" || text == "gt") return CompareOp::Gt;
    if (text == ">=" || text == "ge") return CompareOp::Ge;
    throw PlanError("unknown comparison operator '" + std::string(text) + "'");
}

std::string_view compare_op_symbol(CompareOp op) {
    switch (op) {
    case CompareOp::Eq:
        return "=";
    case CompareOp::Ne:
        return "!=";
    case CompareOp::Lt:
        return "<";
    case CompareOp::Le:
        return "<=";
    case CompareOp::Gt:
        return ">";
    case CompareOp::Ge:
        return ">=";
    }
    return "=";
}

Predicate Predicate::compare(std::string column, CompareOp op, Value literal) {
    Predicate p;
    p.kind = Kind::Compare;
    p.op = op;
    p.column = std::move(column);
    p.literal = std::move(literal);
    return p;
}

Predicate Predicate::compare_columns(std::string column, CompareOp op, std::string other) {
    Predicate p;
    p.kind = Kind::Compare;
    p.op = op;
    p.column = std::move(column);
    p.other_column = std::move(other);
    return p;
}

Predicate Predicate::all_of(std::vector<Predicate> parts) {
    Predicate p;
    p.kind = Kind::And;
    p.children = std::move(parts);
    return p;
}

Predicate Predicate::any_of(std::vector<Predicate> parts) {
    Predicate p;
    p.kind = Kind::Or;
    p.children = std::move(parts);
    return p;
}

Predicate Predicate::negate(Predicate inner) {
    Predicate p;
    p.kind = Kind::Not;
    p.children.push_back(std::move(inner));
    return p;
}

std::vector<std::string> Predicate::referenced_columns() const {
    std::vector<std::string> out;
    if (kind == Kind::Compare) {
        out.push_back(column);
        if (other_column) {
            out.push_back(*other_column);
        }
    }
    for (const auto &child : children) {
        auto sub = child.referenced_columns();
        out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
}

namespace {

bool comparable(ColumnType a, ColumnType b) { return (a == ColumnType::Text) == (b == ColumnType::Text); }

bool apply(CompareOp op, std::partial_ordering c) {
    switch (op) {
    case CompareOp::Eq:
        return c == 0;
    case CompareOp::Ne:
        return c != 0;
    case CompareOp::Lt:
        return c < 0;
    case CompareOp::Le:
        return c <= 0;
    case CompareOp::Gt:
        return c > 0;
    case CompareOp::Ge:
        return c >= 0;
    }
    return false;
}

} // namespace

BoundPredicate::Node BoundPredicate::bind(const Predicate &pred, const Schema &schema) {
    Node node;
    node.kind = pred.kind;
    node.op = pred.op;
    switch (pred.kind) {
    case Predicate::Kind::True:
        break;
    case Predicate::Kind::Compare: {
        node.column = schema.resolve(pred.column);
        ColumnType lhs = schema.column(node.column).type;
        if (pred.other_column) {
            node.other = schema.resolve(*pred.other_column);
            if (!comparable(lhs, schema.column(*node.other).type)) {
                throw PlanError("cannot compare " + std::string(column_type_name(lhs)) + " column '" + pred.column +
                                "' with column '" + *pred.other_column + "'");
            }
        } else {
            node.literal = pred.literal;
            if (auto t = pred.literal.type(); t && !comparable(lhs, *t)) {
                throw PlanError("cannot compare " + std::string(column_type_name(lhs)) + " column '" + pred.column +
                                "' with " + std::string(column_type_name(*t)) + " literal");
            }
        }
        break;
    }
    case Predicate::Kind::Not:
        if (pred.children.size() != 1) {
            throw PlanError("'not' takes exactly one operand");
        }
        [[fallthrough]];
    case Predicate::Kind::And:
    case Predicate::Kind::Or:
        for (const auto &child : pred.children) {
            node.children.push_back(bind(child, schema));
        }
        break;
    }
    return node;
}

BoundPredicate::BoundPredicate(const Predicate &pred, const Schema &schema) : root_(bind(pred, schema)) {}

template <typename Get>
bool BoundPredicate::eval(const Node &node, const Get &get) {
    switch (node.kind) {
    case Predicate::Kind::True:
        return true;
    case Predicate::Kind::Compare: {
        const Value &lhs = get(node.column);
        const Value &rhs = node.other ? get(*node.other) : node.literal;
        auto c = compare_values(lhs, rhs);
        return c && apply(node.op, *c);
    }
    case Predicate::Kind::And:
        for (const auto &child : node.children) {
            if (!eval(child, get)) return false;
        }
        return true;
    case Predicate::Kind::Or:
        for (const auto &child : node.children) {
            if (eval(child, get)) return true;
        }
        return false;
    case Predicate::Kind::Not:
        return !eval(node.children.front(), get);
    }
    return false;
}

bool BoundPredicate::matches(const Row &row) const {
    return eval(root_, [&](std::size_t i) -> const Value & { return row[i]; });
}

bool BoundPredicate::matches(const Row &left, const Row &right) const {
    return eval(root_, [&](std::size_t i) -> const Value & {
        return i < left.size() ? left[i] : right[i - left.size()];
    });
}

std::vector<std::pair<std::size_t, std::size_t>> BoundPredicate::equi_keys(std::size_t left_arity) const {
    std::vector<std::pair<std::size_t, std::size_t>> keys;
    auto consider = [&](const Node &n) {
        if (n.kind != Predicate::Kind::Compare || n.op != CompareOp::Eq || !n.other) {
            return;
        }
        std::size_t a = n.column;
        std::size_t b = *n.other;
        if (a < left_arity && b >= left_arity) {
            keys.emplace_back(a, b - left_arity);
        } else if (b < left_arity && a >= left_arity) {
            keys.emplace_back(b, a - left_arity);
        }
    };
    if (root_.kind == Predicate::Kind::And) {
        for (const auto &child : root_.children) {
            consider(child);
        }
    } else {
        consider(root_);
    }
    return keys;
}

} // namespace qtrail
