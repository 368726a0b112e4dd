#pragma once

// Data-only selection/join predicates. They can reference data columns and
// literals but never a tuple's quality trail.

#include "qtrail/value.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qtrail {

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

// Accepts "=", "==", "!=", "<>", "<", "<=", ">", ">=" and eq/ne/lt/le/gt/ge.
CompareOp parse_compare_op(std::string_view text);
std::string_view compare_op_symbol(CompareOp op);

struct Predicate {
    enum class Kind { True, Compare, And, Or, Not };

    Kind kind = Kind::True;
    CompareOp op = CompareOp::Eq;
    std::string column;
    std::optional<std::string> other_column; // column-to-column comparison
    Value literal;
    std::vector<Predicate> children;

    static Predicate always() { return {}; }
    static Predicate compare(std::string column, CompareOp op, Value literal);
    static Predicate compare_columns(std::string column, CompareOp op, std::string other);
    static Predicate all_of(std::vector<Predicate> parts);
    static Predicate any_of(std::vector<Predicate> parts);
    static Predicate negate(Predicate inner);

    // Every column name referenced anywhere in the tree.
    std::vector<std::string> referenced_columns() const;
};

// Predicate resolved against a schema. Comparisons involving null are false.
class BoundPredicate {
public:
    // PlanError on unknown columns or text/number comparisons.
    BoundPredicate(const Predicate &pred, const Schema &schema);

    bool matches(const Row &row) const;
    // Evaluates against the concatenation left ++ right without building it.
    bool matches(const Row &left, const Row &right) const;

    // Top-level conjuncts "left column = right column" usable as hash keys,
    // given the arity of the left side. Pairs are (left index, right index).
    std::vector<std::pair<std::size_t, std::size_t>> equi_keys(std::size_t left_arity) const;

private:
    struct Node {
        Predicate::Kind kind = Predicate::Kind::True;
        CompareOp op = CompareOp::Eq;
        std::size_t column = 0;
        std::optional<std::size_t> other;
        Value literal;
        std::vector<Node> children;
    };

    static Node bind(const Predicate &pred, const Schema &schema);
    template <typename Get>
    static bool eval(const Node &node, const Get &get);

    Node root_;
};

} // namespace qtrail
