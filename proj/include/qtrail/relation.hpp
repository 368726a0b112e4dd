#pragma once

#include "qtrail/trail.hpp"
#include "qtrail/value.hpp"

#include <string>
#include <vector>

namespace qtrail {

// A data row plus exactly one quality trail.
struct QTuple {
    Row values;
    QualityTrail trail;

    friend bool operator==(const QTuple &, const QTuple &) = default;
};

// Ordered multiset of tuples conforming to a schema.
class Relation {
public:
    Relation() = default;
    explicit Relation(Schema schema) : schema_(std::move(schema)) {}

    const Schema &schema() const { return schema_; }
    const std::vector<QTuple> &tuples() const { return tuples_; }
    std::size_t size() const { return tuples_.size(); }
    bool empty() const { return tuples_.empty(); }

    // Checks arity and per-column types; integers are widened in real
    // columns. Throws PlanError on mismatch.
    void add(QTuple tuple);
    void reserve(std::size_t n) { tuples_.reserve(n); }
    void set_trail(std::size_t index, QualityTrail trail) { tuples_.at(index).trail = std::move(trail); }

    friend bool operator==(const Relation &, const Relation &) = default;

private:
    Schema schema_;
    std::vector<QTuple> tuples_;
};

// Canonical, event-free identity of a tuple: data row plus canonical trail text.
struct TupleKey {
    Row values;
    std::string trail;

    friend bool operator==(const TupleKey &, const TupleKey &) = default;
};

// Sorted multiset of tuple keys; two relations are result-equivalent when
// these compare equal.
std::vector<TupleKey> canonical_multiset(const Relation &rel);
bool equivalent(const Relation &a, const Relation &b);

} // namespace qtrail
