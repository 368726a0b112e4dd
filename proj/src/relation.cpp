#include "qtrail/relation.hpp"

#include "qtrail/error.hpp"
#include "qtrail/merge.hpp"

#include <algorithm>

namespace qtrail {

void Relation::add(QTuple tuple) {
    if (tuple.values.size() != schema_.size()) {
        throw PlanError("tuple arity " + std::to_string(tuple.values.size()) + " does not match schema arity " +
                        std::to_string(schema_.size()));
    }
    for (std::size_t i = 0; i < tuple.values.size(); ++i) {
        Value &v = tuple.values[i];
        if (v.is_null()) {
            continue;
        }
        ColumnType want = schema_.column(i).type;
        if (want == ColumnType::Real && v.is_integer()) {
            v = Value(static_cast<double>(v.as_integer()));
        }
        if (v.type() != want) {
            throw PlanError("value '" + v.to_string() + "' does not fit " + std::string(column_type_name(want)) +
                            " column '" + schema_.column(i).name + "'");
        }
    }
    tuples_.push_back(std::move(tuple));
}

namespace {

std::string event_free_text(const QualityTrail &trail) {
    std::vector<QualityTransition> stripped(trail.transitions().begin(), trail.transitions().end());
    for (auto &tr : stripped) {
        tr.event.clear();
    }
    return serialize_trail(canonicalize(QualityTrail::from_transitions(std::move(stripped))));
}

} // namespace

std::vector<TupleKey> canonical_multiset(const Relation &rel) {
    std::vector<TupleKey> keys;
    keys.reserve(rel.size());
    for (const auto &t : rel.tuples()) {
        keys.push_back({t.values, event_free_text(t.trail)});
    }
    std::sort(keys.begin(), keys.end(), [](const TupleKey &a, const TupleKey &b) {
        auto c = std::lexicographical_compare_three_way(a.values.begin(), a.values.end(), b.values.begin(),
                                                        b.values.end(), total_order);
        if (c != 0) {
            return c < 0;
        }
        return a.trail < b.trail;
    });
    return keys;
}

bool equivalent(const Relation &a, const Relation &b) {
    return a.schema().union_compatible(b.schema()) && canonical_multiset(a) == canonical_multiset(b);
}

} // namespace qtrail
