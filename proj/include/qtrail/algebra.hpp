#pragma once

// Quality-annotated relational operators. Selection and projection pass
// trails through untouched; operators that combine tuples (joins, set
// operators, duplicate elimination) derive the output trail with merge().

#include "qtrail/predicate.hpp"
#include "qtrail/relation.hpp"

#include <string>
#include <vector>

namespace qtrail {

struct ExecOptions {
    // When false, operators skip trail derivation and forward the first
    // input's trail. Only used to measure the cost of propagation.
    bool propagate_trails = true;
};

enum class OuterKind { Left, Right, Full };

Relation select(const Relation &rel, const Predicate &pred);

// Bag projection; duplicate output rows keep their own trails.
Relation project(const Relation &rel, const std::vector<std::string> &columns);

Relation theta_join(const Relation &left, const Relation &right, const Predicate &pred,
                    const ExecOptions &opts = {});
Relation cross_product(const Relation &left, const Relation &right, const ExecOptions &opts = {});

// Equality on all same-named columns; shared columns appear once. Without
// shared columns this is the cross product.
Relation natural_join(const Relation &left, const Relation &right, const ExecOptions &opts = {});

// Unmatched preserved tuples are null-padded and keep their own trail.
Relation outer_join(const Relation &left, const Relation &right, const Predicate &pred, OuterKind kind,
                    const ExecOptions &opts = {});

// Set operators deduplicate each input first (see distinct()).
Relation union_of(const Relation &left, const Relation &right, const ExecOptions &opts = {});
Relation intersect(const Relation &left, const Relation &right, const ExecOptions &opts = {});
Relation difference(const Relation &left, const Relation &right, const ExecOptions &opts = {});

// One tuple per distinct data row (null equals null); its trail is the
// merge of the trails of all copies.
Relation distinct(const Relation &rel, const ExecOptions &opts = {});

} // namespace qtrail
