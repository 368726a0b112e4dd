#include "qtrail/algebra.hpp"

#include "qtrail/error.hpp"
#include "qtrail/merge.hpp"

#include <unordered_map>

namespace qtrail {

namespace {

QualityTrail combine(const QualityTrail &a, const QualityTrail &b, const ExecOptions &opts) {
    return opts.propagate_trails ? merge(a, b) : a;
}

Schema concat(const Schema &a, const Schema &b) {
    std::vector<Column> cols = a.columns();
    cols.insert(cols.end(), b.columns().begin(), b.columns().end());
    return Schema(std::move(cols));
}

Row concat(const Row &a, const Row &b) {
    Row out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

// Calls visit(i, j) for every matching (left[i], right[j]) in left-major,
// right-minor order. Uses a hash table on equi-join keys when available.
template <typename Visit>
void for_each_match(const Relation &left, const Relation &right, const BoundPredicate &pred, Visit &&visit) {
    std::vector<std::pair<std::size_t, std::size_t>> keys;
    for (auto [l, r] : pred.equi_keys(left.schema().size())) {
        if (left.schema().column(l).type == right.schema().column(r).type) {
            keys.emplace_back(l, r);
        }
    }
    if (keys.empty()) {
        for (std::size_t i = 0; i < left.size(); ++i) {
            for (std::size_t j = 0; j < right.size(); ++j) {
                if (pred.matches(left.tuples()[i].values, right.tuples()[j].values)) {
                    visit(i, j);
                }
            }
        }
        return;
    }

    auto key_of = [&](const Row &row, bool is_left) -> std::optional<Row> {
        Row key;
        key.reserve(keys.size());
        for (auto [l, r] : keys) {
            const Value &v = row[is_left ? l : r];
            if (v.is_null()) {
                return std::nullopt; // null never joins
            }
            key.push_back(v);
        }
        return key;
    };

    std::unordered_map<Row, std::vector<std::size_t>, RowHash> table;
    for (std::size_t j = 0; j < right.size(); ++j) {
        if (auto key = key_of(right.tuples()[j].values, false)) {
            table[std::move(*key)].push_back(j);
        }
    }
    for (std::size_t i = 0; i < left.size(); ++i) {
        auto key = key_of(left.tuples()[i].values, true);
        if (!key) {
            continue;
        }
        auto it = table.find(*key);
        if (it == table.end()) {
            continue;
        }
        for (std::size_t j : it->second) {
            if (pred.matches(left.tuples()[i].values, right.tuples()[j].values)) {
                visit(i, j);
            }
        }
    }
}

void require_compatible(const Relation &left, const Relation &right, const char *op) {
    if (!left.schema().union_compatible(right.schema())) {
        throw PlanError(std::string(op) + " requires union-compatible inputs");
    }
}

} // namespace

Relation select(const Relation &rel, const Predicate &pred) {
    BoundPredicate bound(pred, rel.schema());
    Relation out(rel.schema());
    for (const auto &t : rel.tuples()) {
        if (bound.matches(t.values)) {
            out.add(t);
        }
    }
    return out;
}

Relation project(const Relation &rel, const std::vector<std::string> &columns) {
    std::vector<std::size_t> idx;
    std::vector<Column> cols;
    for (const auto &name : columns) {
        idx.push_back(rel.schema().resolve(name));
        cols.push_back(rel.schema().column(idx.back()));
    }
    Relation out{Schema(std::move(cols))};
    out.reserve(rel.size());
    for (const auto &t : rel.tuples()) {
        Row row;
        row.reserve(idx.size());
        for (std::size_t i : idx) {
            row.push_back(t.values[i]);
        }
        out.add({std::move(row), t.trail});
    }
    return out;
}

Relation theta_join(const Relation &left, const Relation &right, const Predicate &pred, const ExecOptions &opts) {
    Schema schema = concat(left.schema(), right.schema());
    BoundPredicate bound(pred, schema);
    Relation out(schema);
    for_each_match(left, right, bound, [&](std::size_t i, std::size_t j) {
        const QTuple &r = left.tuples()[i];
        const QTuple &s = right.tuples()[j];
        out.add({concat(r.values, s.values), combine(r.trail, s.trail, opts)});
    });
    return out;
}

Relation cross_product(const Relation &left, const Relation &right, const ExecOptions &opts) {
    return theta_join(left, right, Predicate::always(), opts);
}

Relation natural_join(const Relation &left, const Relation &right, const ExecOptions &opts) {
    const Schema &ls = left.schema();
    const Schema &rs = right.schema();
    std::vector<std::pair<std::size_t, std::size_t>> common;
    std::vector<bool> right_shared(rs.size(), false);
    for (std::size_t i = 0; i < ls.size(); ++i) {
        for (std::size_t j = 0; j < rs.size(); ++j) {
            if (ls.column(i).name == rs.column(j).name) {
                common.emplace_back(i, j);
                right_shared[j] = true;
            }
        }
    }
    if (common.empty()) {
        return cross_product(left, right, opts);
    }

    // Bind the equality conjunction positionally so same-named columns
    // cannot be ambiguous.
    std::vector<Column> probe_cols;
    for (std::size_t i = 0; i < ls.size(); ++i) {
        Column c = ls.column(i);
        c.name = "\x01l" + std::to_string(i);
        probe_cols.push_back(std::move(c));
    }
    for (std::size_t j = 0; j < rs.size(); ++j) {
        Column c = rs.column(j);
        c.name = "\x01r" + std::to_string(j);
        probe_cols.push_back(std::move(c));
    }
    Schema probe(std::move(probe_cols));
    std::vector<Predicate> eqs;
    for (auto [i, j] : common) {
        eqs.push_back(Predicate::compare_columns("\x01l" + std::to_string(i), CompareOp::Eq, "\x01r" + std::to_string(j)));
    }
    BoundPredicate bound(Predicate::all_of(std::move(eqs)), probe);

    std::vector<Column> cols = ls.columns();
    for (std::size_t j = 0; j < rs.size(); ++j) {
        if (!right_shared[j]) {
            cols.push_back(rs.column(j));
        }
    }
    Relation out{Schema(std::move(cols))};
    for_each_match(left, right, bound, [&](std::size_t i, std::size_t j) {
        const QTuple &r = left.tuples()[i];
        const QTuple &s = right.tuples()[j];
        Row row = r.values;
        for (std::size_t k = 0; k < rs.size(); ++k) {
            if (!right_shared[k]) {
                row.push_back(s.values[k]);
            }
        }
        out.add({std::move(row), combine(r.trail, s.trail, opts)});
    });
    return out;
}

Relation outer_join(const Relation &left, const Relation &right, const Predicate &pred, OuterKind kind,
                    const ExecOptions &opts) {
    Schema schema = concat(left.schema(), right.schema());
    BoundPredicate bound(pred, schema);

    std::vector<std::vector<std::size_t>> matches(left.size());
    std::vector<bool> right_matched(right.size(), false);
    for_each_match(left, right, bound, [&](std::size_t i, std::size_t j) {
        matches[i].push_back(j);
        right_matched[j] = true;
    });

    bool keep_left = kind == OuterKind::Left || kind == OuterKind::Full;
    bool keep_right = kind == OuterKind::Right || kind == OuterKind::Full;
    Row left_nulls(left.schema().size());
    Row right_nulls(right.schema().size());

    Relation out(schema);
    for (std::size_t i = 0; i < left.size(); ++i) {
        const QTuple &r = left.tuples()[i];
        if (matches[i].empty()) {
            if (keep_left) {
                out.add({concat(r.values, right_nulls), r.trail});
            }
            continue;
        }
        for (std::size_t j : matches[i]) {
            const QTuple &s = right.tuples()[j];
            out.add({concat(r.values, s.values), combine(r.trail, s.trail, opts)});
        }
    }
    if (keep_right) {
        for (std::size_t j = 0; j < right.size(); ++j) {
            if (!right_matched[j]) {
                const QTuple &s = right.tuples()[j];
                out.add({concat(left_nulls, s.values), s.trail});
            }
        }
    }
    return out;
}

Relation distinct(const Relation &rel, const ExecOptions &opts) {
    std::unordered_map<Row, std::size_t, RowHash> slot;
    std::vector<std::vector<const QualityTrail *>> groups;
    std::vector<const Row *> rows;
    for (const auto &t : rel.tuples()) {
        auto [it, inserted] = slot.try_emplace(t.values, groups.size());
        if (inserted) {
            groups.emplace_back();
            rows.push_back(&t.values);
        }
        groups[it->second].push_back(&t.trail);
    }
    Relation out(rel.schema());
    out.reserve(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        QualityTrail trail =
            opts.propagate_trails ? merge(std::span<const QualityTrail *const>(groups[g])) : *groups[g].front();
        out.add({*rows[g], std::move(trail)});
    }
    return out;
}

namespace {

std::unordered_map<Row, std::size_t, RowHash> index_rows(const Relation &rel) {
    std::unordered_map<Row, std::size_t, RowHash> index;
    for (std::size_t i = 0; i < rel.size(); ++i) {
        index.emplace(rel.tuples()[i].values, i);
    }
    return index;
}

} // namespace

Relation union_of(const Relation &left, const Relation &right, const ExecOptions &opts) {
    require_compatible(left, right, "union");
    Relation l = distinct(left, opts);
    Relation r = distinct(right, opts);
    auto r_index = index_rows(r);
    auto l_index = index_rows(l);
    Relation out(l.schema());
    for (const auto &t : l.tuples()) {
        auto it = r_index.find(t.values);
        if (it != r_index.end()) {
            out.add({t.values, combine(t.trail, r.tuples()[it->second].trail, opts)});
        } else {
            out.add(t);
        }
    }
    for (const auto &t : r.tuples()) {
        if (!l_index.contains(t.values)) {
            out.add(t);
        }
    }
    return out;
}

Relation intersect(const Relation &left, const Relation &right, const ExecOptions &opts) {
    require_compatible(left, right, "intersect");
    Relation l = distinct(left, opts);
    Relation r = distinct(right, opts);
    auto r_index = index_rows(r);
    Relation out(l.schema());
    for (const auto &t : l.tuples()) {
        auto it = r_index.find(t.values);
        if (it != r_index.end()) {
            out.add({t.values, combine(t.trail, r.tuples()[it->second].trail, opts)});
        }
    }
    return out;
}

Relation difference(const Relation &left, const Relation &right, const ExecOptions &opts) {
    require_compatible(left, right, "difference");
    Relation l = distinct(left, opts);
    std::unordered_map<Row, bool, RowHash> in_right;
    for (const auto &t : right.tuples()) {
        in_right.emplace(t.values, true);
    }
    Relation out(l.schema());
    for (const auto &t : l.tuples()) {
        if (!in_right.contains(t.values)) {
            out.add(t);
        }
    }
    return out;
}

} // namespace qtrail
