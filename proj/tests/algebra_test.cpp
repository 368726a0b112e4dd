#include "qtrail/algebra.hpp"
#include "qtrail/error.hpp"
#include "qtrail/merge.hpp"

#include "support/generators.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace qtrail;
using namespace qtrail::testing;

namespace {

Relation people() {
    Relation rel(Schema({{"id", "p", ColumnType::Integer},
                         {"name", "p", ColumnType::Text},
                         {"age", "p", ColumnType::Integer}}));
    rel.add({{Value(1), Value("ann"), Value(34)}, trail_of({{9, 0}, {4, 10}})});
    rel.add({{Value(2), Value("bob"), Value(27)}, trail_of({{6, 2}})});
    rel.add({{Value(3), Value("cy"), Value::null()}, trail_of({{3, 1}, {8, 4}})});
    return rel;
}

Relation cities() {
    Relation rel(Schema({{"id", "c", ColumnType::Integer}, {"city", "c", ColumnType::Text}}));
    rel.add({{Value(1), Value("oslo")}, trail_of({{7, 3}})});
    rel.add({{Value(1), Value("rome")}, trail_of({{2, 0}, {5, 8}})});
    rel.add({{Value(4), Value("lima")}, trail_of({{10, 0}})});
    return rel;
}

::testing::AssertionResult same_results(const Relation &a, const Relation &b) {
    if (equivalent(a, b)) {
        return ::testing::AssertionSuccess();
    }
    auto describe = [](const Relation &r) {
        std::string out;
        for (const auto &k : canonical_multiset(r)) {
            out += "  ";
            for (const auto &v : k.values) {
                out += v.to_string() + " ";
            }
            out += "| " + k.trail + "\n";
        }
        return out;
    };
    return ::testing::AssertionFailure() << "left:\n" << describe(a) << "right:\n" << describe(b);
}

// Per-row merged trails of a relation's distinct data rows, computed with a
// plain ordered map rather than the engine's hashing.
std::map<std::vector<std::string>, std::pair<Row, QualityTrail>> dedupe_oracle(const Relation &rel) {
    std::map<std::vector<std::string>, std::pair<Row, QualityTrail>> out;
    for (const auto &t : rel.tuples()) {
        std::vector<std::string> key;
        for (const auto &v : t.values) {
            key.push_back(std::to_string(static_cast<int>(v.type().has_value())) + v.to_string());
        }
        auto it = out.find(key);
        if (it == out.end()) {
            out.emplace(key, std::make_pair(t.values, canonicalize(t.trail)));
        } else {
            it->second.second = merge(it->second.second, t.trail);
        }
    }
    return out;
}

Predicate key_eq() { return Predicate::compare_columns("r.k", CompareOp::Eq, "s.k"); }

RelationShape small_shape() {
    RelationShape shape;
    shape.max_rows = 8;
    shape.value_range = 3;
    shape.trail.max_length = 4;
    return shape;
}

} // namespace

// ---------------------------------------------------------------------------
// Selection and projection

TEST(Select, KeepsMatchingTuplesWithTheirTrails) {
    Relation rel = people();
    Relation out = select(rel, Predicate::compare("age", CompareOp::Gt, Value(30)));
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out.tuples()[0], rel.tuples()[0]);
}

TEST(Select, TrueIsIdentityAndEmptyStaysEmpty) {
    Relation rel = people();
    EXPECT_EQ(select(rel, Predicate::always()), rel);
    Relation empty(rel.schema());
    EXPECT_EQ(select(empty, Predicate::compare("age", CompareOp::Gt, Value(30))).size(), 0u);
}

TEST(Select, NullComparisonsAreFalse) {
    Relation rel = people();
    EXPECT_EQ(select(rel, Predicate::compare("age", CompareOp::Ne, Value(0))).size(), 2u);
    EXPECT_EQ(select(rel, Predicate::negate(Predicate::compare("age", CompareOp::Eq, Value(0)))).size(), 3u);
    EXPECT_EQ(select(rel, Predicate::compare("age", CompareOp::Eq, Value::null())).size(), 0u);
}

TEST(Select, BooleanCombinators) {
    Relation rel = people();
    auto young = Predicate::compare("age", CompareOp::Lt, Value(30));
    auto named_ann = Predicate::compare("name", CompareOp::Eq, Value("ann"));
    EXPECT_EQ(select(rel, Predicate::any_of({young, named_ann})).size(), 2u);
    EXPECT_EQ(select(rel, Predicate::all_of({young, named_ann})).size(), 0u);
    EXPECT_EQ(select(rel, Predicate::compare("p.id", CompareOp::Le, Value(2.5))).size(), 2u);
}

TEST(Select, TypeMismatchAndUnknownColumnsArePlanErrors) {
    Relation rel = people();
    EXPECT_THROW(select(rel, Predicate::compare("name", CompareOp::Eq, Value(3))), PlanError);
    EXPECT_THROW(select(rel, Predicate::compare("nope", CompareOp::Eq, Value(3))), PlanError);
    EXPECT_THROW(select(rel, Predicate::compare_columns("name", CompareOp::Eq, "age")), PlanError);
}

TEST(Project, PicksColumnsAndKeepsTrails) {
    Relation rel = people();
    Relation out = project(rel, {"id", "age"});
    ASSERT_EQ(out.schema().size(), 2u);
    EXPECT_EQ(out.schema().column(1).name, "age");
    for (std::size_t i = 0; i < rel.size(); ++i) {
        EXPECT_EQ(out.tuples()[i].values, (Row{rel.tuples()[i].values[0], rel.tuples()[i].values[2]}));
        EXPECT_EQ(out.tuples()[i].trail, rel.tuples()[i].trail);
    }
    EXPECT_EQ(project(rel, {"id", "name", "age"}), rel);
    EXPECT_EQ(project(rel, {"age", "age"}).schema().size(), 2u);
    EXPECT_THROW(project(rel, {"height"}), PlanError);
}

TEST(Project, DuplicateRowsKeepTheirOwnTrails) {
    Relation rel(Schema({{"a", "", ColumnType::Integer}, {"b", "", ColumnType::Integer}}));
    rel.add({{Value(1), Value(2)}, trail_of({{5, 0}})});
    rel.add({{Value(1), Value(3)}, trail_of({{2, 0}})});
    Relation out = project(rel, {"a"});
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out.tuples()[0].trail, trail_of({{5, 0}}));
    EXPECT_EQ(out.tuples()[1].trail, trail_of({{2, 0}}));
}

// ---------------------------------------------------------------------------
// Joins

TEST(Join, ThetaJoinMergesParentTrails) {
    Relation p = people();
    Relation c = cities();
    Relation out = theta_join(p, c, Predicate::compare_columns("p.id", CompareOp::Eq, "c.id"));
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out.tuples()[0].values[4], Value("oslo"));
    EXPECT_EQ(out.tuples()[0].trail, merge(p.tuples()[0].trail, c.tuples()[0].trail));
    EXPECT_EQ(out.tuples()[1].trail, merge(p.tuples()[0].trail, c.tuples()[1].trail));
}

TEST(Join, CrossProductOfSingletons) {
    Relation a(Schema({{"x", "a", ColumnType::Integer}}));
    a.add({{Value(1)}, trail_of({{4, 0}})});
    Relation b(Schema({{"y", "b", ColumnType::Text}}));
    b.add({{Value("q")}, trail_of({{6, 2}})});
    Relation out = cross_product(a, b);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out.tuples()[0].trail, merge(a.tuples()[0].trail, b.tuples()[0].trail));
}

TEST(Join, HashAndNestedLoopAgree) {
    Rng rng(31);
    for (int i = 0; i < 200; ++i) {
        Relation r = random_relation(rng, {}, "r");
        Relation s = random_relation(rng, {}, "s");
        Relation hashed = theta_join(r, s, key_eq());
        // An OR with a false branch hides the equi-key from the hash path.
        Predicate opaque = Predicate::any_of({key_eq(), Predicate::compare("r.k", CompareOp::Lt, Value(-1))});
        Relation looped = theta_join(r, s, opaque);
        ASSERT_EQ(hashed, looped);
    }
}

TEST(Join, TrailsFollowTheJoinLaw) {
    Rng rng(32);
    for (int i = 0; i < 200; ++i) {
        Relation r = random_relation(rng, {}, "r");
        Relation s = random_relation(rng, {}, "s");
        Predicate pred = Predicate::all_of({key_eq(), Predicate::compare_columns("r.v", CompareOp::Le, "s.v")});
        Relation expected(theta_join(Relation(r.schema()), Relation(s.schema()), pred).schema());
        for (const auto &a : r.tuples()) {
            for (const auto &b : s.tuples()) {
                bool match = a.values[0] == b.values[0] && !a.values[1].is_null() && !b.values[1].is_null() &&
                             a.values[1].as_integer() <= b.values[1].as_integer();
                if (match) {
                    Row row = a.values;
                    row.insert(row.end(), b.values.begin(), b.values.end());
                    expected.add({row, merge(a.trail, b.trail)});
                }
            }
        }
        ASSERT_EQ(theta_join(r, s, pred), expected);
    }
}

TEST(Join, NaturalJoinSharesColumnsOnce) {
    Relation p = people();
    Relation c = cities();
    Relation out = natural_join(p, c);
    ASSERT_EQ(out.schema().size(), 4u);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out.tuples()[1].values, (Row{Value(1), Value("ann"), Value(34), Value("rome")}));
    EXPECT_EQ(out.tuples()[1].trail, merge(p.tuples()[0].trail, c.tuples()[1].trail));
}

TEST(Join, NaturalJoinWithoutSharedColumnsIsCrossProduct) {
    Relation a(Schema({{"x", "a", ColumnType::Integer}}));
    a.add({{Value(1)}, trail_of({{4, 0}})});
    a.add({{Value(2)}, trail_of({{3, 0}})});
    Relation b(Schema({{"y", "b", ColumnType::Integer}}));
    b.add({{Value(7)}, trail_of({{6, 2}})});
    EXPECT_EQ(natural_join(a, b), cross_product(a, b));
}

TEST(OuterJoin, UnmatchedTuplesKeepTheirOwnTrail) {
    Relation p = people();
    Relation c = cities();
    Predicate on = Predicate::compare_columns("p.id", CompareOp::Eq, "c.id");

    Relation left = outer_join(p, c, on, OuterKind::Left);
    ASSERT_EQ(left.size(), 4u);
    const QTuple &bob = left.tuples()[2];
    EXPECT_EQ(bob.values, (Row{Value(2), Value("bob"), Value(27), Value::null(), Value::null()}));
    EXPECT_EQ(bob.trail, p.tuples()[1].trail);

    Relation right = outer_join(p, c, on, OuterKind::Right);
    ASSERT_EQ(right.size(), 3u);
    EXPECT_EQ(right.tuples()[2].values,
              (Row{Value::null(), Value::null(), Value::null(), Value(4), Value("lima")}));
    EXPECT_EQ(right.tuples()[2].trail, c.tuples()[2].trail);

    EXPECT_EQ(outer_join(p, c, on, OuterKind::Full).size(), 5u);
}

TEST(OuterJoin, FullJoinOfDisjointRelations) {
    Relation p = people();
    Relation c = cities();
    Predicate never = Predicate::compare("p.id", CompareOp::Lt, Value(-100));
    Relation out = outer_join(p, c, never, OuterKind::Full);
    ASSERT_EQ(out.size(), p.size() + c.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        EXPECT_EQ(out.tuples()[i].trail, p.tuples()[i].trail);
    }
    for (std::size_t j = 0; j < c.size(); ++j) {
        EXPECT_EQ(out.tuples()[p.size() + j].trail, c.tuples()[j].trail);
    }
}

TEST(OuterJoin, MatchedRowsEqualInnerJoin) {
    Rng rng(33);
    for (int i = 0; i < 200; ++i) {
        Relation r = random_relation(rng, {}, "r");
        Relation s = random_relation(rng, {}, "s");
        Relation inner = theta_join(r, s, key_eq());
        for (OuterKind kind : {OuterKind::Left, OuterKind::Right, OuterKind::Full}) {
            Relation outer = outer_join(r, s, key_eq(), kind);
            Relation matched(outer.schema());
            std::size_t padded = 0;
            for (const auto &t : outer.tuples()) {
                bool left_null = t.values[0].is_null();
                bool right_null = t.values[3].is_null();
                if (!left_null && !right_null) {
                    matched.add(t);
                } else {
                    ++padded;
                }
            }
            ASSERT_TRUE(same_results(matched, inner));
            std::size_t expected_padded = 0;
            if (kind != OuterKind::Right) {
                for (const auto &a : r.tuples()) {
                    bool any = std::any_of(s.tuples().begin(), s.tuples().end(),
                                           [&](const QTuple &b) { return a.values[0] == b.values[0]; });
                    expected_padded += any ? 0 : 1;
                }
            }
            if (kind != OuterKind::Left) {
                for (const auto &b : s.tuples()) {
                    bool any = std::any_of(r.tuples().begin(), r.tuples().end(),
                                           [&](const QTuple &a) { return a.values[0] == b.values[0]; });
                    expected_padded += any ? 0 : 1;
                }
            }
            ASSERT_EQ(padded, expected_padded);
        }
    }
}

// ---------------------------------------------------------------------------
// Set operators and duplicate elimination

TEST(SetOps, IntersectMergesBothSides) {
    Relation r(small_schema("r"));
    Relation s(small_schema("s"));
    r.add({{Value(1), Value(2), Value("a")}, trail_of({{6, 0}})});
    s.add({{Value(1), Value(2), Value("a")}, trail_of({{4, 3}})});
    s.add({{Value(9), Value(9), Value("z")}, trail_of({{4, 3}})});
    Relation out = intersect(r, s);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out.tuples()[0].trail, merge(r.tuples()[0].trail, s.tuples()[0].trail));
}

TEST(SetOps, DifferenceWithEmptyRightIsDistinctLeft) {
    Relation r(small_schema("r"));
    r.add({{Value(1), Value(2), Value("a")}, trail_of({{6, 0}, {2, 5}})});
    r.add({{Value(2), Value(2), Value("b")}, trail_of({{3, 1}})});
    Relation out = difference(r, Relation(small_schema("s")));
    EXPECT_TRUE(same_results(out, r));
}

TEST(SetOps, UnionOfIdenticalSingletonsDoublesStats) {
    Relation r(small_schema("r"));
    r.add({{Value(1), Value(2), Value("a")}, trail_of({{6, 0}})});
    Relation out = union_of(r, r);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out.tuples()[0].trail.back().stats, (TransitionStats{6, 6, 12, 2}));
}

TEST(SetOps, IncompatibleSchemasAreRejected) {
    Relation r(small_schema("r"));
    Relation other(Schema({{"x", "", ColumnType::Integer}}));
    EXPECT_THROW(union_of(r, other), PlanError);
    EXPECT_THROW(intersect(r, other), PlanError);
    EXPECT_THROW(difference(r, other), PlanError);
}

// Each output row's trail is checked against the branch its membership
// selects: in both inputs → merged, in one → that side's own trail.
TEST(SetOps, CaseAnalysisAgainstBruteForce) {
    Rng rng(34);
    for (int i = 0; i < 300; ++i) {
        Relation r = random_relation(rng, small_shape(), "r");
        Relation s = random_relation(rng, small_shape(), "s");
        auto dr = dedupe_oracle(r);
        auto ds = dedupe_oracle(s);

        Relation u_expected(r.schema());
        Relation i_expected(r.schema());
        Relation d_expected(r.schema());
        for (const auto &[key, entry] : dr) {
            auto other = ds.find(key);
            if (other != ds.end()) {
                QualityTrail both = merge(entry.second, other->second.second);
                u_expected.add({entry.first, both});
                i_expected.add({entry.first, both});
            } else {
                u_expected.add({entry.first, entry.second});
                d_expected.add({entry.first, entry.second});
            }
        }
        for (const auto &[key, entry] : ds) {
            if (!dr.contains(key)) {
                u_expected.add({entry.first, entry.second});
            }
        }
        ASSERT_TRUE(same_results(union_of(r, s), u_expected));
        ASSERT_TRUE(same_results(intersect(r, s), i_expected));
        ASSERT_TRUE(same_results(difference(r, s), d_expected));
    }
}

TEST(Distinct, MergesCopiesOfTheSameRow) {
    Relation r(small_schema());
    QualityTrail a = trail_of({{6, 0}, {3, 4}});
    QualityTrail b = trail_of({{5, 2}});
    QualityTrail c = trail_of({{9, 1}, {1, 9}});
    r.add({{Value(1), Value::null(), Value("a")}, a});
    r.add({{Value(2), Value(2), Value("b")}, trail_of({{7, 0}})});
    r.add({{Value(1), Value::null(), Value("a")}, b});
    r.add({{Value(1), Value::null(), Value("a")}, c});
    Relation out = distinct(r);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out.tuples()[0].trail, merge(merge(a, b), c));
    std::vector<QualityTrail> three = {a, b, c};
    EXPECT_TRUE(trails_equal(out.tuples()[0].trail, merge(std::span<const QualityTrail>(three))));
    EXPECT_EQ(out.tuples()[1].trail, trail_of({{7, 0}}));
}

TEST(Distinct, AllDistinctIsIdentityUpToCanonicalForm) {
    Rng rng(35);
    Relation r(small_schema());
    for (int i = 0; i < 10; ++i) {
        r.add({{Value(i), Value(i), Value("x")}, random_trail(rng)});
    }
    EXPECT_TRUE(same_results(distinct(r), r));
}

// ---------------------------------------------------------------------------
// Order insensitivity and rewrites

TEST(OrderInsensitivity, EveryOperator) {
    Rng rng(36);
    RelationShape shape;
    shape.max_rows = 16;
    const Predicate theta = Predicate::all_of({key_eq(), Predicate::compare_columns("r.v", CompareOp::Ge, "s.v")});
    for (int i = 0; i < 100; ++i) {
        Relation r = random_relation(rng, shape, "r");
        Relation s = random_relation(rng, shape, "s");
        Relation r2 = shuffled(r, rng);
        Relation s2 = shuffled(s, rng);
        const Predicate sel = Predicate::compare("v", CompareOp::Ge, Value(2));
        ASSERT_TRUE(same_results(select(r, sel), select(r2, sel)));
        ASSERT_TRUE(same_results(project(r, {"k", "s"}), project(r2, {"k", "s"})));
        ASSERT_TRUE(same_results(theta_join(r, s, theta), theta_join(r2, s2, theta)));
        ASSERT_TRUE(same_results(natural_join(r, s), natural_join(r2, s2)));
        for (OuterKind kind : {OuterKind::Left, OuterKind::Right, OuterKind::Full}) {
            ASSERT_TRUE(same_results(outer_join(r, s, key_eq(), kind), outer_join(r2, s2, key_eq(), kind)));
        }
        ASSERT_TRUE(same_results(union_of(r, s), union_of(r2, s2)));
        ASSERT_TRUE(same_results(intersect(r, s), intersect(r2, s2)));
        ASSERT_TRUE(same_results(difference(r, s), difference(r2, s2)));
        ASSERT_TRUE(same_results(distinct(r), distinct(r2)));
    }
}

TEST(Rewrites, SelectionPushdownThroughJoin) {
    Rng rng(37);
    for (int i = 0; i < 100; ++i) {
        Relation r = random_relation(rng, {}, "r");
        Relation s = random_relation(rng, {}, "s");
        Predicate p = Predicate::compare("r.v", CompareOp::Lt, Value(3));
        ASSERT_TRUE(same_results(select(theta_join(r, s, key_eq()), p), theta_join(select(r, p), s, key_eq())));
    }
}

TEST(Rewrites, SelectionsCommute) {
    Rng rng(38);
    for (int i = 0; i < 100; ++i) {
        Relation r = random_relation(rng);
        Predicate a = Predicate::compare("v", CompareOp::Ge, Value(1));
        Predicate b = Predicate::compare("s", CompareOp::Ne, Value("b"));
        ASSERT_TRUE(same_results(select(select(r, a), b), select(select(r, b), a)));
    }
}

TEST(Propagation, DisabledPropagationForwardsFirstTrail) {
    Relation p = people();
    Relation c = cities();
    ExecOptions off;
    off.propagate_trails = false;
    Relation out = theta_join(p, c, Predicate::compare_columns("p.id", CompareOp::Eq, "c.id"), off);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out.tuples()[0].trail, p.tuples()[0].trail);
}
