#include "qtrail/error.hpp"
#include "qtrail/trail.hpp"

#include "support/generators.hpp"

#include <gtest/gtest.h>

using namespace qtrail;
using qtrail::testing::trail_of;

TEST(Transition, FreshStatsMirrorScore) {
    auto tr = make_transition(QualityScore(4), Timestamp(1005), "updating a wrong value");
    EXPECT_EQ(tr.score.value(), 4);
    EXPECT_EQ(tr.timestamp.ticks(), 1005u);
    EXPECT_EQ(tr.event, "updating a wrong value");
    EXPECT_EQ(tr.stats, (TransitionStats{4, 4, 4, 1}));

    auto low = make_transition(QualityScore(1), Timestamp(0));
    EXPECT_EQ(low.stats, (TransitionStats{1, 1, 1, 1}));
    EXPECT_TRUE(low.event.empty());
}

TEST(Transition, ScoreOutsideRangeIsRejected) {
    EXPECT_THROW(make_transition(QualityScore(11), Timestamp(0)), DomainError);
    EXPECT_THROW(make_transition(QualityScore(0), Timestamp(0)), DomainError);
    EXPECT_NO_THROW(make_transition(QualityScore(20), Timestamp(0), {}, 20));
}

TEST(Trail, NewTrailHoldsOneTransition) {
    QualityTrail t(make_transition(QualityScore(5), Timestamp(0)));
    EXPECT_EQ(t.size(), 1u);
    EXPECT_EQ(t.quality_at(Timestamp(0))->value(), 5);
}

TEST(Trail, AddTransitionRequiresLaterTimestamp) {
    QualityTrail t(make_transition(QualityScore(5), Timestamp(0)));
    t = t.add_transition(make_transition(QualityScore(3), Timestamp(5)));
    EXPECT_EQ(t, trail_of({{5, 0}, {3, 5}}));
    EXPECT_THROW(t.add_transition(make_transition(QualityScore(4), Timestamp(5))), MonotonicityError);
    EXPECT_THROW(t.add_transition(make_transition(QualityScore(4), Timestamp(2))), MonotonicityError);

    QualityTrail u(make_transition(QualityScore(5), Timestamp(0)));
    u = u.add_transition(make_transition(QualityScore(2), Timestamp(3)));
    u = u.add_transition(make_transition(QualityScore(6), Timestamp(7)));
    EXPECT_EQ(u, trail_of({{5, 0}, {2, 3}, {6, 7}}));
}

TEST(Trail, AddTransitionLeavesOriginalUntouched) {
    QualityTrail t = trail_of({{5, 0}});
    QualityTrail u = t.add_transition(make_transition(QualityScore(3), Timestamp(5)));
    EXPECT_EQ(t.size(), 1u);
    EXPECT_EQ(u.size(), 2u);
}

TEST(Trail, ReplaceTransitionWithinNeighbours) {
    QualityTrail t = trail_of({{5, 0}, {3, 5}, {2, 9}});
    EXPECT_EQ(t.replace_transition(1, make_transition(QualityScore(4), Timestamp(6))),
              trail_of({{5, 0}, {4, 6}, {2, 9}}));
    EXPECT_THROW(t.replace_transition(1, make_transition(QualityScore(4), Timestamp(9))), MonotonicityError);
    EXPECT_THROW(t.replace_transition(1, make_transition(QualityScore(4), Timestamp(0))), MonotonicityError);
    EXPECT_THROW(t.replace_transition(5, make_transition(QualityScore(4), Timestamp(6))), RangeError);
    EXPECT_EQ(t.replace_transition(0, make_transition(QualityScore(1), Timestamp(4))),
              trail_of({{1, 4}, {3, 5}, {2, 9}}));
    EXPECT_EQ(t.replace_transition(2, make_transition(QualityScore(7), Timestamp(100))),
              trail_of({{5, 0}, {3, 5}, {7, 100}}));
}

TEST(Trail, TrimKeepsChosenSide) {
    QualityTrail seven = trail_of({{1, 0}, {2, 1}, {3, 2}, {4, 3}, {5, 4}, {6, 5}, {7, 6}});
    EXPECT_EQ(seven.trim(TrimSide::KeepNewest, 5), trail_of({{3, 2}, {4, 3}, {5, 4}, {6, 5}, {7, 6}}));
    EXPECT_EQ(seven.trim(TrimSide::KeepOldest, 2), trail_of({{1, 0}, {2, 1}}));
    EXPECT_EQ(seven.trim(TrimSide::KeepNewest, 1), trail_of({{7, 6}}));
    QualityTrail three = trail_of({{1, 0}, {2, 1}, {3, 2}});
    EXPECT_EQ(three.trim(TrimSide::KeepNewest, 10), three);
    EXPECT_THROW(three.trim(TrimSide::KeepNewest, 0), DomainError);
}

TEST(Trail, Accessors) {
    QualityTrail t = trail_of({{5, 0}, {3, 5}});
    EXPECT_EQ(t.size(), 2u);
    EXPECT_EQ(t.transition(0), make_transition(QualityScore(5), Timestamp(0)));
    EXPECT_THROW(t.transition(2), RangeError);
    std::vector<QualityTransition> all(t.transitions().begin(), t.transitions().end());
    QualityTrail rebuilt(all[0]);
    rebuilt = rebuilt.add_transition(all[1]);
    EXPECT_EQ(rebuilt, t);
}

TEST(Trail, FromTransitionsValidates) {
    EXPECT_THROW(QualityTrail::from_transitions({}), DomainError);
    std::vector<QualityTransition> bad = {make_transition(QualityScore(2), Timestamp(4)),
                                          make_transition(QualityScore(3), Timestamp(4))};
    EXPECT_THROW(QualityTrail::from_transitions(bad), MonotonicityError);
}

TEST(Trail, StepwiseLookup) {
    QualityTrail t = trail_of({{5, 0}, {3, 5}});
    EXPECT_EQ(t.active_transition_at(Timestamp(4))->score.value(), 5);
    EXPECT_EQ(t.active_transition_at(Timestamp(5))->score.value(), 3);
    EXPECT_FALSE(trail_of({{5, 2}}).active_transition_at(Timestamp(1)).has_value());

    QualityTrail u = trail_of({{5, 0}, {3, 5}, {2, 10}});
    EXPECT_EQ(u.quality_at(Timestamp(7))->value(), 3);
    EXPECT_EQ(u.quality_at(Timestamp(10))->value(), 2);
    EXPECT_EQ(u.quality_at(Timestamp(100))->value(), 2);
}

TEST(Trail, QualityIsPiecewiseConstant) {
    qtrail::testing::Rng rng(11);
    for (int iter = 0; iter < 300; ++iter) {
        QualityTrail t = qtrail::testing::random_trail(rng);
        auto trs = t.transitions();
        for (std::size_t i = 0; i < trs.size(); ++i) {
            std::uint64_t from = trs[i].timestamp.ticks();
            std::uint64_t to = i + 1 < trs.size() ? trs[i + 1].timestamp.ticks() : from + 50;
            for (std::uint64_t x = from; x < to; ++x) {
                ASSERT_EQ(t.quality_at(Timestamp(x))->value(), trs[i].score.value());
            }
        }
        if (trs[0].timestamp.ticks() > 0) {
            ASSERT_FALSE(t.quality_at(Timestamp(trs[0].timestamp.ticks() - 1)).has_value());
        }
    }
}

TEST(Trail, TrimNewestIsSuffix) {
    qtrail::testing::Rng rng(12);
    for (int iter = 0; iter < 300; ++iter) {
        QualityTrail t = qtrail::testing::random_trail(rng, {.max_length = 15});
        std::size_t k = 1 + iter % 12;
        QualityTrail trimmed = t.trim(TrimSide::KeepNewest, k);
        std::size_t keep = std::min(k, t.size());
        ASSERT_EQ(trimmed.size(), keep);
        for (std::size_t i = 0; i < keep; ++i) {
            ASSERT_EQ(trimmed.transition(i), t.transition(t.size() - keep + i));
        }
    }
}

// Random sequences of add/replace/trim: rejected operations leave the trail
// as it was, accepted ones keep timestamps strictly increasing.
TEST(Trail, FuzzedEditsPreserveMonotonicity) {
    qtrail::testing::Rng rng(13);
    std::uniform_int_distribution<int> op(0, 2);
    std::uniform_int_distribution<std::uint64_t> ts(0, 60);
    std::uniform_int_distribution<int> score(1, 10);
    for (int iter = 0; iter < 200; ++iter) {
        QualityTrail t = trail_of({{5, 10}});
        for (int step = 0; step < 40; ++step) {
            QualityTrail before = t;
            try {
                switch (op(rng)) {
                case 0:
                    t = t.add_transition(make_transition(QualityScore(score(rng)), Timestamp(ts(rng))));
                    break;
                case 1:
                    t = t.replace_transition(static_cast<std::size_t>(ts(rng)) % (t.size() + 1),
                                             make_transition(QualityScore(score(rng)), Timestamp(ts(rng))));
                    break;
                default:
                    t = t.trim(rng() % 2 ? TrimSide::KeepNewest : TrimSide::KeepOldest, 1 + rng() % 6);
                    break;
                }
            } catch (const Error &) {
                ASSERT_EQ(t, before);
            }
            ASSERT_GE(t.size(), 1u);
            for (std::size_t i = 1; i < t.size(); ++i) {
                ASSERT_LT(t.transition(i - 1).timestamp, t.transition(i).timestamp);
            }
        }
    }
}

TEST(EngineConfig, Validation) {
    EngineConfig ok;
    EXPECT_NO_THROW(ok.validate());
    EngineConfig bad_quality;
    bad_quality.max_quality = 0;
    EXPECT_THROW(bad_quality.validate(), DomainError);
    EngineConfig bad_buffer;
    bad_buffer.buffer_limit = 0;
    EXPECT_THROW(bad_buffer.validate(), DomainError);
    EngineConfig bad_trim;
    bad_trim.trail_limit = 0;
    EXPECT_THROW(bad_trim.validate(), DomainError);
}

TEST(TrailText, SerializesDocumentedExample) {
    QualityTrail t(make_transition(QualityScore(4), Timestamp(1005), "updating a wrong value"));
    EXPECT_EQ(serialize_trail(t), "4|1005|updating%20a%20wrong%20value|min:4,max:4,sum:4,cnt:1");
    t = t.add_transition(make_transition(QualityScore(3), Timestamp(1010)));
    const std::string text =
        "4|1005|updating%20a%20wrong%20value|min:4,max:4,sum:4,cnt:1;3|1010||min:3,max:3,sum:3,cnt:1";
    EXPECT_EQ(serialize_trail(t), text);
    EXPECT_EQ(parse_trail(text), t);
    EXPECT_EQ(serialize_trail_minimal(t), "4|1005||;3|1010||");
}

TEST(TrailText, ReservedBytesAreEncoded) {
    EXPECT_EQ(percent_encode("a|b;c,d%e f\n\x7f"), "a%7Cb%3Bc%2Cd%25e%20f%0A%7F");
    EXPECT_EQ(percent_decode("a%7Cb%3bc"), "a|b;c");
    QualityTrail t(make_transition(QualityScore(2), Timestamp(3), "x|y;z,%\t\xc3\xa9"));
    EXPECT_EQ(parse_trail(serialize_trail(t)), t);
}

TEST(TrailText, RoundTripsRandomTrails) {
    qtrail::testing::Rng rng(14);
    for (int iter = 0; iter < 1000; ++iter) {
        QualityTrail t = qtrail::testing::random_trail(rng, {.max_length = 12, .with_events = true});
        ASSERT_EQ(parse_trail(serialize_trail(t)), t);
    }
}

TEST(TrailText, MalformedInputReportsPosition) {
    auto position_of = [](std::string_view text) -> std::optional<std::size_t> {
        try {
            parse_trail(text);
        } catch (const ParseError &e) {
            return e.position();
        }
        return std::nullopt;
    };
    EXPECT_TRUE(position_of("4|5|x").has_value());
    EXPECT_EQ(position_of(""), 0u);
    EXPECT_EQ(position_of("x|5||min:1,max:1,sum:1,cnt:1"), 0u);
    EXPECT_EQ(position_of("4|5||min:4,max:4,sum:4,cnt:1;3|5||min:3,max:3,sum:3,cnt:1"), 29u);
    EXPECT_EQ(position_of("4|5|%G1|min:4,max:4,sum:4,cnt:1"), 4u);
    EXPECT_EQ(position_of("4|5|%4|min:4,max:4,sum:4,cnt:1"), 4u);
    EXPECT_TRUE(position_of("11|5||min:4,max:4,sum:4,cnt:1").has_value());
    EXPECT_TRUE(position_of("4|5||min:4,max:4,sum:9,cnt:1").has_value()); // sum above max*count
    EXPECT_TRUE(position_of("4|5||min:4,max:4,sum:4,cnt:1|extra").has_value());
    EXPECT_TRUE(position_of("4|5||min:4,max:4,sum:4,cnt:1;").has_value());
}
