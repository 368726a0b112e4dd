#pragma once

// Quality model: transitions, trails and the trail manipulation API.
//
// A trail is a non-empty, strictly time-ordered sequence of transitions with
// stepwise validity: transition i holds over [ts_i, ts_{i+1}) and the last one
// holds from its timestamp onward. All types are immutable values; the
// "mutating" operations return a new trail.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qtrail {

inline constexpr int kDefaultMaxQuality = 10;

class QualityScore {
public:
    constexpr QualityScore() = default;
    constexpr explicit QualityScore(int value) : value_(value) {}

    constexpr int value() const { return value_; }

    friend constexpr auto operator<=>(QualityScore, QualityScore) = default;

private:
    int value_ = 1;
};

// Opaque logical time. Only the ordering is meaningful.
class Timestamp {
public:
    constexpr Timestamp() = default;
    constexpr explicit Timestamp(std::uint64_t ticks) : ticks_(ticks) {}

    constexpr std::uint64_t ticks() const { return ticks_; }

    friend constexpr auto operator<=>(Timestamp, Timestamp) = default;

private:
    std::uint64_t ticks_ = 0;
};

struct TransitionStats {
    int min = 1;
    int max = 1;
    std::int64_t sum = 1;
    std::int64_t count = 1;

    static TransitionStats of(QualityScore score) {
        return {score.value(), score.value(), score.value(), 1};
    }

    double avg() const { return static_cast<double>(sum) / static_cast<double>(count); }

    // min <= max, count >= 1, min*count <= sum <= max*count
    bool valid() const;

    friend bool operator==(const TransitionStats &, const TransitionStats &) = default;
};

struct QualityTransition {
    QualityScore score;
    Timestamp timestamp;
    std::string event; // empty when no triggering event was recorded
    TransitionStats stats;

    friend bool operator==(const QualityTransition &, const QualityTransition &) = default;
};

// Builds a fresh transition whose stats are seeded from the score.
// Throws DomainError when score is outside [1, max_quality].
QualityTransition make_transition(QualityScore score, Timestamp ts, std::string event = {},
                                  int max_quality = kDefaultMaxQuality);

enum class TrimSide { KeepNewest, KeepOldest };

class QualityTrail {
public:
    // trail_new: a trail holding just its initial transition.
    explicit QualityTrail(QualityTransition initial);

    // Validates non-emptiness and strict timestamp order.
    static QualityTrail from_transitions(std::vector<QualityTransition> transitions);

    std::size_t size() const { return transitions_.size(); }
    const QualityTransition &transition(std::size_t index) const;
    std::span<const QualityTransition> transitions() const { return transitions_; }
    const QualityTransition &front() const { return transitions_.front(); }
    const QualityTransition &back() const { return transitions_.back(); }

    // New timestamp must be strictly after the last one (MonotonicityError).
    QualityTrail add_transition(QualityTransition tr) const;

    // Replacement may move the timestamp, but only strictly between its
    // neighbours. RangeError for a bad index, MonotonicityError otherwise.
    QualityTrail replace_transition(std::size_t index, QualityTransition tr) const;

    // Keeps at most k transitions from the chosen side. k = 0 is a DomainError.
    QualityTrail trim(TrimSide side, std::size_t k) const;

    // Last transition with timestamp <= t; nullopt before the trail starts.
    std::optional<QualityTransition> active_transition_at(Timestamp t) const;
    std::optional<QualityScore> quality_at(Timestamp t) const;

    // Index of the transition active at t, or nullopt before the start.
    std::optional<std::size_t> active_index_at(Timestamp t) const;

    friend bool operator==(const QualityTrail &, const QualityTrail &) = default;

private:
    QualityTrail() = default;

    std::vector<QualityTransition> transitions_;
};

struct EngineConfig {
    int max_quality = kDefaultMaxQuality;
    std::optional<std::size_t> trail_limit; // nullopt = unlimited
    std::size_t buffer_limit = std::numeric_limits<std::size_t>::max();
    bool buffer_clean_enabled = true;

    // Throws DomainError when max_quality < 1, buffer_limit < 1 or trail_limit == 0.
    void validate() const;
};

// Text form: transitions joined by ';', each "score|timestamp|event|stats"
// with a percent-encoded event and stats "min:a,max:b,sum:c,cnt:d".
std::string serialize_trail(const QualityTrail &trail);

// Same layout but with an empty event and no stats. Used for storage sizing.
std::string serialize_trail_minimal(const QualityTrail &trail);

// Throws ParseError carrying the byte offset of the first problem.
QualityTrail parse_trail(std::string_view text, int max_quality = kDefaultMaxQuality);

std::string percent_encode(std::string_view raw);
std::string percent_decode(std::string_view encoded);

} // namespace qtrail
