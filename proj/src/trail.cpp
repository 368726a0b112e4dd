#include "qtrail/trail.hpp"

#include "qtrail/error.hpp"

#include <algorithm>
#include <charconv>

namespace qtrail {

bool TransitionStats::valid() const {
    if (min > max || count < 1) {
        return false;
    }
    return static_cast<std::int64_t>(min) * count <= sum && sum <= static_cast<std::int64_t>(max) * count;
}

QualityTransition make_transition(QualityScore score, Timestamp ts, std::string event, int max_quality) {
    if (score.value() < 1 || score.value() > max_quality) {
        throw DomainError("quality score " + std::to_string(score.value()) + " outside [1, " +
                          std::to_string(max_quality) + "]");
    }
    return QualityTransition{score, ts, std::move(event), TransitionStats::of(score)};
}

QualityTrail::QualityTrail(QualityTransition initial) { transitions_.push_back(std::move(initial)); }

QualityTrail QualityTrail::from_transitions(std::vector<QualityTransition> transitions) {
    if (transitions.empty()) {
        throw DomainError("a quality trail needs at least one transition");
    }
    for (std::size_t i = 1; i < transitions.size(); ++i) {
        if (!(transitions[i - 1].timestamp < transitions[i].timestamp)) {
            throw MonotonicityError("transition " + std::to_string(i) + " at t=" +
                                    std::to_string(transitions[i].timestamp.ticks()) +
                                    " does not follow t=" + std::to_string(transitions[i - 1].timestamp.ticks()));
        }
    }
    QualityTrail trail;
    trail.transitions_ = std::move(transitions);
    return trail;
}

const QualityTransition &QualityTrail::transition(std::size_t index) const {
    if (index >= transitions_.size()) {
        throw RangeError("transition index " + std::to_string(index) + " out of range for trail of size " +
                         std::to_string(transitions_.size()));
    }
    return transitions_[index];
}

QualityTrail QualityTrail::add_transition(QualityTransition tr) const {
    if (!(back().timestamp < tr.timestamp)) {
        throw MonotonicityError("new transition at t=" + std::to_string(tr.timestamp.ticks()) +
                                " is not after the last transition at t=" + std::to_string(back().timestamp.ticks()));
    }
    QualityTrail out = *this;
    out.transitions_.push_back(std::move(tr));
    return out;
}

QualityTrail QualityTrail::replace_transition(std::size_t index, QualityTransition tr) const {
    if (index >= transitions_.size()) {
        throw RangeError("transition index " + std::to_string(index) + " out of range for trail of size " +
                         std::to_string(transitions_.size()));
    }
    if (index > 0 && !(transitions_[index - 1].timestamp < tr.timestamp)) {
        throw MonotonicityError("replacement at t=" + std::to_string(tr.timestamp.ticks()) +
                                " is not after its left neighbour");
    }
    if (index + 1 < transitions_.size() && !(tr.timestamp < transitions_[index + 1].timestamp)) {
        throw MonotonicityError("replacement at t=" + std::to_string(tr.timestamp.ticks()) +
                                " is not before its right neighbour");
    }
    QualityTrail out = *this;
    out.transitions_[index] = std::move(tr);
    return out;
}

QualityTrail QualityTrail::trim(TrimSide side, std::size_t k) const {
    if (k == 0) {
        throw DomainError("trim must keep at least one transition");
    }
    if (transitions_.size() <= k) {
        return *this;
    }
    QualityTrail out;
    if (side == TrimSide::KeepNewest) {
        out.transitions_.assign(transitions_.end() - static_cast<std::ptrdiff_t>(k), transitions_.end());
    } else {
        out.transitions_.assign(transitions_.begin(), transitions_.begin() + static_cast<std::ptrdiff_t>(k));
    }
    return out;
}

std::optional<std::size_t> QualityTrail::active_index_at(Timestamp t) const {
    auto it = std::upper_bound(transitions_.begin(), transitions_.end(), t,
                               [](Timestamp value, const QualityTransition &tr) { return value < tr.timestamp; });
    if (it == transitions_.begin()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(std::distance(transitions_.begin(), it) - 1);
}

std::optional<QualityTransition> QualityTrail::active_transition_at(Timestamp t) const {
    auto index = active_index_at(t);
    if (!index) {
        return std::nullopt;
    }
    return transitions_[*index];
}

std::optional<QualityScore> QualityTrail::quality_at(Timestamp t) const {
    auto index = active_index_at(t);
    if (!index) {
        return std::nullopt;
    }
    return transitions_[*index].score;
}

void EngineConfig::validate() const {
    if (max_quality < 1) {
        throw DomainError("max quality must be at least 1");
    }
    if (buffer_limit < 1) {
        throw DomainError("buffer limit must be at least 1");
    }
    if (trail_limit && *trail_limit == 0) {
        throw DomainError("trail limit must be positive");
    }
}

// ---------------------------------------------------------------------------
// Text format

namespace {

bool needs_encoding(unsigned char c) {
    return c <= 0x20 || c >= 0x7f || c == '%' || c == '|' || c == ';' || c == ',';
}

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::string decode_at(std::string_view encoded, std::size_t base) {
    std::string out;
    out.reserve(encoded.size());
    for (std::size_t i = 0; i < encoded.size(); ++i) {
        char c = encoded[i];
        if (c != '%') {
            out.push_back(c);
            continue;
        }
        if (i + 2 >= encoded.size()) {
            throw ParseError("truncated percent escape", base + i);
        }
        int hi = hex_value(encoded[i + 1]);
        int lo = hex_value(encoded[i + 2]);
        if (hi < 0 || lo < 0) {
            throw ParseError("invalid percent escape", base + i);
        }
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
    }
    return out;
}

template <typename Int>
Int parse_int(std::string_view field, std::size_t base, const char *what) {
    Int value{};
    if (field.empty()) {
        throw ParseError(std::string("empty ") + what, base);
    }
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ParseError(std::string("invalid ") + what + " '" + std::string(field) + "'", base);
    }
    return value;
}

void append_stats(std::string &out, const TransitionStats &s) {
    out += "min:";
    out += std::to_string(s.min);
    out += ",max:";
    out += std::to_string(s.max);
    out += ",sum:";
    out += std::to_string(s.sum);
    out += ",cnt:";
    out += std::to_string(s.count);
}

TransitionStats parse_stats(std::string_view field, std::size_t base) {
    static constexpr std::string_view keys[] = {"min:", "max:", "sum:", "cnt:"};
    std::int64_t values[4] = {};
    std::size_t pos = 0;
    for (int k = 0; k < 4; ++k) {
        if (field.substr(pos, keys[k].size()) != keys[k]) {
            throw ParseError("expected '" + std::string(keys[k]) + "' in statistics", base + pos);
        }
        pos += keys[k].size();
        std::size_t end = field.find(',', pos);
        if (k == 3) {
            if (end != std::string_view::npos) {
                throw ParseError("trailing data after statistics", base + end);
            }
            end = field.size();
        } else if (end == std::string_view::npos) {
            throw ParseError("truncated statistics", base + field.size());
        }
        values[k] = parse_int<std::int64_t>(field.substr(pos, end - pos), base + pos, "statistic");
        pos = end + 1;
    }
    TransitionStats stats{static_cast<int>(values[0]), static_cast<int>(values[1]), values[2], values[3]};
    if (!stats.valid()) {
        throw ParseError("inconsistent statistics", base);
    }
    return stats;
}

QualityTransition parse_transition(std::string_view text, std::size_t base, int max_quality) {
    std::string_view fields[4];
    std::size_t offsets[4] = {};
    std::size_t pos = 0;
    for (int f = 0; f < 4; ++f) {
        offsets[f] = pos;
        std::size_t end = text.find('|', pos);
        if (f < 3) {
            if (end == std::string_view::npos) {
                throw ParseError("transition needs 4 '|'-separated fields, found " + std::to_string(f + 1),
                                 base + text.size());
            }
        } else {
            if (end != std::string_view::npos) {
                throw ParseError("transition has more than 4 fields", base + end);
            }
            end = text.size();
        }
        fields[f] = text.substr(pos, end - pos);
        pos = end + 1;
    }
    int score = parse_int<int>(fields[0], base + offsets[0], "score");
    if (score < 1 || score > max_quality) {
        throw ParseError("score " + std::to_string(score) + " outside [1, " + std::to_string(max_quality) + "]",
                         base + offsets[0]);
    }
    auto ts = parse_int<std::uint64_t>(fields[1], base + offsets[1], "timestamp");
    std::string event = decode_at(fields[2], base + offsets[2]);
    TransitionStats stats = parse_stats(fields[3], base + offsets[3]);
    return QualityTransition{QualityScore(score), Timestamp(ts), std::move(event), stats};
}

} // namespace

std::string percent_encode(std::string_view raw) {
    static constexpr char digits[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        auto u = static_cast<unsigned char>(c);
        if (needs_encoding(u)) {
            out.push_back('%');
            out.push_back(digits[u >> 4]);
            out.push_back(digits[u & 0xf]);
        } else {
            out.push_back(c);
        }
    }
    return out;
}

std::string percent_decode(std::string_view encoded) { return decode_at(encoded, 0); }

std::string serialize_trail(const QualityTrail &trail) {
    std::string out;
    bool first = true;
    for (const auto &tr : trail.transitions()) {
        if (!first) {
            out.push_back(';');
        }
        first = false;
        out += std::to_string(tr.score.value());
        out.push_back('|');
        out += std::to_string(tr.timestamp.ticks());
        out.push_back('|');
        out += percent_encode(tr.event);
        out.push_back('|');
        append_stats(out, tr.stats);
    }
    return out;
}

std::string serialize_trail_minimal(const QualityTrail &trail) {
    std::string out;
    bool first = true;
    for (const auto &tr : trail.transitions()) {
        if (!first) {
            out.push_back(';');
        }
        first = false;
        out += std::to_string(tr.score.value());
        out.push_back('|');
        out += std::to_string(tr.timestamp.ticks());
        out += "||";
    }
    return out;
}

QualityTrail parse_trail(std::string_view text, int max_quality) {
    if (text.empty()) {
        throw ParseError("empty quality trail", 0);
    }
    std::vector<QualityTransition> transitions;
    std::size_t pos = 0;
    while (true) {
        std::size_t end = text.find(';', pos);
        std::size_t stop = end == std::string_view::npos ? text.size() : end;
        transitions.push_back(parse_transition(text.substr(pos, stop - pos), pos, max_quality));
        if (transitions.size() > 1 &&
            !(transitions[transitions.size() - 2].timestamp < transitions.back().timestamp)) {
            throw ParseError("timestamps must be strictly increasing", pos);
        }
        if (end == std::string_view::npos) {
            break;
        }
        pos = end + 1;
    }
    return QualityTrail::from_transitions(std::move(transitions));
}

} // namespace qtrail
