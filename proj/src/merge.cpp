#include "qtrail/merge.hpp"

#include "qtrail/error.hpp"

#include <algorithm>

namespace qtrail {

namespace {

bool same_step(const QualityTransition &a, const QualityTransition &b) {
    return a.score == b.score && a.stats == b.stats;
}

} // namespace

TransitionStats stats_combine(const TransitionStats &a, const TransitionStats &b) {
    return {std::min(a.min, b.min), std::max(a.max, b.max), a.sum + b.sum, a.count + b.count};
}

TransitionStats stats_combine(std::span<const TransitionStats> parts) {
    if (parts.empty()) {
        throw DomainError("cannot combine an empty set of statistics");
    }
    TransitionStats out = parts.front();
    for (const auto &s : parts.subspan(1)) {
        out = stats_combine(out, s);
    }
    return out;
}

QualityTrail merge(std::span<const QualityTrail *const> inputs) {
    if (inputs.empty()) {
        throw DomainError("merge needs at least one input trail");
    }

    std::vector<Timestamp> positions;
    for (const QualityTrail *trail : inputs) {
        for (const auto &tr : trail->transitions()) {
            positions.push_back(tr.timestamp);
        }
    }
    std::sort(positions.begin(), positions.end());
    positions.erase(std::unique(positions.begin(), positions.end()), positions.end());

    // cursor[i] = number of transitions of input i at or before the sweep line
    std::vector<std::size_t> cursor(inputs.size(), 0);
    std::vector<QualityTransition> out;
    for (Timestamp t : positions) {
        bool any = false;
        QualityScore score;
        TransitionStats stats;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            auto all = inputs[i]->transitions();
            while (cursor[i] < all.size() && all[cursor[i]].timestamp <= t) {
                ++cursor[i];
            }
            if (cursor[i] == 0) {
                continue; // not participating yet
            }
            const QualityTransition &active = all[cursor[i] - 1];
            if (!any) {
                score = active.score;
                stats = active.stats;
                any = true;
            } else {
                score = std::min(score, active.score);
                stats = stats_combine(stats, active.stats);
            }
        }
        QualityTransition next{score, t, {}, stats};
        if (out.empty() || !same_step(out.back(), next)) {
            out.push_back(std::move(next));
        }
    }
    return QualityTrail::from_transitions(std::move(out));
}

QualityTrail merge(std::span<const QualityTrail> inputs) {
    std::vector<const QualityTrail *> ptrs;
    ptrs.reserve(inputs.size());
    for (const auto &trail : inputs) {
        ptrs.push_back(&trail);
    }
    return merge(std::span<const QualityTrail *const>(ptrs));
}

QualityTrail merge(const QualityTrail &a, const QualityTrail &b) {
    const QualityTrail *ptrs[] = {&a, &b};
    return merge(std::span<const QualityTrail *const>(ptrs));
}

QualityTrail canonicalize(const QualityTrail &trail) {
    if (is_canonical(trail)) {
        return trail;
    }
    std::vector<QualityTransition> out;
    for (const auto &tr : trail.transitions()) {
        if (out.empty() || !same_step(out.back(), tr)) {
            out.push_back(tr);
        }
    }
    return QualityTrail::from_transitions(std::move(out));
}

bool is_canonical(const QualityTrail &trail) {
    auto all = trail.transitions();
    for (std::size_t i = 1; i < all.size(); ++i) {
        if (same_step(all[i - 1], all[i])) {
            return false;
        }
    }
    return true;
}

bool trails_equal(const QualityTrail &a, const QualityTrail &b) {
    QualityTrail ca = canonicalize(a);
    QualityTrail cb = canonicalize(b);
    if (ca.size() != cb.size()) {
        return false;
    }
    for (std::size_t i = 0; i < ca.size(); ++i) {
        const auto &x = ca.transition(i);
        const auto &y = cb.transition(i);
        if (x.timestamp != y.timestamp || !same_step(x, y)) {
            return false;
        }
    }
    return true;
}

} // namespace qtrail
