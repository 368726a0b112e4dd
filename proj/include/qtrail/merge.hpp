#pragma once

// Merge operator: combines several quality trails into one with a sweep line
// over the union of their transition timestamps. At every sweep position the
// output score is the lowest score among the participating inputs and the
// output statistics combine the active transitions' statistics.

#include "qtrail/trail.hpp"

#include <span>
#include <vector>

namespace qtrail {

// min of mins, max of maxes, summed sums and counts. DomainError when empty.
TransitionStats stats_combine(std::span<const TransitionStats> parts);
TransitionStats stats_combine(const TransitionStats &a, const TransitionStats &b);

// An input takes part from its first transition onward. The result is
// canonical and its transitions carry no triggering event.
// DomainError when inputs is empty.
QualityTrail merge(std::span<const QualityTrail *const> inputs);
QualityTrail merge(std::span<const QualityTrail> inputs);
QualityTrail merge(const QualityTrail &a, const QualityTrail &b);

// Coalesces adjacent transitions with identical (score, stats) into the
// earlier one. The stepwise quality function is unchanged.
QualityTrail canonicalize(const QualityTrail &trail);
bool is_canonical(const QualityTrail &trail);

// Structural equality of the canonical forms, ignoring event text.
bool trails_equal(const QualityTrail &a, const QualityTrail &b);

} // namespace qtrail
