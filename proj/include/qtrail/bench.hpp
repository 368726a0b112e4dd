#pragma once

// Synthetic workload generator and the relative-overhead benchmark.

#include "qtrail/relation.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qtrail {

struct BenchOptions {
    std::uint64_t seed = 1;
    std::size_t tuples = 2000;
    std::size_t groups = 50;
    std::size_t max_trail_length = 6;
    int max_quality = 10;
    std::size_t repeat = 1;
    std::vector<std::string> classes = {"sp", "join", "agg-count", "agg-minmax"};
    std::vector<std::optional<std::size_t>> trail_limits = {std::nullopt, std::size_t{3}};
    std::vector<std::optional<std::size_t>> buffer_limits = {std::nullopt, std::size_t{10}};
};

struct BenchData {
    Relation items; // id, grp, val, tag
    Relation groups; // grp, label
};

// Deterministic for a given seed and shape.
BenchData generate_bench_data(const BenchOptions &options);

// Writes one CSV row per (class, scheme, trail limit, buffer limit).
// DomainError for an unknown query class.
void run_bench(const BenchOptions &options, std::ostream &out);

// FNV-1a over the relation's CSV export, as 16 hex digits.
std::string relation_digest(const Relation &rel);

} // namespace qtrail
