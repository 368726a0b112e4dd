#include "qtrail/bench.hpp"

#include "qtrail/error.hpp"
#include "qtrail/plan.hpp"
#include "qtrail/store.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>

namespace qtrail {

namespace {

QualityTrail random_trail(std::mt19937_64 &rng, std::size_t max_length, int max_quality) {
    std::uniform_int_distribution<std::size_t> length(1, max_length);
    std::uniform_int_distribution<int> score(1, max_quality);
    std::uniform_int_distribution<std::uint64_t> gap(1, 50);
    std::uint64_t ts = gap(rng);
    std::vector<QualityTransition> transitions;
    const std::size_t n = length(rng);
    for (std::size_t i = 0; i < n; ++i) {
        transitions.push_back(make_transition(QualityScore(score(rng)), Timestamp(ts), {}, max_quality));
        ts += gap(rng);
    }
    return QualityTrail::from_transitions(std::move(transitions));
}

std::string limit_text(const std::optional<std::size_t> &limit) {
    return limit ? std::to_string(*limit) : "unlimited";
}

PlanNode bench_plan(const std::string &query_class) {
    if (query_class == "sp") {
        return PlanNode::project(
            PlanNode::select(PlanNode::scan("item"), Predicate::compare("val", CompareOp::Ge, Value(500))),
            {"id", "val", "tag"});
    }
    if (query_class == "join") {
        return PlanNode::join(PlanNode::scan("item"), PlanNode::scan("grp"),
                              Predicate::compare_columns("item.grp", CompareOp::Eq, "grp.grp"));
    }
    if (query_class == "agg-count") {
        return PlanNode::group(PlanNode::scan("item"), {"grp"}, {{"count", "*", "n"}});
    }
    if (query_class == "agg-minmax") {
        return PlanNode::group(PlanNode::scan("item"), {"grp"}, {{"min", "val", "lo"}, {"max", "val", "hi"}});
    }
    throw DomainError("unknown bench query class '" + query_class + "'");
}

} // namespace

BenchData generate_bench_data(const BenchOptions &options) {
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<std::int64_t> val(0, 999);
    const std::size_t groups = std::max<std::size_t>(1, options.groups);
    std::uniform_int_distribution<std::size_t> grp(0, groups - 1);

    BenchData data;
    data.items = Relation(Schema({{"id", "", ColumnType::Integer},
                                  {"grp", "", ColumnType::Integer},
                                  {"val", "", ColumnType::Integer},
                                  {"tag", "", ColumnType::Text}}));
    data.items.reserve(options.tuples);
    for (std::size_t i = 0; i < options.tuples; ++i) {
        const auto g = static_cast<std::int64_t>(grp(rng));
        const std::int64_t v = val(rng);
        Row row{Value(static_cast<std::int64_t>(i)), Value(g), Value(v), Value("t" + std::to_string(v % 17))};
        data.items.add({std::move(row), random_trail(rng, options.max_trail_length, options.max_quality)});
    }
    data.groups = Relation(Schema({{"grp", "", ColumnType::Integer}, {"label", "", ColumnType::Text}}));
    for (std::size_t g = 0; g < groups; ++g) {
        data.groups.add({{Value(static_cast<std::int64_t>(g)), Value("group " + std::to_string(g))},
                         random_trail(rng, options.max_trail_length, options.max_quality)});
    }
    return data;
}

std::string relation_digest(const Relation &rel) {
    std::ostringstream text;
    save_relation(rel, text);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text.str()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void run_bench(const BenchOptions &options, std::ostream &out) {
    for (const auto &c : options.classes) {
        bench_plan(c); // reject unknown classes before doing any work
    }
    const BenchData data = generate_bench_data(options);
    out << "query_class,scheme,trail_limit,buffer_limit,tuples,result_rows,result_digest,spill_count,"
           "buffer_clean_calls,time_with_ms,time_without_ms,overhead\n";

    using Clock = std::chrono::steady_clock;
    for (const auto &trail_limit : options.trail_limits) {
        EngineConfig config;
        config.max_quality = options.max_quality;
        config.trail_limit = trail_limit;
        for (StorageScheme scheme : {StorageScheme::Inline, StorageScheme::OffTable}) {
            Catalog catalog(config);
            catalog.add_table("item", data.items, scheme, std::string("id"));
            catalog.add_table("grp", data.groups, scheme, std::string("grp"));
            for (const auto &query_class : options.classes) {
                const PlanNode plan = bench_plan(query_class);
                for (const auto &buffer_limit : options.buffer_limits) {
                    PlanOptions with;
                    with.group.max_quality = options.max_quality;
                    if (buffer_limit) {
                        with.group.buffer_limit = *buffer_limit;
                    }
                    PlanOptions without = with;
                    without.exec.propagate_trails = false;

                    GroupMetrics metrics;
                    Relation result;
                    double with_ms = 0.0;
                    double without_ms = 0.0;
                    for (std::size_t r = 0; r < std::max<std::size_t>(1, options.repeat); ++r) {
                        GroupMetrics run_metrics;
                        auto t0 = Clock::now();
                        result = execute_plan(plan, catalog, with, &run_metrics);
                        auto t1 = Clock::now();
                        execute_plan(plan, catalog, without);
                        auto t2 = Clock::now();
                        with_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
                        without_ms += std::chrono::duration<double, std::milli>(t2 - t1).count();
                        metrics = run_metrics;
                    }
                    const double overhead = without_ms > 0.0 ? std::max(0.0, with_ms / without_ms - 1.0) : 0.0;
                    char timing[96];
                    std::snprintf(timing, sizeof timing, "%.3f,%.3f,%.4f", with_ms, without_ms, overhead);
                    out << query_class << ',' << scheme_name(scheme) << ',' << limit_text(trail_limit) << ','
                        << limit_text(buffer_limit) << ',' << options.tuples << ',' << result.size() << ','
                        << relation_digest(result) << ',' << metrics.spill_count << ','
                        << metrics.buffer_clean_calls << ',' << timing << '\n';
                }
            }
        }
    }
}

} // namespace qtrail
