#pragma once

// Grouping and aggregation with quality derivation.
//
// Each aggregator reports, per input tuple, whether the tuple certainly
// contributes to its result ('+'), certainly does not ('-') or is still in
// doubt ('?'). The grouping operator folds those reports into a per-group
// global status: a tuple is merged into the group's trail as soon as any
// aggregator says '+', dropped once every aggregator says '-', and buffered
// otherwise. '+' and '-' are final; '?' must be resolved by finalize.
//
// Buffered trails live in a BufferManager with a transition-count limit.
// When an insert would overflow it, BufferClean re-polls the aggregators'
// contribution arrays to evict resolved entries; if that frees too little,
// the whole buffer is spilled to a temporary file and reloaded at finalize.

#include "qtrail/algebra.hpp"
#include "qtrail/relation.hpp"
#include "qtrail/trail.hpp"

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace qtrail {

enum class Contribution : char { Plus = '+', Minus = '-', Doubt = '?' };

// Append-only status log with '?' -> '+' / '?' -> '-' as the only edits.
class ContributionArray {
public:
    std::size_t size() const { return statuses_.size(); }
    Contribution at(std::size_t ordinal) const { return statuses_.at(ordinal); }

    void append(Contribution status) { statuses_.push_back(status); }

    // ProtocolError when overwriting a permanent entry with a different value
    // or resolving to '?'.
    void resolve(std::size_t ordinal, Contribution status);

    bool has_doubt() const;
    std::size_t count(Contribution status) const;
    std::string to_string() const;

private:
    std::vector<Contribution> statuses_;
};

// Base class for aggregation functions. Subclasses implement on_iterate and
// on_finalize; the base records statuses and enforces call order.
class Aggregator {
public:
    virtual ~Aggregator() = default;

    Contribution iterate(const Value &value);
    Value finalize();

    bool finalized() const { return finalized_; }
    const ContributionArray &contributions() const { return contributions_; }

    virtual ColumnType result_type() const = 0;

protected:
    // ordinal = position of this tuple within the group.
    virtual Contribution on_iterate(std::size_t ordinal, const Value &value) = 0;
    // Must leave no '?' in the array (use promote/demote).
    virtual Value on_finalize() = 0;

    void promote(std::size_t ordinal) { contributions_.resolve(ordinal, Contribution::Plus); }
    void demote(std::size_t ordinal) { contributions_.resolve(ordinal, Contribution::Minus); }

private:
    ContributionArray contributions_;
    bool finalized_ = false;
};

// Convenience base for user-defined functions without fine-grained tracking:
// every tuple is reported as contributing.
class ContributingAggregator : public Aggregator {
protected:
    Contribution on_iterate(std::size_t, const Value &value) final {
        accumulate(value);
        return Contribution::Plus;
    }
    virtual void accumulate(const Value &value) = 0;
};

struct AggregatorSpec {
    std::string function; // count, sum, avg, min, max or a registered name
    std::string column;   // "*" or empty for count(*)
    std::string output_name;
};

// Creates per-group aggregator instances. input_type is nullopt for "*".
using AggregatorFactory = std::function<std::unique_ptr<Aggregator>(std::optional<ColumnType> input_type)>;

class AggregatorRegistry {
public:
    // Registry pre-populated with count, sum, avg, min and max.
    static AggregatorRegistry with_builtins();

    void add(const std::string &name, AggregatorFactory factory);
    bool contains(const std::string &name) const { return factories_.contains(name); }

    // PlanError for unknown functions or non-numeric input to sum/avg/min/max.
    std::unique_ptr<Aggregator> create(const std::string &name, std::optional<ColumnType> input_type) const;

private:
    std::map<std::string, AggregatorFactory> factories_;
};

enum class AggregationMode { Open, Black };

struct GroupConfig {
    AggregationMode mode = AggregationMode::Open;
    std::size_t buffer_limit = std::numeric_limits<std::size_t>::max(); // transitions
    bool buffer_clean_enabled = true;
    int max_quality = kDefaultMaxQuality;
    bool propagate_trails = true;
    std::filesystem::path spill_directory; // empty = system temp directory
};

struct GroupMetrics {
    std::size_t buffer_clean_calls = 0;
    std::size_t spill_count = 0;
    std::size_t max_buffered_transitions = 0;
    std::size_t spilled_trails = 0;
};

// Holds in-doubt trails keyed by (group id, ordinal) under a transition budget.
class BufferManager {
public:
    struct Entry {
        std::size_t group = 0;
        std::size_t ordinal = 0;
        QualityTrail trail;
    };

    // Returns the number of transitions freed.
    using Cleaner = std::function<std::size_t()>;

    BufferManager(std::size_t limit, bool clean_enabled, Cleaner cleaner, int max_quality,
                  std::filesystem::path spill_directory = {});
    ~BufferManager();

    BufferManager(const BufferManager &) = delete;
    BufferManager &operator=(const BufferManager &) = delete;

    // After return, usage() <= limit(). May trigger the cleaner and/or a spill.
    void insert(std::size_t group, std::size_t ordinal, QualityTrail trail);

    // In-memory entries only.
    const std::map<std::pair<std::size_t, std::size_t>, QualityTrail> &resident() const { return memory_; }
    std::optional<QualityTrail> take(std::size_t group, std::size_t ordinal);

    // Writes every resident entry to the spill file and empties memory.
    void spill();
    // Reads back every spilled entry, in spill order. StorageError on I/O failure.
    std::vector<Entry> reload_spilled();

    std::size_t usage() const { return usage_; }
    std::size_t limit() const { return limit_; }
    const GroupMetrics &metrics() const { return metrics_; }
    GroupMetrics &metrics() { return metrics_; }
    const std::filesystem::path &spill_path() const { return spill_path_; }

private:
    void open_spill_file();
    void write_record(std::size_t group, std::size_t ordinal, const QualityTrail &trail);

    std::size_t limit_;
    bool clean_enabled_;
    Cleaner cleaner_;
    int max_quality_;
    std::filesystem::path spill_directory_;
    std::filesystem::path spill_path_;
    std::ofstream spill_out_;
    std::map<std::pair<std::size_t, std::size_t>, QualityTrail> memory_;
    std::size_t usage_ = 0;
    GroupMetrics metrics_;
};

// The grouping operator: feed tuples with consume(), then call finish().
class GroupingOperator {
public:
    GroupingOperator(const Schema &input, const std::vector<std::string> &by,
                     const std::vector<AggregatorSpec> &specs, const GroupConfig &config,
                     const AggregatorRegistry &registry = AggregatorRegistry::with_builtins());

    const Schema &output_schema() const { return output_; }

    void consume(const QTuple &tuple);

    // Finalizes aggregators, resolves buffered trails, emits one tuple per group.
    Relation finish();

    // Re-polls contribution arrays and evicts resolved resident trails.
    std::size_t buffer_clean();

    const GroupMetrics &metrics() const { return buffer_.metrics(); }
    std::size_t group_count() const { return groups_.size(); }
    // Global status log of a group (by first-appearance order).
    const ContributionArray &global_array(std::size_t group) const { return groups_.at(group).global; }
    const std::vector<std::unique_ptr<Aggregator>> &aggregators(std::size_t group) const {
        return groups_.at(group).aggregators;
    }

private:
    struct GroupState {
        Row key;
        ContributionArray global;
        std::optional<QualityTrail> merged;
        std::vector<std::unique_ptr<Aggregator>> aggregators;
        std::size_t tuples = 0;
    };

    Contribution current_status(const GroupState &group, std::size_t ordinal) const;
    void merge_into(GroupState &group, const QualityTrail &trail);
    void group_iterate(std::size_t group, std::size_t ordinal, const QualityTrail &trail,
                       const std::vector<Contribution> &statuses);

    GroupConfig config_;
    AggregatorRegistry registry_;
    std::vector<std::size_t> key_columns_;
    std::vector<std::optional<std::size_t>> agg_columns_;
    std::vector<std::optional<ColumnType>> agg_input_types_;
    std::vector<std::string> agg_functions_;
    Schema output_;
    std::unordered_map<Row, std::size_t, RowHash> index_;
    std::vector<GroupState> groups_;
    BufferManager buffer_;
    bool finished_ = false;
};

Relation group_aggregate(const Relation &rel, const std::vector<std::string> &by,
                         const std::vector<AggregatorSpec> &specs, const GroupConfig &config = {},
                         GroupMetrics *metrics = nullptr,
                         const AggregatorRegistry &registry = AggregatorRegistry::with_builtins());

} // namespace qtrail
