#include "qtrail/aggregate.hpp"

#include "qtrail/error.hpp"
#include "qtrail/merge.hpp"

#include <algorithm>
#include <atomic>
#include <random>
#include <sstream>

namespace qtrail {

// ---------------------------------------------------------------------------
// ContributionArray

void ContributionArray::resolve(std::size_t ordinal, Contribution status) {
    if (ordinal >= statuses_.size()) {
        throw ProtocolError("contribution ordinal " + std::to_string(ordinal) + " out of range");
    }
    if (status == Contribution::Doubt) {
        throw ProtocolError("cannot resolve an entry back to in-doubt");
    }
    Contribution &slot = statuses_[ordinal];
    if (slot != Contribution::Doubt && slot != status) {
        throw ProtocolError("contribution status of ordinal " + std::to_string(ordinal) + " is permanent ('" +
                            std::string(1, static_cast<char>(slot)) + "')");
    }
    slot = status;
}

bool ContributionArray::has_doubt() const {
    return std::find(statuses_.begin(), statuses_.end(), Contribution::Doubt) != statuses_.end();
}

std::size_t ContributionArray::count(Contribution status) const {
    return static_cast<std::size_t>(std::count(statuses_.begin(), statuses_.end(), status));
}

std::string ContributionArray::to_string() const {
    std::string out;
    out.reserve(statuses_.size());
    for (Contribution c : statuses_) {
        out.push_back(static_cast<char>(c));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Aggregator protocol

Contribution Aggregator::iterate(const Value &value) {
    if (finalized_) {
        throw ProtocolError("iterate called after finalize");
    }
    Contribution status = on_iterate(contributions_.size(), value);
    contributions_.append(status);
    return status;
}

Value Aggregator::finalize() {
    if (finalized_) {
        throw ProtocolError("finalize called twice");
    }
    finalized_ = true;
    Value result = on_finalize();
    if (contributions_.has_doubt()) {
        throw ProtocolError("aggregator finalized with in-doubt contributions");
    }
    return result;
}

namespace {

class CountAggregator final : public Aggregator {
public:
    explicit CountAggregator(bool star) : star_(star) {}
    ColumnType result_type() const override { return ColumnType::Integer; }

protected:
    Contribution on_iterate(std::size_t, const Value &value) override {
        if (star_ || !value.is_null()) {
            ++count_;
        }
        return Contribution::Plus;
    }
    Value on_finalize() override { return Value(count_); }

private:
    bool star_;
    std::int64_t count_ = 0;
};

class SumAggregator final : public Aggregator {
public:
    explicit SumAggregator(ColumnType type) : type_(type) {}
    ColumnType result_type() const override { return type_; }

protected:
    Contribution on_iterate(std::size_t, const Value &value) override {
        if (!value.is_null()) {
            seen_ = true;
            if (type_ == ColumnType::Integer) {
                int_sum_ += value.as_integer();
            } else {
                real_sum_ += value.as_number();
            }
        }
        return Contribution::Plus;
    }
    Value on_finalize() override {
        if (!seen_) {
            return Value::null();
        }
        return type_ == ColumnType::Integer ? Value(int_sum_) : Value(real_sum_);
    }

private:
    ColumnType type_;
    bool seen_ = false;
    std::int64_t int_sum_ = 0;
    double real_sum_ = 0.0;
};

// Algebraic: kept as (sum, count).
class AvgAggregator final : public Aggregator {
public:
    ColumnType result_type() const override { return ColumnType::Real; }

protected:
    Contribution on_iterate(std::size_t, const Value &value) override {
        if (!value.is_null()) {
            sum_ += value.as_number();
            ++count_;
        }
        return Contribution::Plus;
    }
    Value on_finalize() override { return count_ == 0 ? Value::null() : Value(sum_ / static_cast<double>(count_)); }

private:
    double sum_ = 0.0;
    std::int64_t count_ = 0;
};

// MIN / MAX. Tuples holding the current extremum are in doubt; a strictly
// better value demotes them. Ties survive and all contribute. While no
// non-null value has been seen, nulls are the candidates.
template <bool IsMax>
class ExtremumAggregator final : public Aggregator {
public:
    explicit ExtremumAggregator(ColumnType type) : type_(type) {}
    ColumnType result_type() const override { return type_; }

protected:
    Contribution on_iterate(std::size_t ordinal, const Value &value) override {
        if (value.is_null()) {
            if (best_) {
                return Contribution::Minus;
            }
            candidates_.push_back(ordinal);
            return Contribution::Doubt;
        }
        if (!best_ || better(value, *best_)) {
            for (std::size_t c : candidates_) {
                demote(c);
            }
            candidates_.clear();
            best_ = value;
        } else if (compare_values(value, *best_) != std::partial_ordering::equivalent) {
            return Contribution::Minus;
        }
        candidates_.push_back(ordinal);
        return Contribution::Doubt;
    }

    Value on_finalize() override {
        for (std::size_t c : candidates_) {
            promote(c);
        }
        return best_ ? *best_ : Value::null();
    }

private:
    static bool better(const Value &a, const Value &b) {
        auto c = compare_values(a, b);
        return IsMax ? c == std::partial_ordering::greater : c == std::partial_ordering::less;
    }

    ColumnType type_;
    std::optional<Value> best_;
    std::vector<std::size_t> candidates_;
};

void require_numeric(const std::string &fn, std::optional<ColumnType> type) {
    if (!type || *type == ColumnType::Text) {
        throw PlanError(fn + " requires a numeric column");
    }
}

} // namespace

AggregatorRegistry AggregatorRegistry::with_builtins() {
    AggregatorRegistry r;
    r.add("count", [](std::optional<ColumnType> type) { return std::make_unique<CountAggregator>(!type); });
    r.add("sum", [](std::optional<ColumnType> type) {
        require_numeric("sum", type);
        return std::make_unique<SumAggregator>(*type);
    });
    r.add("avg", [](std::optional<ColumnType> type) {
        require_numeric("avg", type);
        return std::make_unique<AvgAggregator>();
    });
    r.add("min", [](std::optional<ColumnType> type) {
        require_numeric("min", type);
        return std::make_unique<ExtremumAggregator<false>>(*type);
    });
    r.add("max", [](std::optional<ColumnType> type) {
        require_numeric("max", type);
        return std::make_unique<ExtremumAggregator<true>>(*type);
    });
    return r;
}

void AggregatorRegistry::add(const std::string &name, AggregatorFactory factory) {
    factories_[name] = std::move(factory);
}

std::unique_ptr<Aggregator> AggregatorRegistry::create(const std::string &name,
                                                       std::optional<ColumnType> input_type) const {
    auto it = factories_.find(name);
    if (it == factories_.end()) {
        throw PlanError("unknown aggregate function '" + name + "'");
    }
    auto agg = it->second(input_type);
    if (!agg) {
        throw PlanError("aggregate factory for '" + name + "' returned nothing");
    }
    return agg;
}

// ---------------------------------------------------------------------------
// BufferManager

BufferManager::BufferManager(std::size_t limit, bool clean_enabled, Cleaner cleaner, int max_quality,
                             std::filesystem::path spill_directory)
    : limit_(limit), clean_enabled_(clean_enabled), cleaner_(std::move(cleaner)), max_quality_(max_quality),
      spill_directory_(std::move(spill_directory)) {
    if (limit_ < 1) {
        throw DomainError("buffer limit must be at least 1");
    }
}

BufferManager::~BufferManager() {
    if (spill_out_.is_open()) {
        spill_out_.close();
    }
    if (!spill_path_.empty()) {
        std::error_code ec;
        std::filesystem::remove(spill_path_, ec);
    }
}

void BufferManager::insert(std::size_t group, std::size_t ordinal, QualityTrail trail) {
    const std::size_t need = trail.size();
    if (usage_ + need > limit_) {
        if (clean_enabled_ && cleaner_) {
            cleaner_();
        }
        if (usage_ + need > limit_ && !memory_.empty()) {
            spill();
        }
    }
    if (need > limit_) {
        // a single trail larger than the whole budget goes straight to disk
        open_spill_file();
        write_record(group, ordinal, trail);
        spill_out_.flush();
        if (!spill_out_) {
            throw StorageError("failed writing spill file " + spill_path_.string());
        }
        ++metrics_.spill_count;
        ++metrics_.spilled_trails;
        return;
    }
    memory_.insert_or_assign({group, ordinal}, std::move(trail));
    usage_ += need;
    metrics_.max_buffered_transitions = std::max(metrics_.max_buffered_transitions, usage_);
}

std::optional<QualityTrail> BufferManager::take(std::size_t group, std::size_t ordinal) {
    auto it = memory_.find({group, ordinal});
    if (it == memory_.end()) {
        return std::nullopt;
    }
    QualityTrail trail = std::move(it->second);
    memory_.erase(it);
    usage_ -= trail.size();
    return trail;
}

void BufferManager::open_spill_file() {
    if (spill_out_.is_open()) {
        return;
    }
    static std::atomic<std::uint64_t> counter{0};
    std::filesystem::path dir =
        spill_directory_.empty() ? std::filesystem::temp_directory_path() : spill_directory_;
    std::random_device rd;
    spill_path_ = dir / ("qtrail-spill-" + std::to_string(rd()) + "-" + std::to_string(counter++) + ".tsv");
    spill_out_.open(spill_path_, std::ios::out | std::ios::trunc | std::ios::binary);
    if (!spill_out_) {
        throw StorageError("cannot create spill file " + spill_path_.string());
    }
}

void BufferManager::write_record(std::size_t group, std::size_t ordinal, const QualityTrail &trail) {
    spill_out_ << group << '\t' << ordinal << '\t' << serialize_trail(trail) << '\n';
}

void BufferManager::spill() {
    if (memory_.empty()) {
        return;
    }
    open_spill_file();
    for (const auto &[key, trail] : memory_) {
        write_record(key.first, key.second, trail);
    }
    spill_out_.flush();
    if (!spill_out_) {
        throw StorageError("failed writing spill file " + spill_path_.string());
    }
    metrics_.spilled_trails += memory_.size();
    ++metrics_.spill_count;
    memory_.clear();
    usage_ = 0;
}

std::vector<BufferManager::Entry> BufferManager::reload_spilled() {
    std::vector<Entry> out;
    if (!spill_out_.is_open()) {
        return out;
    }
    spill_out_.flush();
    std::ifstream in(spill_path_, std::ios::binary);
    if (!in) {
        throw StorageError("cannot reopen spill file " + spill_path_.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto t1 = line.find('\t');
        auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) {
            throw StorageError("corrupt spill record at line " + std::to_string(line_no));
        }
        try {
            std::size_t group = std::stoull(line.substr(0, t1));
            std::size_t ordinal = std::stoull(line.substr(t1 + 1, t2 - t1 - 1));
            out.push_back({group, ordinal, parse_trail(std::string_view(line).substr(t2 + 1), max_quality_)});
        } catch (const std::exception &e) {
            throw StorageError("corrupt spill record at line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// GroupingOperator

GroupingOperator::GroupingOperator(const Schema &input, const std::vector<std::string> &by,
                                   const std::vector<AggregatorSpec> &specs, const GroupConfig &config,
                                   const AggregatorRegistry &registry)
    : config_(config), registry_(registry),
      buffer_(config.buffer_limit, config.buffer_clean_enabled, [this] { return buffer_clean(); },
              config.max_quality, config.spill_directory) {
    std::vector<Column> cols;
    for (const auto &name : by) {
        key_columns_.push_back(input.resolve(name));
        cols.push_back(input.column(key_columns_.back()));
    }
    for (const auto &spec : specs) {
        std::optional<std::size_t> col;
        std::optional<ColumnType> type;
        if (!spec.column.empty() && spec.column != "*") {
            col = input.resolve(spec.column);
            type = input.column(*col).type;
        } else if (spec.function != "count") {
            throw PlanError(spec.function + " needs a column argument");
        }
        auto prototype = registry_.create(spec.function, type);
        std::string name = spec.output_name.empty()
                               ? spec.function + "(" + (spec.column.empty() ? "*" : spec.column) + ")"
                               : spec.output_name;
        cols.push_back({name, "", prototype->result_type()});
        agg_columns_.push_back(col);
        agg_input_types_.push_back(type);
        agg_functions_.push_back(spec.function);
    }
    output_ = Schema(std::move(cols));
}

Contribution GroupingOperator::current_status(const GroupState &group, std::size_t ordinal) const {
    bool all_minus = true;
    for (const auto &agg : group.aggregators) {
        Contribution c = agg->contributions().at(ordinal);
        if (c == Contribution::Plus) {
            return Contribution::Plus;
        }
        if (c != Contribution::Minus) {
            all_minus = false;
        }
    }
    return all_minus ? Contribution::Minus : Contribution::Doubt;
}

void GroupingOperator::merge_into(GroupState &group, const QualityTrail &trail) {
    if (!config_.propagate_trails) {
        if (!group.merged) {
            group.merged = trail;
        }
        return;
    }
    if (!group.merged) {
        const QualityTrail *one[] = {&trail};
        group.merged = merge(std::span<const QualityTrail *const>(one));
    } else {
        group.merged = merge(*group.merged, trail);
    }
}

void GroupingOperator::group_iterate(std::size_t group, std::size_t ordinal, const QualityTrail &trail,
                                     const std::vector<Contribution> &statuses) {
    GroupState &g = groups_[group];
    bool any_plus = config_.mode == AggregationMode::Black || !config_.propagate_trails ||
                    std::find(statuses.begin(), statuses.end(), Contribution::Plus) != statuses.end();
    bool all_minus = !statuses.empty() && std::all_of(statuses.begin(), statuses.end(), [](Contribution c) {
        return c == Contribution::Minus;
    });
    if (any_plus) {
        g.global.append(Contribution::Plus);
        merge_into(g, trail);
    } else if (all_minus) {
        g.global.append(Contribution::Minus);
    } else {
        g.global.append(Contribution::Doubt);
        buffer_.insert(group, ordinal, trail);
    }
}

void GroupingOperator::consume(const QTuple &tuple) {
    if (finished_) {
        throw ProtocolError("grouping operator already finished");
    }
    Row key;
    key.reserve(key_columns_.size());
    for (std::size_t c : key_columns_) {
        key.push_back(tuple.values[c]);
    }
    auto [it, inserted] = index_.try_emplace(key, groups_.size());
    if (inserted) {
        GroupState g;
        g.key = std::move(key);
        for (std::size_t k = 0; k < agg_functions_.size(); ++k) {
            g.aggregators.push_back(registry_.create(agg_functions_[k], agg_input_types_[k]));
        }
        groups_.push_back(std::move(g));
    }
    std::size_t group = it->second;
    std::size_t ordinal = groups_[group].tuples++;

    std::vector<Contribution> statuses;
    statuses.reserve(agg_functions_.size());
    for (std::size_t k = 0; k < agg_functions_.size(); ++k) {
        const Value &v = agg_columns_[k] ? tuple.values[*agg_columns_[k]] : Value(std::int64_t{1});
        statuses.push_back(groups_[group].aggregators[k]->iterate(v));
    }
    group_iterate(group, ordinal, tuple.trail, statuses);
}

std::size_t GroupingOperator::buffer_clean() {
    ++buffer_.metrics().buffer_clean_calls;
    std::vector<std::pair<std::size_t, std::size_t>> keys;
    keys.reserve(buffer_.resident().size());
    for (const auto &[key, trail] : buffer_.resident()) {
        keys.push_back(key);
    }
    std::size_t freed = 0;
    for (auto [group, ordinal] : keys) {
        GroupState &g = groups_[group];
        Contribution status = current_status(g, ordinal);
        if (status == Contribution::Doubt) {
            continue;
        }
        QualityTrail trail = *buffer_.take(group, ordinal);
        freed += trail.size();
        g.global.resolve(ordinal, status);
        if (status == Contribution::Plus) {
            merge_into(g, trail);
        }
    }
    return freed;
}

Relation GroupingOperator::finish() {
    if (finished_) {
        throw ProtocolError("grouping operator already finished");
    }
    finished_ = true;

    std::vector<Row> rows;
    rows.reserve(groups_.size());
    for (auto &g : groups_) {
        Row row = g.key;
        for (auto &agg : g.aggregators) {
            row.push_back(agg->finalize());
        }
        rows.push_back(std::move(row));
    }

    auto settle = [&](std::size_t group, std::size_t ordinal, const QualityTrail &trail) {
        GroupState &g = groups_.at(group);
        Contribution status = current_status(g, ordinal);
        if (status == Contribution::Doubt) {
            throw InternalError("in-doubt status survived finalize");
        }
        g.global.resolve(ordinal, status);
        if (status == Contribution::Plus) {
            merge_into(g, trail);
        }
    };

    std::vector<std::pair<std::size_t, std::size_t>> resident;
    for (const auto &[key, trail] : buffer_.resident()) {
        resident.push_back(key);
    }
    for (auto [group, ordinal] : resident) {
        settle(group, ordinal, *buffer_.take(group, ordinal));
    }
    for (const auto &entry : buffer_.reload_spilled()) {
        settle(entry.group, entry.ordinal, entry.trail);
    }

    Relation out(output_);
    out.reserve(groups_.size());
    for (std::size_t i = 0; i < groups_.size(); ++i) {
        GroupState &g = groups_[i];
        if (g.global.has_doubt()) {
            throw InternalError("global contribution array still in doubt after finalize");
        }
        if (!g.merged) {
            throw InternalError("group has no contributing tuple");
        }
        out.add({std::move(rows[i]), *g.merged});
    }
    return out;
}

Relation group_aggregate(const Relation &rel, const std::vector<std::string> &by,
                         const std::vector<AggregatorSpec> &specs, const GroupConfig &config, GroupMetrics *metrics,
                         const AggregatorRegistry &registry) {
    GroupingOperator op(rel.schema(), by, specs, config, registry);
    for (const auto &t : rel.tuples()) {
        op.consume(t);
    }
    Relation out = op.finish();
    if (metrics) {
        *metrics = op.metrics();
    }
    return out;
}

} // namespace qtrail
