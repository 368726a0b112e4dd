#pragma once

// Catalog, CSV ingestion/export, the two physical trail layouts and
// quality-event replay.
//
// Inline tables keep each trail next to its data row. Off-table tables keep
// data rows only and a companion map (tuple id -> trail); scans join the two
// transparently so operators above the scan never see the difference.

#include "qtrail/source.hpp"
#include "qtrail/trail.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace qtrail {

inline constexpr std::string_view kTrailColumn = "__qtrail";

enum class StorageScheme { Inline, OffTable };

std::string_view scheme_name(StorageScheme scheme);
// Accepts "inline" and "off-table". DomainError otherwise.
StorageScheme parse_scheme(std::string_view text);

struct TableDef {
    std::string name;
    Schema schema; // data columns only, qualified by the table name
    StorageScheme scheme = StorageScheme::Inline;
    std::optional<std::string> id_column; // required for off-table
};

struct LoadOptions {
    StorageScheme scheme = StorageScheme::Inline;
    std::optional<std::string> id_column;
    std::optional<int> default_score; // defaults to max_quality
    Timestamp default_timestamp{0};
    std::optional<std::vector<ColumnType>> column_types; // inferred when absent
    bool replace = false;
};

enum class EventAction { Set, Inc, Dec, Hold };

std::string_view event_action_name(EventAction action);
EventAction parse_event_action(std::string_view text);

struct QualityEvent {
    std::string table;
    std::string tuple_id;
    EventAction action = EventAction::Hold;
    std::optional<int> score; // only for Set
    Timestamp timestamp;
    std::string event;
};

struct EventRejection {
    std::size_t index = 0; // position in the input stream
    std::string reason;
};

struct EventResult {
    std::size_t applied = 0;
    std::vector<EventRejection> rejected;
};

struct TableReport {
    std::string name;
    StorageScheme scheme = StorageScheme::Inline;
    std::size_t tuples = 0;
    std::size_t transitions = 0;
    std::size_t trail_bytes = 0;         // full serialized trails
    std::size_t minimal_trail_bytes = 0; // score and timestamp only
    std::size_t data_bytes = 0;
    std::size_t id_bytes = 0; // off-table id keys
    double overhead_ratio = 0.0; // (trail_bytes + id_bytes) / data_bytes
};

class Catalog : public TableProvider {
public:
    explicit Catalog(EngineConfig config = {});

    const EngineConfig &config() const { return config_; }

    // Reads a CSV with a header row and optional "__qtrail" column.
    // StorageError (with line number) on malformed input, duplicate or null
    // off-table ids, or an existing table without options.replace.
    const TableDef &load_csv(const std::filesystem::path &path, const std::string &table,
                             const LoadOptions &options = {});
    const TableDef &load_csv(std::istream &in, const std::string &table, const LoadOptions &options = {});

    // Registers an in-memory relation. Trails are kept as given (subject to
    // the configured trail limit).
    const TableDef &add_table(const std::string &table, const Relation &rel, StorageScheme scheme,
                              std::optional<std::string> id_column = std::nullopt, bool replace = false);

    bool contains(const std::string &table) const { return tables_.contains(table); }
    const TableDef &table(const std::string &name) const;
    std::vector<std::string> table_names() const;
    void drop(const std::string &table);

    std::unique_ptr<TupleSource> scan(const std::string &table) const override;
    Relation scan_all(const std::string &table) const;

    // Applies events in order. Rejections are logged, never fatal.
    EventResult apply_events(std::span<const QualityEvent> events);

    std::vector<TableReport> storage_report() const;

    // Persists every table plus a catalog.json manifest into dir.
    void save(const std::filesystem::path &dir) const;
    static Catalog open(const std::filesystem::path &dir, EngineConfig config = {});

private:
    struct Table {
        TableDef def;
        Relation inline_data; // inline scheme
        std::vector<Row> rows; // off-table scheme
        std::unordered_map<Value, QualityTrail, ValueHasher> trail_map; // off-table scheme
        std::unordered_map<Value, std::size_t, ValueHasher> id_index; // id -> row position
    };

    Table &mutable_table(const std::string &name);
    Value id_value(const Table &t, const std::string &text) const;
    const TableDef &install(Table table, bool replace);

    EngineConfig config_;
    std::map<std::string, Table> tables_;

    friend class OffTableScan;
};

// Writes a CSV with a trailing "__qtrail" column. Text values are always
// quoted so column types survive a reload; nulls are empty fields.
void save_relation(const Relation &rel, std::ostream &out);
void save_relation(const Relation &rel, const std::filesystem::path &path);

// Reads an event file (header "table,tuple_id,action,score,timestamp,event").
std::vector<QualityEvent> read_events(std::istream &in);
std::vector<QualityEvent> read_events(const std::filesystem::path &path);
void write_events(std::ostream &out, std::span<const QualityEvent> events);

} // namespace qtrail
