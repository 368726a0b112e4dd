#include "qtrail/store.hpp"

#include "qtrail/csv.hpp"
#include "qtrail/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace qtrail {

Relation collect(TupleSource &source) {
    Relation out(source.schema());
    while (auto t = source.next()) {
        out.add(std::move(*t));
    }
    return out;
}

std::string_view scheme_name(StorageScheme scheme) {
    return scheme == StorageScheme::Inline ? "inline" : "off-table";
}

StorageScheme parse_scheme(std::string_view text) {
    if (text == "inline") return StorageScheme::Inline;
    if (text == "off-table") return StorageScheme::OffTable;
    throw DomainError("unknown storage scheme '" + std::string(text) + "'");
}

std::string_view event_action_name(EventAction action) {
    switch (action) {
    case EventAction::Set:
        return "set";
    case EventAction::Inc:
        return "inc";
    case EventAction::Dec:
        return "dec";
    case EventAction::Hold:
        return "hold";
    }
    return "hold";
}

EventAction parse_event_action(std::string_view text) {
    if (text == "set") return EventAction::Set;
    if (text == "inc") return EventAction::Inc;
    if (text == "dec") return EventAction::Dec;
    if (text == "hold") return EventAction::Hold;
    throw DomainError("unknown event action '" + std::string(text) + "'");
}

namespace {

std::string at_line(std::size_t line, const std::string &what) { return "line " + std::to_string(line) + ": " + what; }

std::optional<std::int64_t> to_integer(std::string_view text) {
    std::int64_t v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        return std::nullopt;
    }
    return v;
}

std::optional<double> to_real(std::string_view text) {
    if (text.find_first_of("0123456789") == std::string_view::npos) {
        return std::nullopt;
    }
    double v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        return std::nullopt;
    }
    return v;
}

ColumnType infer_type(const std::vector<const csv::Field *> &fields) {
    bool all_int = true;
    bool all_real = true;
    for (const csv::Field *f : fields) {
        if (!f->quoted && f->text.empty()) {
            continue;
        }
        if (f->quoted) {
            return ColumnType::Text;
        }
        all_int = all_int && to_integer(f->text).has_value();
        all_real = all_real && to_real(f->text).has_value();
    }
    if (all_int) return ColumnType::Integer;
    if (all_real) return ColumnType::Real;
    return ColumnType::Text;
}

Value convert(const csv::Field &field, ColumnType type, std::size_t line, const std::string &column) {
    if (!field.quoted && field.text.empty()) {
        return Value::null();
    }
    switch (type) {
    case ColumnType::Integer:
        if (auto v = to_integer(field.text); v && !field.quoted) {
            return Value(*v);
        }
        break;
    case ColumnType::Real:
        if (auto v = to_real(field.text); v && !field.quoted) {
            return Value(*v);
        }
        break;
    case ColumnType::Text:
        return Value(field.text);
    }
    throw StorageError(at_line(line, "value '" + field.text + "' is not a valid " +
                                         std::string(column_type_name(type)) + " for column '" + column + "'"));
}

std::string encode_value(const Value &v) {
    if (v.is_null()) {
        return {};
    }
    if (v.is_text()) {
        return csv::escape(v.as_text(), true);
    }
    return v.to_string();
}

struct ParsedCsv {
    std::vector<std::string> names;
    std::vector<ColumnType> types;
    std::vector<Row> rows;
    std::vector<std::size_t> lines;
    std::vector<std::optional<QualityTrail>> trails;
};

ParsedCsv parse_csv(std::istream &in, const std::optional<std::vector<ColumnType>> &column_types, int max_quality) {
    csv::Reader reader(in);
    ParsedCsv out;
    std::optional<csv::Record> header;
    try {
        header = reader.next();
    } catch (const ParseError &e) {
        throw StorageError(e.what());
    }
    if (!header) {
        throw StorageError("CSV input has no header row");
    }
    std::optional<std::size_t> trail_col;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < header->size(); ++i) {
        const std::string &name = (*header)[i].text;
        if (name == kTrailColumn) {
            if (trail_col) {
                throw StorageError("header repeats the " + std::string(kTrailColumn) + " column");
            }
            trail_col = i;
            continue;
        }
        if (name.empty()) {
            throw StorageError("header has an empty column name");
        }
        if (!seen.insert(name).second) {
            throw StorageError("header repeats column '" + name + "'");
        }
        out.names.push_back(name);
    }
    const std::size_t width = header->size();
    if (column_types && column_types->size() != out.names.size()) {
        throw StorageError("expected " + std::to_string(column_types->size()) + " data columns, header has " +
                           std::to_string(out.names.size()));
    }

    std::vector<csv::Record> records;
    while (true) {
        std::optional<csv::Record> rec;
        try {
            rec = reader.next();
        } catch (const ParseError &e) {
            throw StorageError(e.what());
        }
        if (!rec) {
            break;
        }
        if (width > 1 && rec->size() == 1 && !(*rec)[0].quoted && (*rec)[0].text.empty()) {
            continue; // blank line
        }
        if (rec->size() != width) {
            throw StorageError(at_line(reader.line(), "expected " + std::to_string(width) + " fields, found " +
                                                          std::to_string(rec->size())));
        }
        records.push_back(std::move(*rec));
        out.lines.push_back(reader.line());
    }

    if (column_types) {
        out.types = *column_types;
    } else {
        std::size_t d = 0;
        for (std::size_t i = 0; i < width; ++i) {
            if (trail_col && i == *trail_col) {
                continue;
            }
            std::vector<const csv::Field *> fields;
            fields.reserve(records.size());
            for (const auto &rec : records) {
                fields.push_back(&rec[i]);
            }
            out.types.push_back(infer_type(fields));
            ++d;
        }
    }

    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto &rec = records[r];
        Row row;
        row.reserve(out.names.size());
        std::size_t d = 0;
        std::optional<QualityTrail> trail;
        for (std::size_t i = 0; i < width; ++i) {
            if (trail_col && i == *trail_col) {
                if (!rec[i].text.empty()) {
                    try {
                        trail = parse_trail(rec[i].text, max_quality);
                    } catch (const Error &e) {
                        throw StorageError(at_line(out.lines[r], std::string("invalid quality trail: ") + e.what()));
                    }
                }
                continue;
            }
            row.push_back(convert(rec[i], out.types[d], out.lines[r], out.names[d]));
            ++d;
        }
        out.rows.push_back(std::move(row));
        out.trails.push_back(std::move(trail));
    }
    return out;
}

Schema make_schema(const std::string &table, const std::vector<std::string> &names,
                   const std::vector<ColumnType> &types) {
    std::vector<Column> cols;
    for (std::size_t i = 0; i < names.size(); ++i) {
        cols.push_back({names[i], table, types[i]});
    }
    return Schema(std::move(cols));
}

void write_header(std::ostream &out, const Schema &schema, bool with_trail) {
    std::vector<std::string> fields;
    for (std::size_t i = 0; i < schema.size(); ++i) {
        fields.push_back(csv::escape(schema.display_name(i)));
    }
    if (with_trail) {
        fields.emplace_back(kTrailColumn);
    }
    csv::write_record(out, fields);
}

void write_row(std::ostream &out, const Row &row, const QualityTrail *trail) {
    std::vector<std::string> fields;
    fields.reserve(row.size() + 1);
    for (const auto &v : row) {
        fields.push_back(encode_value(v));
    }
    if (trail) {
        fields.push_back(csv::escape(serialize_trail(*trail), true));
    }
    csv::write_record(out, fields);
}

class InlineScan final : public TupleSource {
public:
    explicit InlineScan(const Relation &rel) : rel_(rel) {}
    const Schema &schema() const override { return rel_.schema(); }
    std::optional<QTuple> next() override {
        if (pos_ >= rel_.size()) {
            return std::nullopt;
        }
        return rel_.tuples()[pos_++];
    }

private:
    const Relation &rel_;
    std::size_t pos_ = 0;
};

} // namespace

// Joins each data row with its trail through the id-keyed companion map.
class OffTableScan final : public TupleSource {
public:
    OffTableScan(const Schema &schema, const std::vector<Row> &rows,
                 const std::unordered_map<Value, QualityTrail, ValueHasher> &trails, std::size_t id_col)
        : schema_(schema), rows_(rows), trails_(trails), id_col_(id_col) {}

    const Schema &schema() const override { return schema_; }

    std::optional<QTuple> next() override {
        if (pos_ >= rows_.size()) {
            return std::nullopt;
        }
        const Row &row = rows_[pos_++];
        auto it = trails_.find(row[id_col_]);
        if (it == trails_.end()) {
            throw IntegrityError("no quality trail stored for tuple id " + row[id_col_].to_string());
        }
        return QTuple{row, it->second};
    }

private:
    const Schema &schema_;
    const std::vector<Row> &rows_;
    const std::unordered_map<Value, QualityTrail, ValueHasher> &trails_;
    std::size_t id_col_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Catalog

Catalog::Catalog(EngineConfig config) : config_(std::move(config)) { config_.validate(); }

const TableDef &Catalog::table(const std::string &name) const {
    auto it = tables_.find(name);
    if (it == tables_.end()) {
        throw PlanError("unknown table '" + name + "'");
    }
    return it->second.def;
}

Catalog::Table &Catalog::mutable_table(const std::string &name) {
    auto it = tables_.find(name);
    if (it == tables_.end()) {
        throw PlanError("unknown table '" + name + "'");
    }
    return it->second;
}

std::vector<std::string> Catalog::table_names() const {
    std::vector<std::string> names;
    for (const auto &[name, t] : tables_) {
        names.push_back(name);
    }
    return names;
}

void Catalog::drop(const std::string &table) {
    if (tables_.erase(table) == 0) {
        throw PlanError("unknown table '" + table + "'");
    }
}

const TableDef &Catalog::install(Table table, bool replace) {
    const std::string name = table.def.name;
    if (tables_.contains(name) && !replace) {
        throw StorageError("table '" + name + "' already exists");
    }
    if (table.def.scheme == StorageScheme::OffTable && !table.def.id_column) {
        throw StorageError("off-table storage for '" + name + "' needs a tuple id column");
    }
    std::optional<std::size_t> id_col;
    if (table.def.id_column) {
        id_col = table.def.schema.find(*table.def.id_column);
        if (!id_col) {
            throw StorageError("id column '" + *table.def.id_column + "' not in table '" + name + "'");
        }
    }
    const std::size_t n =
        table.def.scheme == StorageScheme::Inline ? table.inline_data.size() : table.rows.size();
    for (std::size_t i = 0; i < n; ++i) {
        Value key;
        if (id_col) {
            const Row &row =
                table.def.scheme == StorageScheme::Inline ? table.inline_data.tuples()[i].values : table.rows[i];
            key = row[*id_col];
            if (key.is_null()) {
                throw StorageError("row " + std::to_string(i + 1) + " of '" + name + "' has a null tuple id");
            }
        } else {
            key = Value(static_cast<std::int64_t>(i));
        }
        if (!table.id_index.emplace(key, i).second) {
            throw StorageError("duplicate tuple id " + key.to_string() + " in table '" + name + "'");
        }
    }
    auto [it, inserted] = tables_.insert_or_assign(name, std::move(table));
    return it->second.def;
}

const TableDef &Catalog::load_csv(const std::filesystem::path &path, const std::string &table,
                                  const LoadOptions &options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StorageError("cannot open " + path.string());
    }
    return load_csv(in, table, options);
}

const TableDef &Catalog::load_csv(std::istream &in, const std::string &table, const LoadOptions &options) {
    if (tables_.contains(table) && !options.replace) {
        throw StorageError("table '" + table + "' already exists");
    }
    ParsedCsv parsed = parse_csv(in, options.column_types, config_.max_quality);
    QualityTrail initial(make_transition(QualityScore(options.default_score.value_or(config_.max_quality)),
                                         options.default_timestamp, {}, config_.max_quality));

    Table t;
    t.def = TableDef{table, make_schema(table, parsed.names, parsed.types), options.scheme, options.id_column};
    std::optional<std::size_t> id_col;
    if (options.id_column) {
        id_col = t.def.schema.find(*options.id_column);
    }
    if (options.scheme == StorageScheme::OffTable && !id_col) {
        throw StorageError("off-table storage needs an existing --id-col for '" + table + "'");
    }
    t.inline_data = Relation(t.def.schema);
    for (std::size_t r = 0; r < parsed.rows.size(); ++r) {
        QualityTrail trail = parsed.trails[r] ? *parsed.trails[r] : initial;
        if (config_.trail_limit) {
            trail = trail.trim(TrimSide::KeepNewest, *config_.trail_limit);
        }
        if (options.scheme == StorageScheme::Inline) {
            t.inline_data.add({std::move(parsed.rows[r]), std::move(trail)});
        } else {
            const Value &key = parsed.rows[r][*id_col];
            if (key.is_null()) {
                throw StorageError(at_line(parsed.lines[r], "null tuple id"));
            }
            if (!t.trail_map.emplace(key, std::move(trail)).second) {
                throw StorageError(at_line(parsed.lines[r], "duplicate tuple id " + key.to_string()));
            }
            t.rows.push_back(std::move(parsed.rows[r]));
        }
    }
    return install(std::move(t), options.replace);
}

const TableDef &Catalog::add_table(const std::string &table, const Relation &rel, StorageScheme scheme,
                                   std::optional<std::string> id_column, bool replace) {
    Table t;
    t.def = TableDef{table, rel.schema().with_qualifier(table), scheme, std::move(id_column)};
    t.inline_data = Relation(t.def.schema);
    std::optional<std::size_t> id_col;
    if (t.def.id_column) {
        id_col = t.def.schema.find(*t.def.id_column);
    }
    for (const auto &tuple : rel.tuples()) {
        QualityTrail trail = tuple.trail;
        if (config_.trail_limit) {
            trail = trail.trim(TrimSide::KeepNewest, *config_.trail_limit);
        }
        if (scheme == StorageScheme::Inline) {
            t.inline_data.add({tuple.values, std::move(trail)});
        } else {
            if (!id_col) {
                throw StorageError("off-table storage needs an id column for '" + table + "'");
            }
            if (!t.trail_map.emplace(tuple.values[*id_col], std::move(trail)).second) {
                throw StorageError("duplicate tuple id " + tuple.values[*id_col].to_string() + " in '" + table +
                                   "'");
            }
            t.rows.push_back(tuple.values);
        }
    }
    return install(std::move(t), replace);
}

std::unique_ptr<TupleSource> Catalog::scan(const std::string &table) const {
    auto it = tables_.find(table);
    if (it == tables_.end()) {
        throw PlanError("unknown table '" + table + "'");
    }
    const Table &t = it->second;
    if (t.def.scheme == StorageScheme::Inline) {
        return std::make_unique<InlineScan>(t.inline_data);
    }
    return std::make_unique<OffTableScan>(t.def.schema, t.rows, t.trail_map, t.def.schema.resolve(*t.def.id_column));
}

Relation Catalog::scan_all(const std::string &table) const {
    auto source = scan(table);
    return collect(*source);
}

Value Catalog::id_value(const Table &t, const std::string &text) const {
    if (!t.def.id_column) {
        if (auto v = to_integer(text); v && *v >= 0) {
            return Value(*v);
        }
        return Value::null();
    }
    ColumnType type = t.def.schema.column(t.def.schema.resolve(*t.def.id_column)).type;
    switch (type) {
    case ColumnType::Integer:
        if (auto v = to_integer(text)) return Value(*v);
        return Value::null();
    case ColumnType::Real:
        if (auto v = to_real(text)) return Value(*v);
        return Value::null();
    case ColumnType::Text:
        return Value(text);
    }
    return Value::null();
}

EventResult Catalog::apply_events(std::span<const QualityEvent> events) {
    EventResult result;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const QualityEvent &ev = events[i];
        auto reject = [&](std::string reason) { result.rejected.push_back({i, std::move(reason)}); };

        auto it = tables_.find(ev.table);
        if (it == tables_.end()) {
            reject("unknown table '" + ev.table + "'");
            continue;
        }
        Table &t = it->second;
        Value key = id_value(t, ev.tuple_id);
        auto pos = key.is_null() ? t.id_index.end() : t.id_index.find(key);
        if (pos == t.id_index.end()) {
            reject("unknown tuple id '" + ev.tuple_id + "' in table '" + ev.table + "'");
            continue;
        }

        const QualityTrail *current = nullptr;
        if (t.def.scheme == StorageScheme::Inline) {
            current = &t.inline_data.tuples()[pos->second].trail;
        } else {
            auto trail_it = t.trail_map.find(key);
            if (trail_it == t.trail_map.end()) {
                throw IntegrityError("no quality trail stored for tuple id " + key.to_string());
            }
            current = &trail_it->second;
        }

        const int prev = current->back().score.value();
        int score = prev;
        switch (ev.action) {
        case EventAction::Inc:
            score = std::min(prev + 1, config_.max_quality);
            break;
        case EventAction::Dec:
            score = std::max(prev - 1, 1);
            break;
        case EventAction::Hold:
            break;
        case EventAction::Set:
            if (!ev.score) {
                reject("set event without a score");
                continue;
            }
            if (*ev.score < 1 || *ev.score > config_.max_quality) {
                reject("score " + std::to_string(*ev.score) + " outside [1, " +
                       std::to_string(config_.max_quality) + "]");
                continue;
            }
            score = *ev.score;
            break;
        }

        QualityTrail updated = *current;
        try {
            updated = current->add_transition(make_transition(QualityScore(score), ev.timestamp, ev.event,
                                                              config_.max_quality));
        } catch (const MonotonicityError &e) {
            reject(e.what());
            continue;
        }
        if (config_.trail_limit) {
            updated = updated.trim(TrimSide::KeepNewest, *config_.trail_limit);
        }
        if (t.def.scheme == StorageScheme::Inline) {
            t.inline_data.set_trail(pos->second, std::move(updated));
        } else {
            t.trail_map.at(key) = std::move(updated);
        }
        ++result.applied;
    }
    return result;
}

std::vector<TableReport> Catalog::storage_report() const {
    std::vector<TableReport> out;
    for (const auto &[name, t] : tables_) {
        TableReport rep;
        rep.name = name;
        rep.scheme = t.def.scheme;
        auto add_trail = [&](const QualityTrail &trail) {
            rep.transitions += trail.size();
            rep.trail_bytes += serialize_trail(trail).size();
            rep.minimal_trail_bytes += serialize_trail_minimal(trail).size();
        };
        auto add_row = [&](const Row &row) {
            for (const auto &v : row) {
                if (!v.is_null()) {
                    rep.data_bytes += v.to_string().size();
                }
            }
        };
        if (t.def.scheme == StorageScheme::Inline) {
            rep.tuples = t.inline_data.size();
            for (const auto &tuple : t.inline_data.tuples()) {
                add_row(tuple.values);
                add_trail(tuple.trail);
            }
        } else {
            rep.tuples = t.rows.size();
            for (const auto &row : t.rows) {
                add_row(row);
            }
            for (const auto &[key, trail] : t.trail_map) {
                rep.id_bytes += key.to_string().size();
                add_trail(trail);
            }
        }
        rep.overhead_ratio = rep.data_bytes == 0 ? 0.0
                                                 : static_cast<double>(rep.trail_bytes + rep.id_bytes) /
                                                       static_cast<double>(rep.data_bytes);
        out.push_back(std::move(rep));
    }
    return out;
}

void Catalog::save(const std::filesystem::path &dir) const {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["tables"] = nlohmann::json::array();
    for (const auto &[name, t] : tables_) {
        nlohmann::json entry;
        entry["name"] = name;
        entry["scheme"] = scheme_name(t.def.scheme);
        entry["id_column"] = t.def.id_column ? nlohmann::json(*t.def.id_column) : nlohmann::json(nullptr);
        entry["columns"] = nlohmann::json::array();
        for (const auto &col : t.def.schema.columns()) {
            entry["columns"].push_back({{"name", col.name}, {"type", column_type_name(col.type)}});
        }
        manifest["tables"].push_back(std::move(entry));

        std::ofstream data(dir / (name + ".csv"), std::ios::binary | std::ios::trunc);
        if (t.def.scheme == StorageScheme::Inline) {
            save_relation(t.inline_data, data);
        } else {
            write_header(data, t.def.schema, false);
            for (const auto &row : t.rows) {
                write_row(data, row, nullptr);
            }
            std::ofstream side(dir / (name + ".qtrail.csv"), std::ios::binary | std::ios::trunc);
            side << "oid," << kTrailColumn << '\n';
            std::size_t id_col = t.def.schema.resolve(*t.def.id_column);
            for (const auto &row : t.rows) {
                const Value &key = row[id_col];
                side << encode_value(key) << ',' << csv::escape(serialize_trail(t.trail_map.at(key)), true) << '\n';
            }
            if (!side) {
                throw StorageError("failed writing " + (dir / (name + ".qtrail.csv")).string());
            }
        }
        if (!data) {
            throw StorageError("failed writing " + (dir / (name + ".csv")).string());
        }
    }
    std::ofstream out(dir / "catalog.json", std::ios::trunc);
    out << manifest.dump(2) << '\n';
    if (!out) {
        throw StorageError("failed writing catalog manifest in " + dir.string());
    }
}

Catalog Catalog::open(const std::filesystem::path &dir, EngineConfig config) {
    Catalog catalog(std::move(config));
    const auto manifest_path = dir / "catalog.json";
    if (!std::filesystem::exists(manifest_path)) {
        return catalog; // fresh catalog directory
    }
    std::ifstream in(manifest_path);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception &e) {
        throw StorageError("corrupt catalog manifest: " + std::string(e.what()));
    }
    for (const auto &entry : manifest.at("tables")) {
        const std::string name = entry.at("name").get<std::string>();
        std::vector<ColumnType> types;
        for (const auto &col : entry.at("columns")) {
            types.push_back(parse_column_type(col.at("type").get<std::string>()));
        }
        StorageScheme scheme = parse_scheme(entry.at("scheme").get<std::string>());
        std::optional<std::string> id_column;
        if (!entry.at("id_column").is_null()) {
            id_column = entry.at("id_column").get<std::string>();
        }

        std::ifstream data(dir / (name + ".csv"), std::ios::binary);
        if (!data) {
            throw StorageError("missing data file for table '" + name + "'");
        }
        ParsedCsv parsed = parse_csv(data, types, catalog.config_.max_quality);

        Table t;
        t.def = TableDef{name, make_schema(name, parsed.names, types), scheme, id_column};
        t.inline_data = Relation(t.def.schema);
        if (scheme == StorageScheme::Inline) {
            for (std::size_t r = 0; r < parsed.rows.size(); ++r) {
                if (!parsed.trails[r]) {
                    throw IntegrityError("row " + std::to_string(r + 1) + " of '" + name + "' has no quality trail");
                }
                t.inline_data.add({std::move(parsed.rows[r]), std::move(*parsed.trails[r])});
            }
        } else {
            t.rows = std::move(parsed.rows);
            std::ifstream side(dir / (name + ".qtrail.csv"), std::ios::binary);
            if (!side) {
                throw StorageError("missing trail file for table '" + name + "'");
            }
            std::size_t id_col = t.def.schema.resolve(*id_column);
            ParsedCsv trails = parse_csv(side, std::vector<ColumnType>{types[id_col]}, catalog.config_.max_quality);
            for (std::size_t r = 0; r < trails.rows.size(); ++r) {
                if (!trails.trails[r]) {
                    throw IntegrityError("trail file of '" + name + "' has an empty entry");
                }
                t.trail_map.emplace(trails.rows[r][0], std::move(*trails.trails[r]));
            }
        }
        catalog.install(std::move(t), false);
    }
    return catalog;
}

// ---------------------------------------------------------------------------
// Relation export and event files

void save_relation(const Relation &rel, std::ostream &out) {
    write_header(out, rel.schema(), true);
    for (const auto &t : rel.tuples()) {
        write_row(out, t.values, &t.trail);
    }
}

void save_relation(const Relation &rel, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw StorageError("cannot write " + path.string());
    }
    save_relation(rel, out);
    if (!out) {
        throw StorageError("failed writing " + path.string());
    }
}

std::vector<QualityEvent> read_events(std::istream &in) {
    csv::Reader reader(in);
    static const std::vector<std::string> expected = {"table", "tuple_id", "action", "score", "timestamp", "event"};
    std::vector<QualityEvent> events;
    try {
        auto header = reader.next();
        if (!header) {
            throw StorageError("event file has no header row");
        }
        std::vector<std::string> names;
        for (const auto &f : *header) {
            names.push_back(f.text);
        }
        if (names != expected) {
            throw StorageError("event file header must be table,tuple_id,action,score,timestamp,event");
        }
        while (auto rec = reader.next()) {
            if (rec->size() == 1 && rec->front().text.empty()) {
                continue;
            }
            const std::size_t line = reader.line();
            if (rec->size() != expected.size()) {
                throw StorageError(at_line(line, "expected 6 fields, found " + std::to_string(rec->size())));
            }
            QualityEvent ev;
            ev.table = (*rec)[0].text;
            ev.tuple_id = (*rec)[1].text;
            try {
                ev.action = parse_event_action((*rec)[2].text);
            } catch (const DomainError &e) {
                throw StorageError(at_line(line, e.what()));
            }
            const std::string &score = (*rec)[3].text;
            if (!score.empty()) {
                if (ev.action != EventAction::Set) {
                    throw StorageError(at_line(line, "score is only allowed for set events"));
                }
                auto v = to_integer(score);
                if (!v) {
                    throw StorageError(at_line(line, "invalid score '" + score + "'"));
                }
                ev.score = static_cast<int>(*v);
            } else if (ev.action == EventAction::Set) {
                throw StorageError(at_line(line, "set event needs a score"));
            }
            std::uint64_t ts{};
            const std::string &ts_text = (*rec)[4].text;
            auto [ptr, ec] = std::from_chars(ts_text.data(), ts_text.data() + ts_text.size(), ts);
            if (ts_text.empty() || ec != std::errc() || ptr != ts_text.data() + ts_text.size()) {
                throw StorageError(at_line(line, "invalid timestamp '" + ts_text + "'"));
            }
            ev.timestamp = Timestamp(ts);
            ev.event = (*rec)[5].text;
            events.push_back(std::move(ev));
        }
    } catch (const ParseError &e) {
        throw StorageError(e.what());
    }
    return events;
}

std::vector<QualityEvent> read_events(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StorageError("cannot open " + path.string());
    }
    return read_events(in);
}

void write_events(std::ostream &out, std::span<const QualityEvent> events) {
    out << "table,tuple_id,action,score,timestamp,event\n";
    for (const auto &ev : events) {
        csv::write_record(out, {csv::escape(ev.table), csv::escape(ev.tuple_id),
                                std::string(event_action_name(ev.action)), ev.score ? std::to_string(*ev.score) : "",
                                std::to_string(ev.timestamp.ticks()), csv::escape(ev.event)});
    }
}

} // namespace qtrail
