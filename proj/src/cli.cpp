#include "qtrail/cli.hpp"

#include "qtrail/bench.hpp"
#include "qtrail/error.hpp"
#include "qtrail/plan.hpp"
#include "qtrail/store.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

namespace qtrail {

namespace {

// Usage problems detected after CLI11 parsing (bad limit strings etc.).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::optional<std::size_t> parse_limit(const std::string &text, const char *flag) {
    if (text == "unlimited") {
        return std::nullopt;
    }
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &pos);
    } catch (const std::exception &) {
        pos = 0;
    }
    if (pos != text.size() || text.empty() || text[0] == '-' || v == 0) {
        throw UsageError(std::string(flag) + " expects a positive integer or 'unlimited', got '" + text + "'");
    }
    return static_cast<std::size_t>(v);
}

std::vector<std::optional<std::size_t>> parse_limit_list(const std::string &text, const char *flag) {
    std::vector<std::optional<std::size_t>> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_limit(item, flag));
    }
    if (out.empty()) {
        throw UsageError(std::string(flag) + " needs at least one value");
    }
    return out;
}

std::string read_file(const std::string &path) {
    if (path == "-") {
        return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StorageError("cannot open " + path);
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void print_pretty(const Relation &rel, std::ostream &out) {
    const Schema &schema = rel.schema();
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header;
    for (std::size_t i = 0; i < schema.size(); ++i) {
        header.push_back(schema.display_name(i));
    }
    header.emplace_back(kTrailColumn);
    cells.push_back(header);
    for (const auto &t : rel.tuples()) {
        std::vector<std::string> row;
        for (const auto &v : t.values) {
            row.push_back(v.to_string());
        }
        row.push_back(serialize_trail(t.trail));
        cells.push_back(std::move(row));
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto &row : cells) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            width[i] = std::max(width[i], row[i].size());
        }
    }
    auto emit = [&](const std::vector<std::string> &row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? " | " : "") << row[i];
            if (i + 1 < row.size()) {
                out << std::string(width[i] - row[i].size(), ' ');
            }
        }
        out << '\n';
    };
    emit(cells[0]);
    std::size_t rule = 0;
    for (std::size_t w : width) {
        rule += w + 3;
    }
    out << std::string(rule > 3 ? rule - 3 : 0, '-') << '\n';
    for (std::size_t r = 1; r < cells.size(); ++r) {
        emit(cells[r]);
    }
    out << '(' << rel.size() << (rel.size() == 1 ? " row" : " rows") << ")\n";
}

struct Settings {
    std::string catalog_dir = "qtrail-catalog";
    int max_quality = kDefaultMaxQuality;
    std::string trail_limit = "unlimited";
    std::string buffer_limit = "unlimited";
    bool no_buffer_clean = false;
    std::string format = "csv";
    std::uint64_t seed = 1;

    EngineConfig engine() const {
        EngineConfig config;
        config.max_quality = max_quality;
        config.trail_limit = parse_limit(trail_limit, "--trail-limit");
        if (auto b = parse_limit(buffer_limit, "--buffer-limit")) {
            config.buffer_limit = *b;
        }
        config.buffer_clean_enabled = !no_buffer_clean;
        try {
            config.validate();
        } catch (const DomainError &e) {
            throw UsageError(e.what());
        }
        return config;
    }
};

void add_common_flags(CLI::App &cmd, Settings &s) {
    cmd.add_option("--catalog", s.catalog_dir, "Catalog directory");
    cmd.add_option("--max-quality", s.max_quality, "Highest quality score")->check(CLI::PositiveNumber);
    cmd.add_option("--trail-limit", s.trail_limit, "Transitions kept per trail (N or unlimited)");
    cmd.add_option("--buffer-limit", s.buffer_limit, "Buffered transitions before spilling (N or unlimited)");
    cmd.add_flag("--no-buffer-clean", s.no_buffer_clean, "Spill without re-polling aggregators first");
    cmd.add_option("--format", s.format, "Output format")->check(CLI::IsMember({"csv", "pretty"}));
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Relational query engine with per-tuple quality trails", "qtrail"};
    app.require_subcommand(1);
    Settings s;

    // load
    auto *load = app.add_subcommand("load", "Load a CSV file into a table");
    std::string load_file;
    std::string load_table;
    std::string load_scheme = "inline";
    std::string load_id;
    std::optional<int> default_score;
    std::uint64_t default_ts = 0;
    bool replace = false;
    load->add_option("file", load_file, "CSV file")->required();
    load->add_option("--table", load_table, "Table name (defaults to the file stem)");
    load->add_option("--scheme", load_scheme, "Trail storage scheme")->check(CLI::IsMember({"inline", "off-table"}));
    load->add_option("--id-col", load_id, "Tuple id column");
    load->add_option("--default-score", default_score, "Initial score for rows without a trail");
    load->add_option("--default-ts", default_ts, "Initial timestamp for rows without a trail");
    load->add_flag("--replace", replace, "Replace an existing table");
    add_common_flags(*load, s);

    // events
    auto *events = app.add_subcommand("events", "Replay a quality event file");
    std::string events_file;
    events->add_option("file", events_file, "Event CSV file")->required();
    add_common_flags(*events, s);

    // query
    auto *query = app.add_subcommand("query", "Execute a JSON plan");
    std::string plan_file;
    std::string agg_mode;
    std::string output;
    query->add_option("plan", plan_file, "Plan file ('-' for stdin)")->required();
    query->add_option("--agg-mode", agg_mode, "Override group modes")->check(CLI::IsMember({"open", "black"}));
    query->add_option("--output", output, "Write results to a file");
    add_common_flags(*query, s);

    // report
    auto *report = app.add_subcommand("report", "Print trail storage statistics");
    add_common_flags(*report, s);

    // save
    auto *save = app.add_subcommand("save", "Export a table with its trails as CSV");
    std::string save_table;
    std::string save_output;
    save->add_option("table", save_table, "Table name")->required();
    save->add_option("--output", save_output, "Destination file (stdout when absent)");
    add_common_flags(*save, s);

    // bench
    auto *bench = app.add_subcommand("bench", "Measure trail propagation overhead on synthetic data");
    BenchOptions bench_opts;
    std::string bench_classes = "sp,join,agg-count,agg-minmax";
    std::string bench_trail_limits = "unlimited,3";
    std::string bench_buffer_limits = "unlimited,10";
    bench->add_option("--seed", s.seed, "Generator seed");
    bench->add_option("--tuples", bench_opts.tuples, "Synthetic tuple count");
    bench->add_option("--groups", bench_opts.groups, "Distinct group keys")->check(CLI::PositiveNumber);
    bench->add_option("--trail-length", bench_opts.max_trail_length, "Maximum generated trail length")
        ->check(CLI::PositiveNumber);
    bench->add_option("--repeat", bench_opts.repeat, "Timing repetitions")->check(CLI::PositiveNumber);
    bench->add_option("--classes", bench_classes, "Comma-separated query classes");
    bench->add_option("--trail-limits", bench_trail_limits, "Comma-separated trail limits");
    bench->add_option("--buffer-limits", bench_buffer_limits, "Comma-separated buffer limits");
    add_common_flags(*bench, s);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        const EngineConfig config = s.engine();
        if (s.format != "csv" && s.format != "pretty") {
            throw UsageError("unknown format '" + s.format + "'");
        }

        if (*load) {
            Catalog catalog = Catalog::open(s.catalog_dir, config);
            LoadOptions opts;
            opts.scheme = parse_scheme(load_scheme);
            if (!load_id.empty()) {
                opts.id_column = load_id;
            }
            opts.default_score = default_score;
            opts.default_timestamp = Timestamp(default_ts);
            opts.replace = replace;
            const std::string table =
                load_table.empty() ? std::filesystem::path(load_file).stem().string() : load_table;
            catalog.load_csv(std::filesystem::path(load_file), table, opts);
            catalog.save(s.catalog_dir);
            out << "loaded " << catalog.scan_all(table).size() << " tuples into " << table << '\n';
            return kExitOk;
        }

        if (*events) {
            Catalog catalog = Catalog::open(s.catalog_dir, config);
            auto list = read_events(std::filesystem::path(events_file));
            EventResult result = catalog.apply_events(list);
            for (const auto &r : result.rejected) {
                err << "rejected event " << r.index + 1 << ": " << r.reason << '\n';
            }
            catalog.save(s.catalog_dir);
            out << "applied " << result.applied << ", rejected " << result.rejected.size() << '\n';
            return kExitOk;
        }

        if (*query) {
            Catalog catalog = Catalog::open(s.catalog_dir, config);
            PlanNode plan = parse_plan(read_file(plan_file));
            PlanOptions opts;
            opts.group.max_quality = config.max_quality;
            opts.group.buffer_limit = config.buffer_limit;
            opts.group.buffer_clean_enabled = config.buffer_clean_enabled;
            if (!agg_mode.empty()) {
                opts.mode_override = agg_mode == "black" ? AggregationMode::Black : AggregationMode::Open;
            }
            GroupMetrics metrics;
            Relation result = execute_plan(plan, catalog, opts, &metrics);
            std::ofstream file;
            std::ostream *dest = &out;
            if (!output.empty()) {
                file.open(output, std::ios::binary | std::ios::trunc);
                if (!file) {
                    throw StorageError("cannot write " + output);
                }
                dest = &file;
            }
            if (s.format == "pretty") {
                print_pretty(result, *dest);
            } else {
                save_relation(result, *dest);
            }
            err << "metrics: buffer_clean_calls=" << metrics.buffer_clean_calls
                << " spill_count=" << metrics.spill_count
                << " max_buffered_transitions=" << metrics.max_buffered_transitions << '\n';
            return kExitOk;
        }

        if (*report) {
            Catalog catalog = Catalog::open(s.catalog_dir, config);
            out << "table,scheme,tuples,transitions,trail_bytes,minimal_trail_bytes,data_bytes,id_bytes,"
                   "overhead_ratio\n";
            for (const auto &r : catalog.storage_report()) {
                char ratio[32];
                std::snprintf(ratio, sizeof ratio, "%.6f", r.overhead_ratio);
                out << r.name << ',' << scheme_name(r.scheme) << ',' << r.tuples << ',' << r.transitions << ','
                    << r.trail_bytes << ',' << r.minimal_trail_bytes << ',' << r.data_bytes << ',' << r.id_bytes
                    << ',' << ratio << '\n';
            }
            return kExitOk;
        }

        if (*save) {
            Catalog catalog = Catalog::open(s.catalog_dir, config);
            Relation rel = catalog.scan_all(save_table);
            if (save_output.empty()) {
                save_relation(rel, out);
            } else {
                save_relation(rel, std::filesystem::path(save_output));
            }
            return kExitOk;
        }

        if (*bench) {
            bench_opts.seed = s.seed;
            bench_opts.max_quality = config.max_quality;
            const std::vector<std::string> known = BenchOptions{}.classes;
            bench_opts.classes.clear();
            std::stringstream ss(bench_classes);
            for (std::string c; std::getline(ss, c, ',');) {
                if (std::find(known.begin(), known.end(), c) == known.end()) {
                    throw UsageError("--classes: unknown query class '" + c + "'");
                }
                bench_opts.classes.push_back(c);
            }
            bench_opts.trail_limits = parse_limit_list(bench_trail_limits, "--trail-limits");
            bench_opts.buffer_limits = parse_limit_list(bench_buffer_limits, "--buffer-limits");
            run_bench(bench_opts, out);
            return kExitOk;
        }
    } catch (const UsageError &e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IntegrityError &e) {
        err << "error: " << e.what() << '\n';
        return kExitInternal;
    } catch (const InternalError &e) {
        err << "error: " << e.what() << '\n';
        return kExitInternal;
    } catch (const ProtocolError &e) {
        err << "error: " << e.what() << '\n';
        return kExitInternal;
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::filesystem::filesystem_error &e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception &e) {
        err << "error: internal: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitUsage;
}

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return run_cli(args, out, err);
}

} // namespace qtrail
