#include "qtrail/plan.hpp"

#include "qtrail/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <functional>

namespace qtrail {

using json = nlohmann::json;

namespace {

struct OpEntry {
    PlanNode::Op op;
    std::string_view name;
    int arity;
};

constexpr OpEntry kOps[] = {
    {PlanNode::Op::Scan, "scan", 0},           {PlanNode::Op::Select, "select", 1},
    {PlanNode::Op::Project, "project", 1},     {PlanNode::Op::Join, "join", 2},
    {PlanNode::Op::OuterJoin, "outer_join", 2}, {PlanNode::Op::Cross, "cross", 2},
    {PlanNode::Op::Union, "union", 2},         {PlanNode::Op::Intersect, "intersect", 2},
    {PlanNode::Op::Difference, "difference", 2}, {PlanNode::Op::Distinct, "distinct", 1},
    {PlanNode::Op::Group, "group", 1},
};

const OpEntry &entry_of(PlanNode::Op op) {
    return *std::find_if(std::begin(kOps), std::end(kOps), [op](const OpEntry &e) { return e.op == op; });
}

[[noreturn]] void fail(const std::string &path, const std::string &what) { throw PlanError(path + ": " + what); }

const json &member(const json &node, const char *key, const std::string &path) {
    auto it = node.find(key);
    if (it == node.end()) {
        fail(path, std::string("missing \"") + key + "\"");
    }
    return *it;
}

std::string string_member(const json &node, const char *key, const std::string &path) {
    const json &v = member(node, key, path);
    if (!v.is_string()) {
        fail(path, std::string("\"") + key + "\" must be a string");
    }
    return v.get<std::string>();
}

std::vector<std::string> string_list(const json &node, const char *key, const std::string &path) {
    const json &v = member(node, key, path);
    if (!v.is_array()) {
        fail(path, std::string("\"") + key + "\" must be an array of strings");
    }
    std::vector<std::string> out;
    for (const auto &item : v) {
        if (!item.is_string()) {
            fail(path, std::string("\"") + key + "\" must be an array of strings");
        }
        out.push_back(item.get<std::string>());
    }
    return out;
}

Value literal_value(const json &v, const std::string &path) {
    if (v.is_null()) return Value::null();
    if (v.is_number_integer()) return Value(v.get<std::int64_t>());
    if (v.is_number_float()) return Value(v.get<double>());
    if (v.is_string()) return Value(v.get<std::string>());
    fail(path, "\"lit\" must be a number, string or null");
}

json literal_json(const Value &v) {
    if (v.is_null()) return nullptr;
    if (v.is_integer()) return v.as_integer();
    if (v.is_real()) return v.as_real();
    return v.as_text();
}

json predicate_json(const Predicate &p) {
    switch (p.kind) {
    case Predicate::Kind::True:
        return json::object({{"and", json::array()}});
    case Predicate::Kind::Compare: {
        json out = {{"cmp", compare_op_symbol(p.op)}, {"col", p.column}};
        if (p.other_column) {
            out["col2"] = *p.other_column;
        } else {
            out["lit"] = literal_json(p.literal);
        }
        return out;
    }
    case Predicate::Kind::And:
    case Predicate::Kind::Or: {
        json parts = json::array();
        for (const auto &c : p.children) {
            parts.push_back(predicate_json(c));
        }
        return json::object({{p.kind == Predicate::Kind::And ? "and" : "or", parts}});
    }
    case Predicate::Kind::Not:
        return json::object({{"not", predicate_json(p.children.at(0))}});
    }
    return nullptr;
}

} // namespace

std::string_view op_name(PlanNode::Op op) { return entry_of(op).name; }

PlanNode PlanNode::scan(std::string table) {
    PlanNode n;
    n.op = Op::Scan;
    n.table = std::move(table);
    return n;
}

PlanNode PlanNode::select(PlanNode input, Predicate pred) {
    PlanNode n;
    n.op = Op::Select;
    n.pred = std::move(pred);
    n.children.push_back(std::move(input));
    return n;
}

PlanNode PlanNode::project(PlanNode input, std::vector<std::string> columns) {
    PlanNode n;
    n.op = Op::Project;
    n.columns = std::move(columns);
    n.children.push_back(std::move(input));
    return n;
}

PlanNode PlanNode::join(PlanNode left, PlanNode right, Predicate pred) {
    PlanNode n = binary(Op::Join, std::move(left), std::move(right));
    n.pred = std::move(pred);
    return n;
}

PlanNode PlanNode::natural_join(PlanNode left, PlanNode right) {
    PlanNode n = binary(Op::Join, std::move(left), std::move(right));
    n.natural = true;
    return n;
}

PlanNode PlanNode::outer_join(PlanNode left, PlanNode right, Predicate pred, OuterKind kind) {
    PlanNode n = binary(Op::OuterJoin, std::move(left), std::move(right));
    n.pred = std::move(pred);
    n.outer = kind;
    return n;
}

PlanNode PlanNode::binary(Op op, PlanNode left, PlanNode right) {
    PlanNode n;
    n.op = op;
    n.children.push_back(std::move(left));
    n.children.push_back(std::move(right));
    return n;
}

PlanNode PlanNode::distinct(PlanNode input) {
    PlanNode n;
    n.op = Op::Distinct;
    n.children.push_back(std::move(input));
    return n;
}

PlanNode PlanNode::group(PlanNode input, std::vector<std::string> by, std::vector<AggregatorSpec> aggs,
                         AggregationMode mode) {
    PlanNode n;
    n.op = Op::Group;
    n.columns = std::move(by);
    n.aggs = std::move(aggs);
    n.mode = mode;
    n.children.push_back(std::move(input));
    return n;
}

// ---------------------------------------------------------------------------
// JSON parsing

Predicate parse_predicate(const json &node, const std::string &path) {
    if (!node.is_object()) {
        fail(path, "predicate must be an object");
    }
    if (node.contains("and") || node.contains("or")) {
        const bool is_and = node.contains("and");
        const char *key = is_and ? "and" : "or";
        const json &parts = node.at(key);
        if (!parts.is_array()) {
            fail(path, std::string("\"") + key + "\" must be an array");
        }
        std::vector<Predicate> children;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            children.push_back(parse_predicate(parts[i], path + "." + key + "[" + std::to_string(i) + "]"));
        }
        return is_and ? Predicate::all_of(std::move(children)) : Predicate::any_of(std::move(children));
    }
    if (node.contains("not")) {
        return Predicate::negate(parse_predicate(node.at("not"), path + ".not"));
    }
    if (node.contains("cmp")) {
        const std::string symbol = string_member(node, "cmp", path);
        CompareOp op{};
        try {
            op = parse_compare_op(symbol);
        } catch (const Error &e) {
            fail(path, e.what());
        }
        std::string column = string_member(node, "col", path);
        if (node.contains("col2")) {
            return Predicate::compare_columns(std::move(column), op, string_member(node, "col2", path));
        }
        return Predicate::compare(std::move(column), op, literal_value(member(node, "lit", path), path));
    }
    fail(path, "predicate needs one of \"cmp\", \"and\", \"or\", \"not\"");
}

namespace {

PlanNode parse_node(const json &node, const std::string &path) {
    if (!node.is_object()) {
        fail(path, "plan node must be an object");
    }
    const std::string op = string_member(node, "op", path);
    auto it = std::find_if(std::begin(kOps), std::end(kOps), [&](const OpEntry &e) { return e.name == op; });
    if (it == std::end(kOps)) {
        fail(path, "unknown op \"" + op + "\"");
    }
    PlanNode out;
    out.op = it->op;
    out.path = path;
    if (it->arity == 1) {
        out.children.push_back(parse_node(member(node, "input", path), path + ".input"));
    } else if (it->arity == 2) {
        out.children.push_back(parse_node(member(node, "left", path), path + ".left"));
        out.children.push_back(parse_node(member(node, "right", path), path + ".right"));
    }

    switch (out.op) {
    case PlanNode::Op::Scan:
        out.table = string_member(node, "table", path);
        break;
    case PlanNode::Op::Select:
        out.pred = parse_predicate(member(node, "pred", path), path + ".pred");
        break;
    case PlanNode::Op::Project:
        out.columns = string_list(node, "cols", path);
        break;
    case PlanNode::Op::Join:
        if (node.contains("natural")) {
            if (!node.at("natural").is_boolean()) {
                fail(path, "\"natural\" must be a boolean");
            }
            out.natural = node.at("natural").get<bool>();
        }
        if (!out.natural) {
            out.pred = parse_predicate(member(node, "on", path), path + ".on");
        } else if (node.contains("on")) {
            fail(path, "join cannot have both \"on\" and \"natural\"");
        }
        break;
    case PlanNode::Op::OuterJoin: {
        out.pred = parse_predicate(member(node, "on", path), path + ".on");
        const std::string kind = string_member(node, "kind", path);
        if (kind == "left") {
            out.outer = OuterKind::Left;
        } else if (kind == "right") {
            out.outer = OuterKind::Right;
        } else if (kind == "full") {
            out.outer = OuterKind::Full;
        } else {
            fail(path, "unknown outer join kind \"" + kind + "\"");
        }
        break;
    }
    case PlanNode::Op::Group: {
        out.columns = node.contains("by") ? string_list(node, "by", path) : std::vector<std::string>{};
        const json &aggs = member(node, "aggs", path);
        if (!aggs.is_array()) {
            fail(path, "\"aggs\" must be an array");
        }
        for (std::size_t i = 0; i < aggs.size(); ++i) {
            const std::string agg_path = path + ".aggs[" + std::to_string(i) + "]";
            if (!aggs[i].is_object()) {
                fail(agg_path, "aggregate must be an object");
            }
            AggregatorSpec spec;
            spec.function = string_member(aggs[i], "fn", agg_path);
            if (aggs[i].contains("col")) {
                spec.column = string_member(aggs[i], "col", agg_path);
            }
            if (aggs[i].contains("as")) {
                spec.output_name = string_member(aggs[i], "as", agg_path);
            }
            out.aggs.push_back(std::move(spec));
        }
        if (node.contains("mode")) {
            const std::string mode = string_member(node, "mode", path);
            if (mode == "open") {
                out.mode = AggregationMode::Open;
            } else if (mode == "black") {
                out.mode = AggregationMode::Black;
            } else {
                fail(path, "unknown aggregation mode \"" + mode + "\"");
            }
        }
        break;
    }
    default:
        break;
    }
    return out;
}

} // namespace

PlanNode parse_plan(const json &node) { return parse_node(node, "$"); }

PlanNode parse_plan(std::string_view text) {
    json node;
    try {
        node = json::parse(text.begin(), text.end());
    } catch (const json::parse_error &e) {
        throw PlanError(std::string("$: invalid JSON: ") + e.what());
    }
    return parse_plan(node);
}

json plan_to_json(const PlanNode &plan) {
    json out = {{"op", op_name(plan.op)}};
    const int arity = entry_of(plan.op).arity;
    if (arity == 1) {
        out["input"] = plan_to_json(plan.children.at(0));
    } else if (arity == 2) {
        out["left"] = plan_to_json(plan.children.at(0));
        out["right"] = plan_to_json(plan.children.at(1));
    }
    switch (plan.op) {
    case PlanNode::Op::Scan:
        out["table"] = plan.table;
        break;
    case PlanNode::Op::Select:
        out["pred"] = predicate_json(plan.pred);
        break;
    case PlanNode::Op::Project:
        out["cols"] = plan.columns;
        break;
    case PlanNode::Op::Join:
        if (plan.natural) {
            out["natural"] = true;
        } else {
            out["on"] = predicate_json(plan.pred);
        }
        break;
    case PlanNode::Op::OuterJoin:
        out["on"] = predicate_json(plan.pred);
        out["kind"] = plan.outer == OuterKind::Left ? "left" : plan.outer == OuterKind::Right ? "right" : "full";
        break;
    case PlanNode::Op::Group: {
        out["by"] = plan.columns;
        json aggs = json::array();
        for (const auto &a : plan.aggs) {
            json agg = {{"fn", a.function}};
            if (!a.column.empty()) {
                agg["col"] = a.column;
            }
            if (!a.output_name.empty()) {
                agg["as"] = a.output_name;
            }
            aggs.push_back(std::move(agg));
        }
        out["aggs"] = std::move(aggs);
        out["mode"] = plan.mode == AggregationMode::Open ? "open" : "black";
        break;
    }
    default:
        break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Execution

namespace {

class SelectSource final : public TupleSource {
public:
    SelectSource(std::unique_ptr<TupleSource> input, const Predicate &pred)
        : input_(std::move(input)), pred_(pred, input_->schema()) {}

    const Schema &schema() const override { return input_->schema(); }

    std::optional<QTuple> next() override {
        while (auto t = input_->next()) {
            if (pred_.matches(t->values)) {
                return t;
            }
        }
        return std::nullopt;
    }

private:
    std::unique_ptr<TupleSource> input_;
    BoundPredicate pred_;
};

class ProjectSource final : public TupleSource {
public:
    ProjectSource(std::unique_ptr<TupleSource> input, const std::vector<std::string> &columns)
        : input_(std::move(input)) {
        std::vector<Column> cols;
        for (const auto &name : columns) {
            indices_.push_back(input_->schema().resolve(name));
            cols.push_back(input_->schema().column(indices_.back()));
        }
        schema_ = Schema(std::move(cols));
    }

    const Schema &schema() const override { return schema_; }

    std::optional<QTuple> next() override {
        auto t = input_->next();
        if (!t) {
            return std::nullopt;
        }
        Row row;
        row.reserve(indices_.size());
        for (std::size_t i : indices_) {
            row.push_back(t->values[i]);
        }
        return QTuple{std::move(row), std::move(t->trail)};
    }

private:
    std::unique_ptr<TupleSource> input_;
    std::vector<std::size_t> indices_;
    Schema schema_;
};

// Blocking operator: drains its inputs on the first pull, then replays the
// computed relation.
class MaterializedSource final : public TupleSource {
public:
    using Compute = std::function<Relation(std::vector<Relation> &)>;

    MaterializedSource(std::vector<std::unique_ptr<TupleSource>> inputs, Compute compute)
        : inputs_(std::move(inputs)), compute_(std::move(compute)) {
        // Running the operator on empty inputs validates it and fixes the schema.
        std::vector<Relation> empty;
        for (const auto &in : inputs_) {
            empty.emplace_back(in->schema());
        }
        schema_ = compute_(empty).schema();
    }

    const Schema &schema() const override { return schema_; }

    std::optional<QTuple> next() override {
        if (!result_) {
            std::vector<Relation> rels;
            for (auto &in : inputs_) {
                rels.push_back(collect(*in));
            }
            result_ = compute_(rels);
        }
        if (pos_ >= result_->size()) {
            return std::nullopt;
        }
        return result_->tuples()[pos_++];
    }

private:
    std::vector<std::unique_ptr<TupleSource>> inputs_;
    Compute compute_;
    Schema schema_;
    std::optional<Relation> result_;
    std::size_t pos_ = 0;
};

class GroupSource final : public TupleSource {
public:
    GroupSource(std::unique_ptr<TupleSource> input, const PlanNode &node, GroupConfig config, GroupMetrics *metrics)
        : input_(std::move(input)),
          op_(std::make_unique<GroupingOperator>(input_->schema(), node.columns, node.aggs, config)),
          metrics_(metrics) {}

    const Schema &schema() const override { return op_->output_schema(); }

    std::optional<QTuple> next() override {
        if (!result_) {
            while (auto t = input_->next()) {
                op_->consume(*t);
            }
            result_ = op_->finish();
            if (metrics_) {
                const GroupMetrics &m = op_->metrics();
                metrics_->buffer_clean_calls += m.buffer_clean_calls;
                metrics_->spill_count += m.spill_count;
                metrics_->spilled_trails += m.spilled_trails;
                metrics_->max_buffered_transitions =
                    std::max(metrics_->max_buffered_transitions, m.max_buffered_transitions);
            }
        }
        if (pos_ >= result_->size()) {
            return std::nullopt;
        }
        return result_->tuples()[pos_++];
    }

private:
    std::unique_ptr<TupleSource> input_;
    std::unique_ptr<GroupingOperator> op_;
    GroupMetrics *metrics_;
    std::optional<Relation> result_;
    std::size_t pos_ = 0;
};

std::unique_ptr<TupleSource> make_node(const PlanNode &node, std::vector<std::unique_ptr<TupleSource>> inputs,
                                       const TableProvider &tables, const PlanOptions &options,
                                       GroupMetrics *metrics) {
    using Op = PlanNode::Op;
    const ExecOptions exec = options.exec;
    auto binary = [&](auto fn) {
        return std::make_unique<MaterializedSource>(
            std::move(inputs), [fn, exec](std::vector<Relation> &r) { return fn(r[0], r[1], exec); });
    };
    switch (node.op) {
    case Op::Scan:
        return tables.scan(node.table);
    case Op::Select:
        return std::make_unique<SelectSource>(std::move(inputs[0]), node.pred);
    case Op::Project:
        return std::make_unique<ProjectSource>(std::move(inputs[0]), node.columns);
    case Op::Join:
        if (node.natural) {
            return binary([](const Relation &l, const Relation &r, const ExecOptions &o) {
                return natural_join(l, r, o);
            });
        } else {
            Predicate pred = node.pred;
            return binary([pred](const Relation &l, const Relation &r, const ExecOptions &o) {
                return theta_join(l, r, pred, o);
            });
        }
    case Op::OuterJoin: {
        Predicate pred = node.pred;
        OuterKind kind = node.outer;
        return binary([pred, kind](const Relation &l, const Relation &r, const ExecOptions &o) {
            return outer_join(l, r, pred, kind, o);
        });
    }
    case Op::Cross:
        return binary(
            [](const Relation &l, const Relation &r, const ExecOptions &o) { return cross_product(l, r, o); });
    case Op::Union:
        return binary([](const Relation &l, const Relation &r, const ExecOptions &o) { return union_of(l, r, o); });
    case Op::Intersect:
        return binary([](const Relation &l, const Relation &r, const ExecOptions &o) { return intersect(l, r, o); });
    case Op::Difference:
        return binary(
            [](const Relation &l, const Relation &r, const ExecOptions &o) { return difference(l, r, o); });
    case Op::Distinct:
        return std::make_unique<MaterializedSource>(
            std::move(inputs), [exec](std::vector<Relation> &r) { return distinct(r[0], exec); });
    case Op::Group: {
        GroupConfig config = options.group;
        config.mode = options.mode_override.value_or(node.mode);
        config.propagate_trails = exec.propagate_trails;
        return std::make_unique<GroupSource>(std::move(inputs[0]), node, config, metrics);
    }
    }
    throw InternalError("unhandled plan operator");
}

} // namespace

std::unique_ptr<TupleSource> build_pipeline(const PlanNode &plan, const TableProvider &tables,
                                            const PlanOptions &options, GroupMetrics *metrics) {
    const std::size_t arity = static_cast<std::size_t>(entry_of(plan.op).arity);
    if (plan.children.size() != arity) {
        fail(plan.path, std::string(op_name(plan.op)) + " expects " + std::to_string(arity) + " input(s)");
    }
    std::vector<std::unique_ptr<TupleSource>> inputs;
    for (const auto &child : plan.children) {
        inputs.push_back(build_pipeline(child, tables, options, metrics));
    }
    try {
        return make_node(plan, std::move(inputs), tables, options, metrics);
    } catch (const PlanError &e) {
        fail(plan.path, e.what());
    }
}

Relation execute_plan(const PlanNode &plan, const TableProvider &tables, const PlanOptions &options,
                      GroupMetrics *metrics) {
    auto pipeline = build_pipeline(plan, tables, options, metrics);
    return collect(*pipeline);
}

} // namespace qtrail
