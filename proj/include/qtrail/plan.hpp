#pragma once

// Logical plans and their pull-based execution.
//
// Plans are JSON trees. Every node has an "op"; unary operators take their
// child under "input", binary ones under "left" and "right":
//
//   scan        {"table": name}
//   select      {"pred": P}
//   project     {"cols": [name, ...]}
//   join        {"on": P} or {"natural": true}
//   outer_join  {"on": P, "kind": "left" | "right" | "full"}
//   cross, union, intersect, difference
//   distinct
//   group       {"by": [name, ...], "aggs": [{"fn", "col", "as"}], "mode": "open" | "black"}
//
// P is {"cmp": op, "col": name, "lit": value}, {"cmp": op, "col": name,
// "col2": name}, {"and": [P...]}, {"or": [P...]} or {"not": P}.
//
// Validation errors are PlanErrors prefixed with the JSON path of the
// offending node, e.g. "$.input.left: unknown column 'x'".

#include "qtrail/aggregate.hpp"
#include "qtrail/algebra.hpp"
#include "qtrail/source.hpp"

#include <nlohmann/json_fwd.hpp>

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qtrail {

struct PlanNode {
    enum class Op { Scan, Select, Project, Join, OuterJoin, Cross, Union, Intersect, Difference, Distinct, Group };

    Op op = Op::Scan;
    std::string path = "$";
    std::string table;
    Predicate pred;
    bool natural = false;
    OuterKind outer = OuterKind::Left;
    std::vector<std::string> columns; // project columns or group keys
    std::vector<AggregatorSpec> aggs;
    AggregationMode mode = AggregationMode::Open;
    std::vector<PlanNode> children;

    static PlanNode scan(std::string table);
    static PlanNode select(PlanNode input, Predicate pred);
    static PlanNode project(PlanNode input, std::vector<std::string> columns);
    static PlanNode join(PlanNode left, PlanNode right, Predicate pred);
    static PlanNode natural_join(PlanNode left, PlanNode right);
    static PlanNode outer_join(PlanNode left, PlanNode right, Predicate pred, OuterKind kind);
    static PlanNode binary(Op op, PlanNode left, PlanNode right);
    static PlanNode distinct(PlanNode input);
    static PlanNode group(PlanNode input, std::vector<std::string> by, std::vector<AggregatorSpec> aggs,
                          AggregationMode mode = AggregationMode::Open);
};

std::string_view op_name(PlanNode::Op op);

PlanNode parse_plan(const nlohmann::json &json);
// PlanError for malformed JSON text.
PlanNode parse_plan(std::string_view text);
Predicate parse_predicate(const nlohmann::json &json, const std::string &path = "$");

nlohmann::json plan_to_json(const PlanNode &plan);

struct PlanOptions {
    ExecOptions exec;
    GroupConfig group;
    // Overrides every group node's own mode when set.
    std::optional<AggregationMode> mode_override;
};

// Builds the operator pipeline. Schemas are resolved eagerly, so unknown
// tables and columns are reported here rather than during iteration.
// Metrics of every group node are accumulated into metrics when given.
std::unique_ptr<TupleSource> build_pipeline(const PlanNode &plan, const TableProvider &tables,
                                            const PlanOptions &options = {}, GroupMetrics *metrics = nullptr);

Relation execute_plan(const PlanNode &plan, const TableProvider &tables, const PlanOptions &options = {},
                      GroupMetrics *metrics = nullptr);

} // namespace qtrail
