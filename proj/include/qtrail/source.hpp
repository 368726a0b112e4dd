#pragma once

#include "qtrail/relation.hpp"

#include <memory>
#include <optional>
#include <string>

namespace qtrail {

// Pull-based tuple stream.
class TupleSource {
public:
    virtual ~TupleSource() = default;
    virtual const Schema &schema() const = 0;
    virtual std::optional<QTuple> next() = 0;
};

// Anything that can open a scan over a named table.
class TableProvider {
public:
    virtual ~TableProvider() = default;
    // PlanError for unknown tables.
    virtual std::unique_ptr<TupleSource> scan(const std::string &table) const = 0;
};

// Drains a stream into a relation.
Relation collect(TupleSource &source);

} // namespace qtrail
