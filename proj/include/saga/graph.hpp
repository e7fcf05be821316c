#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "saga/txlog.hpp"

namespace saga {

// Dependency DAG over the COMPLETED records of a run. An edge a -> b means
// "b depends on a". Edges always point from an earlier record_id to a later
// one, so the graph is acyclic by construction.
struct ExecutionGraph {
    std::vector<std::int64_t> nodes;                           // ascending record ids
    std::vector<std::pair<std::int64_t, std::int64_t>> edges;  // (from, to), from < to
};

// Rebuilds the graph from a full log sequence. Nodes are the COMPLETED
// records; PENDING, FAILED and already-COMPENSATED records never enter the
// plan, so a re-entrant rollback cannot double-compensate.
//
// Edge rules:
//   data rule:     a -> b when a leaf value of a.result reappears as a leaf
//                  value of b.params (numbers and strings of length >= 3);
//   fallback rule: when the data rule gives b no incoming edge and b is not
//                  the first node, b depends on its immediate predecessor,
//                  which degrades branchless runs to strict log order.
ExecutionGraph build_graph(const RecordSeq& records);

// Total compensation order: for every edge a -> b, b is placed before a.
// Unconstrained ties break by descending record_id, i.e. most recent first.
std::vector<std::int64_t> rollback_order(const ExecutionGraph& graph);

// Graphviz dot rendering for debugging (`--export-graph`).
std::string to_dot(const ExecutionGraph& graph, const RecordSeq& records);

}  // namespace saga
