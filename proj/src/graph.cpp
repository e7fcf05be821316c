#include "saga/graph.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "saga/errors.hpp"

namespace saga {

ExecutionGraph build_graph(const RecordSeq& records) {
    ExecutionGraph graph;
    std::vector<const ToolCallRecord*> completed;
    for (const auto& rec : records) {
        if (rec.status == RecordStatus::Completed) {
            completed.push_back(&rec);
            graph.nodes.push_back(rec.record_id);
        }
    }

    std::vector<std::set<Value>> result_leaves(completed.size());
    for (std::size_t i = 0; i < completed.size(); ++i) {
        if (completed[i]->result.has_value()) {
            collect_match_leaves(*completed[i]->result, result_leaves[i]);
        }
    }

    for (std::size_t b = 1; b < completed.size(); ++b) {
        std::set<Value> param_leaves;
        collect_match_leaves(completed[b]->params, param_leaves);

        bool has_incoming = false;
        for (std::size_t a = 0; a < b; ++a) {
            const bool overlap = std::any_of(
                param_leaves.begin(), param_leaves.end(),
                [&](const Value& v) { return result_leaves[a].count(v) != 0; });
            if (overlap) {
                graph.edges.emplace_back(completed[a]->record_id, completed[b]->record_id);
                has_incoming = true;
            }
        }
        if (!has_incoming) {
            graph.edges.emplace_back(completed[b - 1]->record_id, completed[b]->record_id);
        }
    }
    return graph;
}

std::vector<std::int64_t> rollback_order(const ExecutionGraph& graph) {
    // Kahn's algorithm over reversed edges: a node is ready once all of its
    // dependents have been emitted; among ready nodes the largest record_id
    // goes first (LIFO tie-break).
    std::map<std::int64_t, int> pending_dependents;
    std::map<std::int64_t, std::vector<std::int64_t>> providers_of;
    for (const auto id : graph.nodes) pending_dependents[id] = 0;
    for (const auto& [from, to] : graph.edges) {
        ++pending_dependents[from];
        providers_of[to].push_back(from);
    }

    std::priority_queue<std::int64_t> ready;
    for (const auto& [id, count] : pending_dependents) {
        if (count == 0) ready.push(id);
    }

    std::vector<std::int64_t> order;
    order.reserve(graph.nodes.size());
    while (!ready.empty()) {
        const std::int64_t id = ready.top();
        ready.pop();
        order.push_back(id);
        for (const auto provider : providers_of[id]) {
            if (--pending_dependents[provider] == 0) ready.push(provider);
        }
    }
    if (order.size() != graph.nodes.size()) {
        throw CycleError("execution graph contains a cycle");
    }
    return order;
}

std::string to_dot(const ExecutionGraph& graph, const RecordSeq& records) {
    std::map<std::int64_t, std::string> labels;
    for (const auto& rec : records) labels[rec.record_id] = rec.tool_name;

    std::ostringstream out;
    out << "digraph execution {\n";
    out << "  rankdir=LR;\n";
    for (const auto id : graph.nodes) {
        out << "  n" << id << " [label=\"" << id << ": " << labels[id] << "\"];\n";
    }
    for (const auto& [from, to] : graph.edges) {
        out << "  n" << from << " -> n" << to << ";\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace saga
