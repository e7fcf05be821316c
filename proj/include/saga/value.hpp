#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace saga {

// Structured values exchanged with tools: string, number, boolean, list,
// map, null. JSON is the lingua franca for params, results, log entries,
// and scenario files alike.
using Value = nlohmann::json;

// Resolves a dot-separated path into a structured value. Integer segments
// index into lists; everything else is a map key. Returns nullopt when any
// segment is missing.
std::optional<Value> value_at_path(const Value& root, std::string_view path);

// Leaf values eligible for dependency matching between an earlier result
// and a later parameter set: all numbers, and strings of length >= 3.
// Short strings ("OK", "no") and booleans produce spurious matches.
void collect_match_leaves(const Value& node, std::set<Value>& out);

// Flattens a structured value into (dotted path, leaf) pairs in
// deterministic (sorted-key) order.
std::vector<std::pair<std::string, Value>> flatten_leaves(const Value& node);

}  // namespace saga
