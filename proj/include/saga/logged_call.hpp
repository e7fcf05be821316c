#pragma once

#include <functional>
#include <optional>
#include <string>

#include "saga/tool.hpp"
#include "saga/txlog.hpp"

namespace saga {

// Detects semantic failures in results that the tool itself reported as
// successful (a "declined" payment, say). Returns a description of the
// error, or nullopt for a clean result.
using SemanticDetector = std::function<std::optional<std::string>(const ToolCallRecord&)>;

struct LoggedCall {
    std::int64_t record_id = 0;
    bool ok = false;
    Value result;
    std::string error;
};

// The one way any part of the engine executes a tool: persist a PENDING
// record, execute, persist the outcome. The record is durable before the
// tool can touch the world, which is the property every recovery guarantee
// rests on.
//
// The detector, when given, sees the provisionally completed record before
// the final status is persisted; a flagged record is persisted as FAILED,
// so the on-disk history stays within the legal transition set.
LoggedCall execute_logged(TransactionLog& log, ToolHost& host, const std::string& tool_name,
                          const Value& params, int attempt,
                          const SemanticDetector& detector = {});

}  // namespace saga
