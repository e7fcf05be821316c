#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "saga/logged_call.hpp"
#include "saga/recovery.hpp"

namespace saga {

enum class MessageSource { Agent, Tool, Recovery };
std::string_view to_string(MessageSource s);

// The conversation surface the agent sees. Messages only ever accumulate;
// RECOVERY entries appear only once a handle_failure has completed.
struct AgentContext {
    std::string run_id;
    std::vector<std::pair<MessageSource, std::string>> messages;

    void add(MessageSource source, std::string text) {
        messages.emplace_back(source, std::move(text));
    }
    std::string transcript() const;
};

// What a tool invocation hands back to the agent: either the tool's result
// (possibly obtained through retry or an alternative) or, when recovery
// ended in rollback, the summary describing what was undone. Raw errors
// never reach the agent.
struct RecoverySummary {
    std::string text;
    RollbackReport report;
};
using InvokeOutcome = std::variant<Value, RecoverySummary>;

// The tool-invocation wrapper: record, execute, detect errors, delegate
// failures to the recovery manager, and feed summaries back into the agent
// context. Sequential per run.
class ToolInterceptor {
public:
    ToolInterceptor(TransactionLog& log, ToolHost& host, RecoveryManager& manager,
                    AgentContext& context);

    // Calls for unregistered tools are rejected up front, before logging;
    // a record for a tool that can never execute would pollute rollback
    // planning.
    InvokeOutcome invoke_tool(const std::string& tool_name, const Value& params);

    // Registers a semantic error detector; detectors run in registration
    // order after each successful execution and the first non-empty answer
    // wins. A detector that throws is contained and treated as "no error".
    int register_error_detector(SemanticDetector detector);

private:
    std::optional<std::string> run_detectors(const ToolCallRecord& provisional) const;

    TransactionLog& log_;
    ToolHost& host_;
    RecoveryManager& manager_;
    AgentContext& context_;
    std::vector<SemanticDetector> detectors_;
};

}  // namespace saga
