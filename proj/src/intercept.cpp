#include "saga/intercept.hpp"

#include <sstream>

#include "saga/errors.hpp"

namespace saga {

std::string_view to_string(MessageSource s) {
    switch (s) {
        case MessageSource::Agent: return "AGENT";
        case MessageSource::Tool: return "TOOL";
        case MessageSource::Recovery: return "RECOVERY";
    }
    return "AGENT";
}

std::string AgentContext::transcript() const {
    std::ostringstream out;
    for (const auto& [source, text] : messages) {
        out << to_string(source) << ": " << text << "\n";
    }
    return out.str();
}

ToolInterceptor::ToolInterceptor(TransactionLog& log, ToolHost& host, RecoveryManager& manager,
                                 AgentContext& context)
    : log_(log), host_(host), manager_(manager), context_(context) {}

int ToolInterceptor::register_error_detector(SemanticDetector detector) {
    detectors_.push_back(std::move(detector));
    return static_cast<int>(detectors_.size()) - 1;
}

std::optional<std::string> ToolInterceptor::run_detectors(
    const ToolCallRecord& provisional) const {
    for (const auto& detector : detectors_) {
        try {
            if (auto flagged = detector(provisional)) return flagged;
        } catch (...) {
            // Detectors must not be able to break the safety path.
        }
    }
    return std::nullopt;
}

InvokeOutcome ToolInterceptor::invoke_tool(const std::string& tool_name, const Value& params) {
    if (!host_.has_tool(tool_name)) {
        throw UnknownToolError("tool '" + tool_name + "' is not registered");
    }

    const SemanticDetector detector =
        detectors_.empty() ? SemanticDetector{}
                           : [this](const ToolCallRecord& rec) { return run_detectors(rec); };
    const LoggedCall call = execute_logged(log_, host_, tool_name, params, 1, detector);

    if (call.ok) {
        context_.add(MessageSource::Tool, call.result.dump());
        return call.result;
    }

    const RecoveryOutcome outcome =
        manager_.handle_failure(log_.at(call.record_id), call.error);

    if (const auto* recovered = std::get_if<Recovered>(&outcome)) {
        context_.add(MessageSource::Recovery,
                     "Tool '" + tool_name + "' failed (" + call.error +
                         ") and recovered on retry.");
        context_.add(MessageSource::Tool, recovered->result.dump());
        return recovered->result;
    }
    if (const auto* via_alt = std::get_if<RecoveredViaAlternative>(&outcome)) {
        context_.add(MessageSource::Recovery,
                     "Tool '" + tool_name + "' failed (" + call.error +
                         ") and recovered via alternative '" + via_alt->alternative_tool + "'.");
        context_.add(MessageSource::Tool, via_alt->result.dump());
        return via_alt->result;
    }

    const auto& rolled_back = std::get<RolledBack>(outcome);
    context_.add(MessageSource::Recovery, rolled_back.report.summary_text);
    return RecoverySummary{rolled_back.report.summary_text, rolled_back.report};
}

}  // namespace saga
