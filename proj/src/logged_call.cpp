#include "saga/logged_call.hpp"

namespace saga {

LoggedCall execute_logged(TransactionLog& log, ToolHost& host, const std::string& tool_name,
                          const Value& params, int attempt, const SemanticDetector& detector) {
    const std::int64_t record_id = log.append(tool_name, params, attempt).record_id;
    const ToolResult result = host.call(tool_name, params);

    if (!result.ok) {
        log.transition(record_id, RecordStatus::Failed, std::nullopt, result.error);
        return {record_id, false, {}, result.error};
    }

    if (detector) {
        ToolCallRecord provisional = log.at(record_id);
        provisional.status = RecordStatus::Completed;
        provisional.result = result.value;
        if (const auto flagged = detector(provisional)) {
            log.transition(record_id, RecordStatus::Failed, std::nullopt, *flagged);
            return {record_id, false, {}, *flagged};
        }
    }

    log.transition(record_id, RecordStatus::Completed, result.value);
    return {record_id, true, result.value, {}};
}

}  // namespace saga
