#include "saga/txlog.hpp"

#include <utility>

namespace saga {

std::string_view to_string(RecordStatus s) {
    switch (s) {
        case RecordStatus::Pending: return "PENDING";
        case RecordStatus::Completed: return "COMPLETED";
        case RecordStatus::Failed: return "FAILED";
        case RecordStatus::Compensated: return "COMPENSATED";
        case RecordStatus::CompensationFailed: return "COMPENSATION_FAILED";
    }
    return "PENDING";
}

RecordStatus record_status_from_string(std::string_view s) {
    if (s == "PENDING") return RecordStatus::Pending;
    if (s == "COMPLETED") return RecordStatus::Completed;
    if (s == "FAILED") return RecordStatus::Failed;
    if (s == "COMPENSATED") return RecordStatus::Compensated;
    if (s == "COMPENSATION_FAILED") return RecordStatus::CompensationFailed;
    throw LogReplayError("unknown record status '" + std::string(s) + "'");
}

bool is_legal_transition(RecordStatus from, RecordStatus to) {
    switch (from) {
        case RecordStatus::Pending:
            return to == RecordStatus::Completed || to == RecordStatus::Failed;
        case RecordStatus::Completed:
            return to == RecordStatus::Compensated || to == RecordStatus::CompensationFailed;
        default:
            return false;
    }
}

TransactionLog::TransactionLog(std::string run_id, std::filesystem::path storage_path,
                               Clock& clock, Options options)
    : run_id_(std::move(run_id)),
      storage_path_(std::move(storage_path)),
      clock_(clock),
      options_(std::move(options)) {
    if (std::filesystem::exists(storage_path_)) {
        replay_existing();
    }
    out_.open(storage_path_, std::ios::app);
    if (!out_) {
        throw LogStorageError("cannot open transaction log at " + storage_path_.string());
    }
}

const ToolCallRecord& TransactionLog::append(const std::string& tool_name, const Value& params,
                                             int attempt) {
    ToolCallRecord rec;
    rec.record_id = records_.empty() ? 1 : records_.back().record_id + 1;
    rec.run_id = run_id_;
    rec.tool_name = tool_name;
    rec.params = params;
    rec.status = RecordStatus::Pending;
    rec.started_at_ms = clock_.now_ms();
    rec.attempt = attempt;

    Value entry{
        {"kind", "append"},
        {"record_id", rec.record_id},
        {"run_id", rec.run_id},
        {"tool_name", rec.tool_name},
        {"params", rec.params},
        {"status", to_string(rec.status)},
        {"attempt", rec.attempt},
        {"started_at_ms", rec.started_at_ms},
    };
    write_line(entry);
    records_.push_back(std::move(rec));
    const ToolCallRecord& stored = records_.back();
    if (options_.after_append) options_.after_append(stored);
    return stored;
}

const ToolCallRecord& TransactionLog::transition(std::int64_t record_id, RecordStatus to,
                                                 std::optional<Value> result,
                                                 std::optional<std::string> error) {
    ToolCallRecord* rec = find(record_id);
    if (rec == nullptr) {
        throw LifecycleError("transition on unknown record " + std::to_string(record_id));
    }
    const std::int64_t at_ms = clock_.now_ms();

    Value entry{
        {"kind", "transition"},
        {"record_id", record_id},
        {"status", to_string(to)},
        {"at_ms", at_ms},
    };
    if (result.has_value()) entry["result"] = *result;
    if (error.has_value()) entry["error"] = *error;

    // Validate before persisting so an illegal transition never reaches disk.
    ToolCallRecord probe = *rec;
    apply_transition_in_memory(probe, to, std::optional<Value>(result),
                               std::optional<std::string>(error), at_ms);

    write_line(entry);
    *rec = std::move(probe);
    return *rec;
}

void TransactionLog::apply_transition_in_memory(ToolCallRecord& rec, RecordStatus to,
                                                std::optional<Value>&& result,
                                                std::optional<std::string>&& error,
                                                std::int64_t at_ms) {
    if (!is_legal_transition(rec.status, to)) {
        throw LifecycleError("illegal transition " + std::string(to_string(rec.status)) +
                             " -> " + std::string(to_string(to)) + " for record " +
                             std::to_string(rec.record_id));
    }
    switch (to) {
        case RecordStatus::Completed:
            if (!result.has_value()) {
                throw LifecycleError("COMPLETED requires a result (record " +
                                     std::to_string(rec.record_id) + ")");
            }
            if (error.has_value()) {
                throw LifecycleError("COMPLETED cannot carry an error");
            }
            rec.result = std::move(result);
            rec.error.reset();
            rec.finished_at_ms = at_ms;
            break;
        case RecordStatus::Failed:
            if (!error.has_value()) {
                throw LifecycleError("FAILED requires an error message (record " +
                                     std::to_string(rec.record_id) + ")");
            }
            if (result.has_value()) {
                throw LifecycleError("FAILED cannot carry a result");
            }
            rec.error = std::move(error);
            rec.result.reset();
            rec.finished_at_ms = at_ms;
            break;
        case RecordStatus::Compensated:
            // Result carries over from COMPLETED.
            if (error.has_value()) {
                throw LifecycleError("COMPENSATED cannot carry an error");
            }
            break;
        case RecordStatus::CompensationFailed:
            if (!error.has_value()) {
                throw LifecycleError("COMPENSATION_FAILED requires an error message (record " +
                                     std::to_string(rec.record_id) + ")");
            }
            rec.error = std::move(error);
            break;
        case RecordStatus::Pending:
            break;  // unreachable, is_legal_transition rejects it
    }
    rec.status = to;
}

const ToolCallRecord& TransactionLog::at(std::int64_t record_id) const {
    for (const auto& rec : records_) {
        if (rec.record_id == record_id) return rec;
    }
    throw LifecycleError("unknown record " + std::to_string(record_id));
}

ToolCallRecord* TransactionLog::find(std::int64_t record_id) {
    for (auto& rec : records_) {
        if (rec.record_id == record_id) return &rec;
    }
    return nullptr;
}

void TransactionLog::write_line(const Value& entry) {
    out_ << entry.dump() << '\n';
    if (options_.flush_each_entry) out_.flush();
    if (!out_) {
        throw LogStorageError("write to transaction log failed at " + storage_path_.string());
    }
}

void TransactionLog::flush() {
    out_.flush();
    if (!out_) {
        throw LogStorageError("flush of transaction log failed at " + storage_path_.string());
    }
}

void TransactionLog::replay_existing() {
    std::ifstream in(storage_path_);
    if (!in) {
        throw LogStorageError("cannot read transaction log at " + storage_path_.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Value entry = Value::parse(line, nullptr, false);
        if (entry.is_discarded()) {
            // A torn final line is the expected crash artifact; anything
            // earlier means real corruption.
            if (in.peek() == std::ifstream::traits_type::eof()) {
                recovered_torn_tail_ = true;
                break;
            }
            throw LogReplayError("unparseable entry at " + storage_path_.string() + ":" +
                                 std::to_string(line_no));
        }
        try {
            const std::string kind = entry.at("kind").get<std::string>();
            if (kind == "append") {
                ToolCallRecord rec;
                rec.record_id = entry.at("record_id").get<std::int64_t>();
                rec.run_id = entry.at("run_id").get<std::string>();
                rec.tool_name = entry.at("tool_name").get<std::string>();
                rec.params = entry.at("params");
                rec.status = record_status_from_string(entry.at("status").get<std::string>());
                rec.attempt = entry.at("attempt").get<int>();
                rec.started_at_ms = entry.at("started_at_ms").get<std::int64_t>();
                if (rec.status != RecordStatus::Pending) {
                    throw LogReplayError("append entry with non-PENDING status");
                }
                if (rec.run_id != run_id_) {
                    throw LogReplayError("log at " + storage_path_.string() + " belongs to run '" +
                                         rec.run_id + "', expected '" + run_id_ + "'");
                }
                if (!records_.empty() && rec.record_id <= records_.back().record_id) {
                    throw LogReplayError("record ids not strictly increasing at line " +
                                         std::to_string(line_no));
                }
                records_.push_back(std::move(rec));
            } else if (kind == "transition") {
                const auto record_id = entry.at("record_id").get<std::int64_t>();
                ToolCallRecord* rec = find(record_id);
                if (rec == nullptr) {
                    throw LogReplayError("transition for unknown record " +
                                         std::to_string(record_id) + " at line " +
                                         std::to_string(line_no));
                }
                std::optional<Value> result;
                if (entry.contains("result")) result = entry["result"];
                std::optional<std::string> error;
                if (entry.contains("error")) error = entry["error"].get<std::string>();
                apply_transition_in_memory(*rec,
                                           record_status_from_string(
                                               entry.at("status").get<std::string>()),
                                           std::move(result), std::move(error),
                                           entry.at("at_ms").get<std::int64_t>());
            } else {
                throw LogReplayError("unknown entry kind '" + kind + "' at line " +
                                     std::to_string(line_no));
            }
        } catch (const Value::exception& e) {
            throw LogReplayError("malformed entry at " + storage_path_.string() + ":" +
                                 std::to_string(line_no) + ": " + e.what());
        }
    }
}

}  // namespace saga
