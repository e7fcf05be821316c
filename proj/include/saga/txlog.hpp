#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "saga/clock.hpp"
#include "saga/errors.hpp"
#include "saga/value.hpp"

namespace saga {

enum class RecordStatus {
    Pending,
    Completed,
    Failed,
    Compensated,
    CompensationFailed,
};

std::string_view to_string(RecordStatus s);
RecordStatus record_status_from_string(std::string_view s);

// One logged tool invocation. Identity fields (record_id, tool_name,
// params) are immutable once appended; only status, result, error and the
// finish timestamp change, via explicit transitions.
struct ToolCallRecord {
    std::int64_t record_id = 0;
    std::string run_id;
    std::string tool_name;
    Value params = Value::object();
    std::optional<Value> result;
    RecordStatus status = RecordStatus::Pending;
    std::optional<std::string> error;
    std::int64_t started_at_ms = 0;
    std::int64_t finished_at_ms = 0;  // 0 while pending
    int attempt = 1;
};

// Legal lifecycle:
//   PENDING   -> COMPLETED | FAILED
//   COMPLETED -> COMPENSATED | COMPENSATION_FAILED
bool is_legal_transition(RecordStatus from, RecordStatus to);

// Durable, append-only transaction log for one agent run.
//
// On disk the log is line-delimited JSON, one self-contained document per
// line: `append` entries introduce a record in status PENDING, `transition`
// entries update its status. Nothing is ever rewritten in place, so a crash
// can at worst leave a torn final line, which replay detects and discards.
// Reconstructing the file yields a field-identical record sequence.
//
// Single writer per run; concurrent runs use independent logs.
class TransactionLog {
public:
    struct Options {
        // Flush to the OS after every entry (default). Turning this off
        // batches writes until flush()/destruction; the simulator uses it
        // for bulk runs.
        bool flush_each_entry = true;
        // Test failpoint, invoked after an append entry reaches the file.
        std::function<void(const ToolCallRecord&)> after_append;
    };

    // Opens `storage_path`, replaying any existing entries. A fresh path
    // starts an empty log.
    TransactionLog(std::string run_id, std::filesystem::path storage_path, Clock& clock,
                   Options options);
    TransactionLog(std::string run_id, std::filesystem::path storage_path, Clock& clock)
        : TransactionLog(std::move(run_id), std::move(storage_path), clock, Options{}) {}

    TransactionLog(const TransactionLog&) = delete;
    TransactionLog& operator=(const TransactionLog&) = delete;

    // Durably persists a new PENDING record before returning. record_id is
    // one greater than the previous maximum (1 for the first).
    const ToolCallRecord& append(const std::string& tool_name, const Value& params,
                                 int attempt = 1);

    // Applies and persists a status transition. `result` is required for
    // PENDING->COMPLETED; `error` is required for transitions into FAILED
    // and COMPENSATION_FAILED. COMPLETED records keep their result through
    // compensation transitions.
    const ToolCallRecord& transition(std::int64_t record_id, RecordStatus to,
                                     std::optional<Value> result = std::nullopt,
                                     std::optional<std::string> error = std::nullopt);

    // Records in append order, PENDING and FAILED included. An empty log is
    // a valid run with no actions.
    const std::deque<ToolCallRecord>& get_all() const { return records_; }

    const ToolCallRecord& at(std::int64_t record_id) const;
    bool empty() const { return records_.empty(); }
    std::size_t size() const { return records_.size(); }

    const std::string& run_id() const { return run_id_; }
    const std::filesystem::path& storage_path() const { return storage_path_; }

    // True when replay discarded a torn (syntactically incomplete) final line.
    bool recovered_torn_tail() const { return recovered_torn_tail_; }

    void flush();

private:
    void replay_existing();
    void apply_transition_in_memory(ToolCallRecord& rec, RecordStatus to,
                                    std::optional<Value>&& result,
                                    std::optional<std::string>&& error, std::int64_t at_ms);
    void write_line(const Value& entry);
    ToolCallRecord* find(std::int64_t record_id);

    std::string run_id_;
    std::filesystem::path storage_path_;
    Clock& clock_;
    Options options_;
    std::deque<ToolCallRecord> records_;
    std::ofstream out_;
    bool recovered_torn_tail_ = false;
};

using RecordSeq = std::deque<ToolCallRecord>;

}  // namespace saga
