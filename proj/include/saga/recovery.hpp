#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "saga/advisor.hpp"
#include "saga/clock.hpp"
#include "saga/compensation.hpp"
#include "saga/logged_call.hpp"
#include "saga/tool.hpp"
#include "saga/txlog.hpp"

namespace saga {

struct RetryPolicy {
    int max_retries = 3;
    std::int64_t base_delay_ms = 500;
    double multiplier = 2.0;
    double jitter_fraction = 0.1;

    // Delay before the k-th retry (k >= 1), before jitter: base * mult^(k-1).
    // Non-decreasing across attempts for multiplier >= 1.
    std::int64_t delay_before_retry_ms(int k) const;
};

struct RecoveryConfig {
    RetryPolicy retry;
    int max_alternatives = 2;
    std::vector<std::string> transient_codes = {"RATE_LIMITED", "TIMEOUT",
                                                "TEMPORARILY_UNAVAILABLE",
                                                "SERVICE_UNAVAILABLE"};
    std::vector<std::string> permanent_codes = {"PERMANENTLY_OFFLINE", "INVALID_INPUT",
                                                "NOT_FOUND", "PERMISSION_DENIED"};

    static RecoveryConfig from_json(const Value& config);
};

struct FailureContext {
    std::int64_t record_id = 0;
    std::string tool_name;
    std::string error_message;
    ErrorClass classification = ErrorClass::Unknown;
    int attempts_made = 1;  // the failed original counts as attempt 1
    std::vector<std::string> alternatives_tried;
};

enum class CompensationOutcome { Compensated, CompensationFailed, SkippedNoSideEffects };
std::string_view to_string(CompensationOutcome o);

struct RollbackEntry {
    std::int64_t record_id = 0;
    std::string tool_name;
    std::optional<std::string> compensation_tool;
    Value extracted_params = Value::object();
    CompensationOutcome outcome = CompensationOutcome::SkippedNoSideEffects;
    std::optional<std::string> error;
};

// Ordered outcome of a rollback. halted_at is set exactly when a
// compensation failed; everything after the halt stays COMPLETED so a
// later re-entrant rollback can pick it up.
struct RollbackReport {
    std::vector<RollbackEntry> entries;
    std::optional<std::int64_t> halted_at;
    std::string summary_text;

    int compensated_count() const;
    int skipped_count() const;
};

struct Recovered {
    Value result;
    std::int64_t record_id = 0;  // the successful retry's record
};
struct RecoveredViaAlternative {
    Value result;
    std::string alternative_tool;
    std::int64_t record_id = 0;
};
struct RolledBack {
    RollbackReport report;
};
using RecoveryOutcome = std::variant<Recovered, RecoveredViaAlternative, RolledBack>;

struct RecoveryStats {
    int retries = 0;             // retry invocations, beyond the original attempt
    int alternatives_tried = 0;  // suggestions consumed, including discarded ones
    int compensations = 0;       // compensation executions that succeeded
    int rollbacks = 0;
};

// One trace event per recovery action, exportable as JSON lines. The
// phase-ordering property (retries strictly before alternatives, strictly
// before compensations) is asserted over this trace.
struct TraceEvent {
    std::string kind;
    Value data;
    std::int64_t at_ms = 0;
};

// The recovery and compensation manager: classifies failures, retries with
// backoff, tries advisor-suggested alternatives, and rolls back completed
// work in dependency order when recovery is impossible.
//
// One instance per run; operations on a run are sequential.
class RecoveryManager {
public:
    RecoveryManager(TransactionLog& log, ToolHost& host, const ToolRegistry& registry,
                    const CompensationResolver& resolver, Advisor& advisor, Clock& clock,
                    RecoveryConfig config, std::uint64_t seed = 0);

    // Recovery for a FAILED record, in strict phase order: permanence
    // check, retries (unless permanent), alternatives, rollback. Retries
    // and alternatives are logged as fresh records so their side effects
    // stay compensable.
    RecoveryOutcome handle_failure(const ToolCallRecord& failed_record,
                                   const std::string& error);

    // Matches the error's code tag against the configured sets; unknown
    // codes go to the advisor, and abstention defaults to TRANSIENT
    // (retries are bounded, so retrying is the safe first move).
    ErrorClass classify_error(const std::string& error);

    // Up to max_retries re-invocations with exponential backoff and
    // jitter. Returns the first success, or nullopt when exhausted.
    std::optional<LoggedCall> retry_with_backoff(const ToolCallRecord& failed_record,
                                                 FailureContext& ctx);

    // Asks the advisor for substitute calls; each usable suggestion runs
    // through the log like any other invocation. First success wins.
    std::optional<LoggedCall> try_alternatives(FailureContext& ctx,
                                               const ToolCallRecord& failed_record);

    // Compensates every COMPLETED record in dependency-respecting LIFO
    // order. Halts at the first compensation failure.
    RollbackReport rollback();

    const RecoveryStats& stats() const { return stats_; }
    const std::vector<TraceEvent>& trace() const { return trace_; }
    std::string trace_as_json_lines() const;

private:
    void record_event(std::string kind, Value data);
    std::int64_t jittered(std::int64_t delay_ms);

    TransactionLog& log_;
    ToolHost& host_;
    const ToolRegistry& registry_;
    const CompensationResolver& resolver_;
    Advisor& advisor_;
    Clock& clock_;
    RecoveryConfig config_;
    std::mt19937_64 rng_;
    RecoveryStats stats_;
    std::vector<TraceEvent> trace_;
};

// Deterministic agent-facing summary: the failure, what recovery tried,
// and every rollback outcome in execution order.
std::string format_context_message(const FailureContext& ctx, const RollbackReport& report);

}  // namespace saga
