#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "saga/compensation.hpp"
#include "saga/recovery.hpp"
#include "saga/sim/environment.hpp"

namespace saga::sim {

struct ScriptStep {
    std::string tool;
    Value params = Value::object();
    std::string note;  // what the scripted agent announces before the call
};

// Declarative description of a simulated run: environment, task script,
// injected disruptions, advisor rule table, retry policy and binding
// sources. Loaded from a JSON file; see docs/formats.md for the schema.
struct ScenarioSpec {
    std::string name;
    std::string kind;  // travel | jobshop | group_booking | custom
    std::uint64_t seed = 0;
    std::vector<SimToolSpec> custom_tools;
    std::vector<ScriptStep> script;
    std::vector<DisruptionSpec> disruptions;
    RecoveryConfig policy;
    RuleTableAdvisor::RuleTable advisor_rules;
    CompensationConfig api_config;
    std::optional<std::filesystem::path> mcp_document;  // resolved against the file's directory

    std::vector<SimToolSpec> environment_tools() const;

    static ScenarioSpec load(const std::filesystem::path& file);
    static ScenarioSpec from_json(const Value& config, const std::filesystem::path& base_dir);
};

enum class RunOutcome { Success, RolledBackClean, HaltedDirty };
std::string_view to_string(RunOutcome o);

// Exit status is a pure function of the outcome: 0 for SUCCESS and
// ROLLED_BACK_CLEAN, 2 for HALTED_DIRTY. (Config errors exit 1.)
int exit_code_for(RunOutcome o);

struct RunReport {
    std::string scenario;
    std::uint64_t seed = 0;
    RunOutcome outcome = RunOutcome::Success;
    int retries = 0;
    int alternatives = 0;
    int compensations = 0;
    int advisor_calls = 0;
    std::int64_t wall_time_ms = 0;
    bool ledger_clean = true;
    std::vector<std::string> ledger_violations;

    Value to_json() const;
    std::string to_text() const;
    std::string to_json_lines(const std::optional<RollbackReport>& rollback) const;
};

struct RunnerOptions {
    std::filesystem::path log_dir;
    std::optional<std::uint64_t> seed_override;
    bool real_time = false;
    std::size_t max_steps = 100;
    std::optional<std::filesystem::path> env_ledger;
    std::optional<std::filesystem::path> export_graph;
    std::optional<std::filesystem::path> export_trace;
    // Testing aid: hard-exit the process (status 70) right after the Nth
    // log append, simulating a crash mid-run.
    int crash_after_appends = 0;
};

struct RunResult {
    RunReport report;
    std::optional<RollbackReport> rollback;
    std::string transcript;
    std::filesystem::path log_path;
    // Post-run snapshots for harness-side verification.
    EnvironmentLedger ledger;
    RecordSeq records;
};

// Executes the scenario's script through the interceptor/recovery stack.
// The script stops at the first step that ends in rollback; a scripted
// agent has no replanning to do.
RunResult run_scenario(const ScenarioSpec& spec, const RunnerOptions& options);

// Reopens a previous run's transaction log and environment ledger and
// rolls back whatever is still standing. This is the recovery path for a
// run that died mid-flight.
RunResult resume_rollback(const ScenarioSpec& spec, const RunnerOptions& options);

// The engine failed to uphold its own guarantee: a completed rollback left
// unreversed effects. Raised loudly; a silent dirty outcome is the one
// thing the engine must never produce.
struct SafetyViolation : SagaError {
    using SagaError::SagaError;
};

}  // namespace saga::sim
