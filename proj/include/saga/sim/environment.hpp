#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "saga/tool.hpp"
#include "saga/value.hpp"

namespace saga::sim {

// One externally observable state change, and whether a compensation has
// reversed it. The ledger is how tests machine-check the no-lingering-
// side-effects guarantee: the engine never sees it.
struct Effect {
    std::int64_t effect_id = 0;
    std::string tool_name;
    Value params;
    std::string ref;  // the confirmation reference handed back to the caller
    bool reversed = false;
};

struct CallTraceEntry {
    std::string tool;
    Value params;
    bool ok = false;
    std::string error;  // empty on success
};

struct EnvironmentLedger {
    std::vector<Effect> effects;
    std::vector<CallTraceEntry> call_trace;
};

// A run is CLEAN when unreversed effects only remain because the run
// actually succeeded; after a rolled-back run every effect must be
// reversed. Violations name the lingering effects.
struct LedgerVerdict {
    bool clean = true;
    std::vector<std::string> violations;
};
LedgerVerdict ledger_is_clean(const EnvironmentLedger& ledger, bool run_succeeded);

struct DisruptionSpec {
    enum class Mode { Transient, Permanent, FailOnNthCall };

    std::string target_tool;
    Mode mode = Mode::Transient;
    int count = 1;  // TRANSIENT: remaining failures; FAIL_ON_NTH_CALL: n (from env construction)
    std::string error_code = "INJECTED_FAULT";

    static DisruptionSpec from_json(const Value& config);
    Value to_json() const;
};

// Declarative behavior of one simulated tool.
//   Effect:  writes a ledger effect, returns {result_key: "<prefix>-<id>"}
//   Reverse: marks the effect named by params[ref_param] reversed
//   Read:    returns fixed_result, touches only the call trace
struct SimToolSpec {
    enum class Kind { Effect, Reverse, Read };

    std::string name;
    std::string description;
    Kind kind = Kind::Read;
    std::vector<std::string> params;  // required parameter names
    std::string result_key;           // Effect: key carrying the reference
    std::string ref_prefix;           // Effect: reference prefix
    std::string reverses;             // Reverse: the forward tool
    std::string ref_param;            // Reverse: parameter carrying the reference
    Value fixed_result;               // Read: canned result
    Value annotations = Value::object();

    ToolDefinition to_definition() const;
    static SimToolSpec from_json(const Value& config);
};

// Deterministic simulated tool environment with fault injection. One
// environment per run, accessed sequentially.
//
// When a ledger path is given, effects and reversals are appended to a
// JSON-lines file as they happen, so a killed process leaves behind the
// exact world state a later rollback must clean up.
class SimEnvironment final : public ToolHost {
public:
    explicit SimEnvironment(std::vector<SimToolSpec> tools,
                            std::optional<std::filesystem::path> ledger_path = std::nullopt);

    bool has_tool(const std::string& name) const override;
    ToolResult call(const std::string& name, const Value& params) override;

    // Arms (or replaces) the disruption for the spec's target tool.
    // TRANSIENT counts failures from this moment; FAIL_ON_NTH_CALL counts
    // calls from environment construction.
    void inject(const DisruptionSpec& disruption);

    const EnvironmentLedger& ledger() const { return ledger_; }
    const std::vector<SimToolSpec>& tool_specs() const { return specs_; }

    // Tool definitions for every simulated tool, for registry building.
    std::vector<ToolDefinition> definitions() const;

private:
    ToolResult execute(const SimToolSpec& spec, const Value& params);
    std::optional<std::string> disruption_failure(const std::string& name);
    void persist(const Value& entry);
    void replay_ledger();

    std::vector<SimToolSpec> specs_;
    std::map<std::string, std::size_t> by_name_;
    std::map<std::string, DisruptionSpec> disruptions_;
    std::map<std::string, int> call_counts_;
    EnvironmentLedger ledger_;
    std::int64_t next_effect_id_ = 1;
    std::optional<std::filesystem::path> ledger_path_;
    std::ofstream ledger_out_;
};

// Built-in scenario environments.
std::vector<SimToolSpec> travel_tools();         // flight / hotel / car bookings
std::vector<SimToolSpec> jobshop_tools();        // three machines plus a status read
std::vector<SimToolSpec> group_booking_tools();  // one-by-one flight bookings

// Resolves a scenario kind ("travel", "jobshop", "group_booking") to its
// tool set; unknown kinds are a configuration error.
std::vector<SimToolSpec> builtin_tools(const std::string& kind);

}  // namespace saga::sim
