#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "saga/advisor.hpp"
#include "saga/tool.hpp"
#include "saga/txlog.hpp"
#include "saga/value.hpp"

namespace saga {

enum class MappingSource {
    ForwardParam,      // copy a key of the forward call's params
    ForwardResultPath,  // read a path into the forward call's result
    AdvisorInferred,   // ask the advisor at rollback time
};

// One compensation input rule: where `comp_param` gets its value.
struct MappingRule {
    std::string comp_param;
    MappingSource source = MappingSource::AdvisorInferred;
    std::string ref;  // param name or result path; empty for AdvisorInferred

    bool operator==(const MappingRule&) const = default;
};

// Mapping expression grammar (used in API config values and in the
// "input-mapping" annotation):
//
//   mapping  = rule *( ";" rule )
//   rule     = comp_param "=" source
//   source   = "params." name / "result." path
//   path     = segment *( "." segment )        ; integer segments index lists
//
// Whitespace around tokens is ignored. serialize_mapping is the exact
// inverse of parse_mapping for rules expressible in the grammar.
std::vector<MappingRule> parse_mapping(const std::string& expression);
std::string serialize_mapping(const std::vector<MappingRule>& rules);

enum class BindingProvenance {
    ApiConfig,
    McpAnnotation,
    Advisor,
    AssumedNoSideEffects,
};

std::string_view to_string(BindingProvenance p);

// The resolved (forward tool, compensation tool, input mapping) triple.
// compensation_tool is empty when the tool is assumed to have no side
// effects, the default when no source declares a compensation.
struct CompensationBinding {
    std::string forward_tool;
    std::optional<std::string> compensation_tool;
    std::vector<MappingRule> input_mapping;
    BindingProvenance provenance = BindingProvenance::AssumedNoSideEffects;
};

// Compensation pairs and input mappings handed to the engine through the
// framework API (the first and highest-precedence source).
struct CompensationConfig {
    std::map<std::string, std::string> pairs;     // forward tool -> compensation tool
    std::map<std::string, std::string> mappings;  // forward tool -> mapping expression

    static CompensationConfig from_json(const Value& config);
};

// Resolves the binding for one tool using the fixed precedence:
//   1. API config entry
//   2. "x-compensation-tool" annotation on the tool definition
//   3. advisor discovery
// and, when all three are silent, assumes the tool has no side effects.
// A config or annotation naming an unregistered compensation tool fails
// here, at registration time, never during a rollback.
CompensationBinding resolve(const std::string& forward_tool, const CompensationConfig& config,
                            const ToolRegistry& registry, Advisor& advisor);

// Eagerly resolves and caches bindings for every registered tool.
// Advisor-inferred input mappings stay lazy; they need the actual runtime
// values of the record being compensated.
class CompensationResolver {
public:
    CompensationResolver(CompensationConfig config, const ToolRegistry& registry,
                         Advisor& advisor);

    const CompensationBinding& binding_for(const std::string& forward_tool) const;
    const std::map<std::string, CompensationBinding>& bindings() const { return bindings_; }

private:
    std::map<std::string, CompensationBinding> bindings_;
};

// Compensation call inputs plus, for every extracted value, the provenance
// of where it came from ("params.x", "result.a.b", "advisor:result.c").
// Values are never fabricated; each one is traceable to the record or an
// advisor response.
struct ExtractedParams {
    Value params = Value::object();
    std::map<std::string, std::string> provenance;
};

// Builds the compensation call's parameters from a COMPLETED record per the
// binding's mapping rules. A rule that resolves to nothing raises
// ExtractionError naming the rule and record; rollback surfaces it in the
// report instead of silently skipping.
ExtractedParams extract_params(const CompensationBinding& binding, const ToolCallRecord& record,
                               const ToolRegistry& registry, Advisor& advisor);

}  // namespace saga
