#include "saga/compensation.hpp"

#include <algorithm>
#include <cctype>

#include "saga/errors.hpp"

namespace saga {

namespace {

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

bool valid_identifier(const std::string& s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s.front())) && s.front() != '_') return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_';
    });
}

bool valid_path(const std::string& s) {
    if (s.empty() || s.front() == '.' || s.back() == '.') return false;
    return s.find("..") == std::string::npos;
}

}  // namespace

std::vector<MappingRule> parse_mapping(const std::string& expression) {
    std::vector<MappingRule> rules;
    std::size_t start = 0;
    while (start <= expression.size()) {
        const auto end = expression.find(';', start);
        const std::string piece =
            trim(std::string_view(expression).substr(start, end - start));
        start = end == std::string::npos ? expression.size() + 1 : end + 1;
        if (piece.empty()) {
            if (end == std::string::npos && rules.empty()) break;  // empty expression
            throw MappingParseError("empty rule in mapping expression '" + expression + "'");
        }
        const auto eq = piece.find('=');
        if (eq == std::string::npos) {
            throw MappingParseError("rule '" + piece + "' is missing '='");
        }
        MappingRule rule;
        rule.comp_param = trim(std::string_view(piece).substr(0, eq));
        if (!valid_identifier(rule.comp_param)) {
            throw MappingParseError("invalid parameter name in rule '" + piece + "'");
        }
        const std::string source = trim(std::string_view(piece).substr(eq + 1));
        if (source.rfind("params.", 0) == 0) {
            rule.source = MappingSource::ForwardParam;
            rule.ref = source.substr(7);
            if (!valid_identifier(rule.ref)) {
                throw MappingParseError("invalid params reference in rule '" + piece + "'");
            }
        } else if (source.rfind("result.", 0) == 0) {
            rule.source = MappingSource::ForwardResultPath;
            rule.ref = source.substr(7);
            if (!valid_path(rule.ref)) {
                throw MappingParseError("invalid result path in rule '" + piece + "'");
            }
        } else {
            throw MappingParseError("rule '" + piece +
                                    "' must reference 'params.<name>' or 'result.<path>'");
        }
        rules.push_back(std::move(rule));
    }
    return rules;
}

std::string serialize_mapping(const std::vector<MappingRule>& rules) {
    std::string out;
    for (const auto& rule : rules) {
        if (rule.source == MappingSource::AdvisorInferred) continue;  // not expressible
        if (!out.empty()) out += ";";
        out += rule.comp_param;
        out += "=";
        out += rule.source == MappingSource::ForwardParam ? "params." : "result.";
        out += rule.ref;
    }
    return out;
}

std::string_view to_string(BindingProvenance p) {
    switch (p) {
        case BindingProvenance::ApiConfig: return "API_CONFIG";
        case BindingProvenance::McpAnnotation: return "MCP_ANNOTATION";
        case BindingProvenance::Advisor: return "ADVISOR";
        case BindingProvenance::AssumedNoSideEffects: return "ASSUMED_NO_SIDE_EFFECTS";
    }
    return "ASSUMED_NO_SIDE_EFFECTS";
}

CompensationConfig CompensationConfig::from_json(const Value& config) {
    CompensationConfig out;
    if (config.is_null()) return out;
    if (!config.is_object()) throw ConfigError("api_config must be an object");
    if (config.contains("pairs")) {
        for (const auto& [forward, comp] : config["pairs"].items()) {
            if (!comp.is_string()) {
                throw ConfigError("api_config.pairs['" + forward + "'] must be a string");
            }
            out.pairs[forward] = comp.get<std::string>();
        }
    }
    if (config.contains("mappings")) {
        for (const auto& [forward, expr] : config["mappings"].items()) {
            if (!expr.is_string()) {
                throw ConfigError("api_config.mappings['" + forward + "'] must be a string");
            }
            out.mappings[forward] = expr.get<std::string>();
        }
    }
    return out;
}

namespace {

// Fills in mapping rules for a binding whose pair is known. Explicit rules
// are validated against the compensation tool's declared parameters; when
// no mapping was provided, every required parameter of the compensation
// tool is deferred to the advisor.
void attach_mapping(CompensationBinding& binding, const std::optional<std::string>& expression,
                    const ToolRegistry& registry) {
    const ToolDefinition& comp = registry.at(*binding.compensation_tool);
    if (expression.has_value()) {
        binding.input_mapping = parse_mapping(*expression);
        for (const auto& rule : binding.input_mapping) {
            if (comp.input_schema.contains("properties") &&
                !comp.declares_param(rule.comp_param)) {
                throw ResolutionError("mapping for '" + binding.forward_tool +
                                      "' targets parameter '" + rule.comp_param +
                                      "' which '" + comp.name + "' does not declare");
            }
        }
        return;
    }
    for (const auto& param : comp.required_params()) {
        binding.input_mapping.push_back({param, MappingSource::AdvisorInferred, ""});
    }
}

void require_registered(const std::string& forward, const std::string& comp,
                        const ToolRegistry& registry, std::string_view source) {
    if (!registry.has(comp)) {
        throw ResolutionError(std::string(source) + " for '" + forward +
                              "' names unregistered compensation tool '" + comp + "'");
    }
}

}  // namespace

CompensationBinding resolve(const std::string& forward_tool, const CompensationConfig& config,
                            const ToolRegistry& registry, Advisor& advisor) {
    if (!registry.has(forward_tool)) {
        throw UnknownToolError("cannot resolve compensation for unregistered tool '" +
                               forward_tool + "'");
    }
    CompensationBinding binding;
    binding.forward_tool = forward_tool;

    // 1. Framework API configuration.
    if (const auto it = config.pairs.find(forward_tool); it != config.pairs.end()) {
        require_registered(forward_tool, it->second, registry, "api config");
        binding.compensation_tool = it->second;
        binding.provenance = BindingProvenance::ApiConfig;
        std::optional<std::string> expr;
        if (const auto m = config.mappings.find(forward_tool); m != config.mappings.end()) {
            expr = m->second;
        }
        attach_mapping(binding, expr, registry);
        return binding;
    }

    // 2. Tool document annotation.
    const ToolDefinition& def = registry.at(forward_tool);
    if (def.annotations.contains(kCompensationToolAnnotation)) {
        const std::string comp = def.annotations[kCompensationToolAnnotation].get<std::string>();
        require_registered(forward_tool, comp, registry, "annotation");
        binding.compensation_tool = comp;
        binding.provenance = BindingProvenance::McpAnnotation;
        std::optional<std::string> expr;
        if (def.annotations.contains(kInputMappingAnnotation)) {
            expr = def.annotations[kInputMappingAnnotation].get<std::string>();
        }
        attach_mapping(binding, expr, registry);
        return binding;
    }

    // 3. Advisor discovery. An answer naming an unregistered tool is
    // treated as abstention; only declared sources fail hard.
    AdvisorQuery query{QueryKind::DiscoverCompensation,
                       {{"tool", forward_tool},
                        {"description", def.description},
                        {"available_tools", registry.names()}}};
    const AdvisorAnswer answer = advisor.consult(query);
    if (const auto* discovered = std::get_if<DiscoveredCompensation>(&answer.value)) {
        if (registry.has(discovered->compensation_tool)) {
            binding.compensation_tool = discovered->compensation_tool;
            binding.provenance = BindingProvenance::Advisor;
            attach_mapping(binding, discovered->input_mapping, registry);
            return binding;
        }
    }

    // Nothing anywhere: the tool is assumed to have no side effects.
    binding.provenance = BindingProvenance::AssumedNoSideEffects;
    return binding;
}

CompensationResolver::CompensationResolver(CompensationConfig config,
                                           const ToolRegistry& registry, Advisor& advisor) {
    for (const auto& name : registry.names()) {
        bindings_.emplace(name, resolve(name, config, registry, advisor));
    }
}

const CompensationBinding& CompensationResolver::binding_for(
    const std::string& forward_tool) const {
    const auto it = bindings_.find(forward_tool);
    if (it == bindings_.end()) {
        throw UnknownToolError("no binding for unregistered tool '" + forward_tool + "'");
    }
    return it->second;
}

ExtractedParams extract_params(const CompensationBinding& binding, const ToolCallRecord& record,
                               const ToolRegistry& registry, Advisor& advisor) {
    if (!binding.compensation_tool.has_value()) {
        throw ResolutionError("extract_params called on a binding without a compensation tool");
    }
    ExtractedParams out;
    for (const auto& rule : binding.input_mapping) {
        switch (rule.source) {
            case MappingSource::ForwardParam: {
                if (!record.params.contains(rule.ref)) {
                    throw ExtractionError(rule.comp_param, record.record_id,
                                          "forward param '" + rule.ref + "' is missing");
                }
                out.params[rule.comp_param] = record.params[rule.ref];
                out.provenance[rule.comp_param] = "params." + rule.ref;
                break;
            }
            case MappingSource::ForwardResultPath: {
                const Value result = record.result.value_or(Value());
                const auto value = value_at_path(result, rule.ref);
                if (!value.has_value()) {
                    throw ExtractionError(rule.comp_param, record.record_id,
                                          "result path '" + rule.ref + "' resolves to nothing");
                }
                out.params[rule.comp_param] = *value;
                out.provenance[rule.comp_param] = "result." + rule.ref;
                break;
            }
            case MappingSource::AdvisorInferred: {
                AdvisorQuery query{QueryKind::InferInputMapping,
                                   {{"compensation_param", rule.comp_param},
                                    {"compensation_tool", *binding.compensation_tool},
                                    {"params", record.params},
                                    {"result", record.result.value_or(Value())}}};
                const AdvisorAnswer answer = advisor.consult(query);
                const auto* inferred = std::get_if<InferredMapping>(&answer.value);
                if (inferred == nullptr) {
                    throw ExtractionError(rule.comp_param, record.record_id,
                                          "advisor could not infer a mapping");
                }
                const Value& root = inferred->source == InferredMapping::Source::Result
                                        ? record.result.value_or(Value())
                                        : record.params;
                const auto value = value_at_path(root, inferred->path);
                if (!value.has_value()) {
                    throw ExtractionError(rule.comp_param, record.record_id,
                                          "advisor-suggested path '" + inferred->path +
                                              "' resolves to nothing");
                }
                out.params[rule.comp_param] = *value;
                out.provenance[rule.comp_param] =
                    std::string("advisor:") +
                    (inferred->source == InferredMapping::Source::Result ? "result." : "params.") +
                    inferred->path;
                break;
            }
        }
    }

    // The compensation tool's required parameters must all be present; a
    // partial mapping would fail at execution time, which is too late.
    const ToolDefinition& comp = registry.at(*binding.compensation_tool);
    for (const auto& required : comp.required_params()) {
        if (!out.params.contains(required)) {
            throw ExtractionError(required, record.record_id,
                                  "mapping produced no value for required parameter");
        }
    }
    return out;
}

}  // namespace saga
