#include "saga/advisor.hpp"

#include <algorithm>

#include "saga/errors.hpp"

namespace saga {

std::string_view to_string(ErrorClass c) {
    switch (c) {
        case ErrorClass::Transient: return "TRANSIENT";
        case ErrorClass::Permanent: return "PERMANENT";
        case ErrorClass::Unknown: return "UNKNOWN";
    }
    return "UNKNOWN";
}

ErrorClass error_class_from_string(std::string_view s) {
    if (s == "TRANSIENT") return ErrorClass::Transient;
    if (s == "PERMANENT") return ErrorClass::Permanent;
    if (s == "UNKNOWN") return ErrorClass::Unknown;
    throw ConfigError("unknown error class '" + std::string(s) + "'");
}

std::string name_stem(const std::string& name) {
    const auto pos = name.rfind('_');
    return pos == std::string::npos ? name : name.substr(pos + 1);
}

RuleTableAdvisor::RuleTable RuleTableAdvisor::parse_rule_table(const Value& config) {
    RuleTable table;
    if (config.is_null()) return table;
    if (!config.is_object()) throw ConfigError("advisor rule table must be an object");

    if (config.contains("classifications")) {
        for (const auto& [code, cls] : config["classifications"].items()) {
            table.classifications[code] = error_class_from_string(cls.get<std::string>());
        }
    }
    if (config.contains("alternatives")) {
        for (const auto& [tool, list] : config["alternatives"].items()) {
            if (!list.is_array()) {
                throw ConfigError("advisor alternatives for '" + tool + "' must be an array");
            }
            std::vector<AlternativeSuggestion> suggestions;
            for (const auto& entry : list) {
                AlternativeSuggestion s;
                s.tool = entry.at("tool").get<std::string>();
                if (entry.contains("params")) s.params = entry["params"];
                suggestions.push_back(std::move(s));
            }
            table.alternatives[tool] = std::move(suggestions);
        }
    }
    if (config.contains("compensations")) {
        for (const auto& [tool, entry] : config["compensations"].items()) {
            DiscoveredCompensation d;
            d.compensation_tool = entry.at("compensation_tool").get<std::string>();
            if (entry.contains("input_mapping")) {
                d.input_mapping = entry["input_mapping"].get<std::string>();
            }
            table.compensations[tool] = std::move(d);
        }
    }
    return table;
}

namespace {

bool tool_available(const Value& payload, const std::string& tool) {
    if (!payload.contains("available_tools")) return true;
    const auto& avail = payload["available_tools"];
    return std::find(avail.begin(), avail.end(), Value(tool)) != avail.end();
}

std::string last_segment(const std::string& path) {
    const auto pos = path.rfind('.');
    return pos == std::string::npos ? path : path.substr(pos + 1);
}

std::optional<std::string> exact_key(const Value& node, const std::string& param) {
    for (const auto& [path, _] : flatten_leaves(node)) {
        if (last_segment(path) == param) return path;
    }
    return std::nullopt;
}

// A stem match must be unique to count; ambiguity means abstain rather
// than guess.
std::optional<std::string> stem_key(const Value& node, const std::string& param) {
    const std::string stem = name_stem(param);
    std::vector<std::string> matches;
    for (const auto& [path, _] : flatten_leaves(node)) {
        if (name_stem(last_segment(path)) == stem) matches.push_back(path);
    }
    if (matches.size() == 1) return matches.front();
    return std::nullopt;
}

}  // namespace

AdvisorAnswer RuleTableAdvisor::do_consult(const AdvisorQuery& query) {
    switch (query.kind) {
        case QueryKind::ClassifyError: {
            const std::string code = query.payload.value("code", "");
            const auto it = table_.classifications.find(code);
            if (it == table_.classifications.end()) return AdvisorAnswer::abstain();
            return {it->second};
        }
        case QueryKind::SuggestAlternative: {
            const std::string tool = query.payload.value("failed_tool", "");
            const auto it = table_.alternatives.find(tool);
            if (it == table_.alternatives.end()) return AdvisorAnswer::abstain();
            std::vector<AlternativeSuggestion> usable;
            for (const auto& s : it->second) {
                if (tool_available(query.payload, s.tool)) usable.push_back(s);
            }
            if (usable.empty()) return AdvisorAnswer::abstain();
            return {usable};
        }
        case QueryKind::DiscoverCompensation: {
            const std::string tool = query.payload.value("tool", "");
            const auto it = table_.compensations.find(tool);
            if (it == table_.compensations.end()) return AdvisorAnswer::abstain();
            if (!tool_available(query.payload, it->second.compensation_tool)) {
                return AdvisorAnswer::abstain();
            }
            return {it->second};
        }
        case QueryKind::InferInputMapping: {
            const std::string param = query.payload.value("compensation_param", "");
            if (param.empty()) return AdvisorAnswer::abstain();
            const Value result = query.payload.value("result", Value());
            const Value params = query.payload.value("params", Value());
            // Outputs take precedence over inputs; exact names beat stems.
            if (auto path = exact_key(result, param)) {
                return {InferredMapping{InferredMapping::Source::Result, *path}};
            }
            if (auto path = exact_key(params, param)) {
                return {InferredMapping{InferredMapping::Source::Params, *path}};
            }
            if (auto path = stem_key(result, param)) {
                return {InferredMapping{InferredMapping::Source::Result, *path}};
            }
            if (auto path = stem_key(params, param)) {
                return {InferredMapping{InferredMapping::Source::Params, *path}};
            }
            return AdvisorAnswer::abstain();
        }
    }
    return AdvisorAnswer::abstain();
}

}  // namespace saga
