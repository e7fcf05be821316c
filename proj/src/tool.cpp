#include "saga/tool.hpp"

#include <algorithm>

namespace saga {

std::vector<std::string> ToolDefinition::required_params() const {
    std::vector<std::string> out;
    if (input_schema.contains("required")) {
        for (const auto& entry : input_schema["required"]) {
            out.push_back(entry.get<std::string>());
        }
    }
    return out;
}

bool ToolDefinition::declares_param(const std::string& param) const {
    if (!input_schema.contains("properties")) return false;
    return input_schema["properties"].contains(param);
}

Value ToolDefinition::to_json() const {
    Value out{
        {"name", name},
        {"description", description},
        {"inputSchema", input_schema},
    };
    if (!annotations.empty()) out["annotations"] = annotations;
    return out;
}

namespace {

void validate_schema(const Value& schema, int index) {
    if (!schema.is_object()) {
        throw McpParseError(index, "inputSchema must be an object");
    }
    if (schema.contains("required")) {
        if (!schema["required"].is_array()) {
            throw McpParseError(index, "inputSchema.required must be an array");
        }
        const Value props =
            schema.contains("properties") ? schema["properties"] : Value::object();
        if (!props.is_object()) {
            throw McpParseError(index, "inputSchema.properties must be an object");
        }
        for (const auto& req : schema["required"]) {
            if (!req.is_string()) {
                throw McpParseError(index, "inputSchema.required entries must be strings");
            }
            if (!props.contains(req.get<std::string>())) {
                throw McpParseError(index, "required parameter '" + req.get<std::string>() +
                                               "' is not declared in properties");
            }
        }
    }
}

}  // namespace

std::vector<ToolDefinition> parse_mcp_tools(const Value& document) {
    if (!document.is_array()) {
        throw McpParseError(0, "tool document must be a JSON array");
    }
    std::vector<ToolDefinition> defs;
    int index = 0;
    for (const auto& entry : document) {
        if (!entry.is_object()) throw McpParseError(index, "entry must be an object");
        ToolDefinition def;
        if (!entry.contains("name") || !entry["name"].is_string() ||
            entry["name"].get<std::string>().empty()) {
            throw McpParseError(index, "missing or invalid 'name'");
        }
        def.name = entry["name"].get<std::string>();
        if (entry.contains("description")) {
            if (!entry["description"].is_string()) {
                throw McpParseError(index, "'description' must be a string");
            }
            def.description = entry["description"].get<std::string>();
        }
        if (entry.contains("inputSchema")) {
            validate_schema(entry["inputSchema"], index);
            def.input_schema = entry["inputSchema"];
        }
        if (entry.contains("annotations")) {
            if (!entry["annotations"].is_object()) {
                throw McpParseError(index, "'annotations' must be an object");
            }
            def.annotations = entry["annotations"];
            if (def.annotations.contains(kCompensationToolAnnotation) &&
                !def.annotations[kCompensationToolAnnotation].is_string()) {
                throw McpParseError(index, std::string("annotation '") +
                                               kCompensationToolAnnotation +
                                               "' must be a string");
            }
            if (def.annotations.contains(kInputMappingAnnotation) &&
                !def.annotations[kInputMappingAnnotation].is_string()) {
                throw McpParseError(index, std::string("annotation '") +
                                               kInputMappingAnnotation + "' must be a string");
            }
        }
        defs.push_back(std::move(def));
        ++index;
    }
    return defs;
}

std::vector<ToolDefinition> parse_mcp_tools_text(const std::string& text) {
    Value doc = Value::parse(text, nullptr, false);
    if (doc.is_discarded()) {
        throw McpParseError(0, "tool document is not valid JSON");
    }
    return parse_mcp_tools(doc);
}

Value tool_definitions_to_json(const std::vector<ToolDefinition>& defs) {
    Value out = Value::array();
    for (const auto& def : defs) out.push_back(def.to_json());
    return out;
}

void ToolRegistry::register_tool(ToolDefinition def) {
    const auto name = def.name;
    if (name.empty()) throw ConfigError("tool definition without a name");
    if (!tools_.emplace(name, std::move(def)).second) {
        throw ConfigError("duplicate tool registration: '" + name + "'");
    }
}

void ToolRegistry::merge_annotations(const std::vector<ToolDefinition>& defs) {
    for (const auto& def : defs) {
        auto it = tools_.find(def.name);
        if (it == tools_.end()) {
            throw ConfigError("tool document declares unknown tool '" + def.name + "'");
        }
        for (const auto& [key, value] : def.annotations.items()) {
            it->second.annotations[key] = value;
        }
    }
}

const ToolDefinition& ToolRegistry::at(const std::string& name) const {
    const auto it = tools_.find(name);
    if (it == tools_.end()) throw UnknownToolError("tool '" + name + "' is not registered");
    return it->second;
}

std::vector<std::string> ToolRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(tools_.size());
    for (const auto& [name, _] : tools_) out.push_back(name);
    return out;
}

}  // namespace saga
