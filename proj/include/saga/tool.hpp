#pragma once

#include <map>
#include <string>
#include <vector>

#include "saga/errors.hpp"
#include "saga/value.hpp"

namespace saga {

// Outcome of executing a tool. Failures are ordinary values here, not
// exceptions; the recovery machinery is their consumer. Error messages are
// tagged "CODE: detail" so classification can match on the code.
struct ToolResult {
    bool ok = false;
    Value value;        // structured output when ok
    std::string error;  // failure message when !ok

    static ToolResult success(Value v) { return {true, std::move(v), {}}; }
    static ToolResult failure(std::string message) { return {false, {}, std::move(message)}; }
};

// Anything that can execute tools by name. The simulator is the only
// implementation in this repo; agent-framework adapters would be others.
class ToolHost {
public:
    virtual ~ToolHost() = default;
    virtual bool has_tool(const std::string& name) const = 0;
    virtual ToolResult call(const std::string& name, const Value& params) = 0;
};

// A declared tool: name, description, JSON input schema and annotations.
// Annotation keys recognized by the engine:
//   "x-compensation-tool"  name of the tool that reverses this one
//   "input-mapping"        compensation input mapping expression
// Unknown keys are preserved verbatim.
struct ToolDefinition {
    std::string name;
    std::string description;
    Value input_schema = Value::object();  // {"type":"object","properties":...,"required":[...]}
    Value annotations = Value::object();

    std::vector<std::string> required_params() const;
    bool declares_param(const std::string& param) const;

    Value to_json() const;
    bool operator==(const ToolDefinition&) const = default;
};

inline constexpr const char* kCompensationToolAnnotation = "x-compensation-tool";
inline constexpr const char* kInputMappingAnnotation = "input-mapping";

// Parses a tool declaration document (a JSON array of tool entries).
// Validation failures carry the offending entry index. Round-trip through
// to_json yields identical definitions.
std::vector<ToolDefinition> parse_mcp_tools(const Value& document);
std::vector<ToolDefinition> parse_mcp_tools_text(const std::string& text);
Value tool_definitions_to_json(const std::vector<ToolDefinition>& defs);

// The per-run tool registry. Built once, read-only afterwards.
class ToolRegistry {
public:
    void register_tool(ToolDefinition def);

    // Overlays annotations from externally declared tool documents onto
    // already-registered tools; a document naming an unknown tool is a
    // configuration error.
    void merge_annotations(const std::vector<ToolDefinition>& defs);

    bool has(const std::string& name) const { return tools_.count(name) != 0; }
    const ToolDefinition& at(const std::string& name) const;
    std::vector<std::string> names() const;  // sorted
    std::size_t size() const { return tools_.size(); }

private:
    std::map<std::string, ToolDefinition> tools_;
};

}  // namespace saga
