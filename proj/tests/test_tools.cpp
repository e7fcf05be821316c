#include <fstream>
#include <sstream>

#include "doctest.h"
#include "saga/tool.hpp"

using namespace saga;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE_MESSAGE(bool(in), "missing fixture " << path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

TEST_CASE("the annotated book_flight document parses with its compensation pair") {
    const auto defs =
        parse_mcp_tools_text(read_file(std::string(SAGA_DATA_DIR) +
                                       "/mcp/book_flight_annotation.json"));
    REQUIRE(defs.size() == 1);
    const ToolDefinition& def = defs.front();
    CHECK(def.name == "book_flight");
    CHECK(def.annotations.at(kCompensationToolAnnotation) == "cancel_flight");
    CHECK(def.required_params() ==
          std::vector<std::string>{"flight_id", "seat_class", "passenger_id"});
    CHECK(def.declares_param("seat_class"));
    CHECK_FALSE(def.declares_param("booking_ref"));
}

TEST_CASE("an entry without annotations gets an empty annotation map") {
    const auto defs = parse_mcp_tools(Value::parse(R"([{"name": "get_weather"}])"));
    REQUIRE(defs.size() == 1);
    CHECK(defs.front().annotations.empty());
    CHECK(defs.front().description.empty());
}

TEST_CASE("malformed documents fail with the entry index") {
    SUBCASE("non-string compensation annotation") {
        const auto doc = Value::parse(
            R"([{"name": "ok"}, {"name": "bad", "annotations": {"x-compensation-tool": 7}}])");
        CHECK_THROWS_WITH_AS(parse_mcp_tools(doc),
                             "tool document entry 1: annotation 'x-compensation-tool' must be "
                             "a string",
                             McpParseError);
    }
    SUBCASE("required not a subset of properties") {
        const auto doc = Value::parse(R"([{
            "name": "bad",
            "inputSchema": {"type": "object",
                            "properties": {"a": {"type": "string"}},
                            "required": ["a", "b"]}
        }])");
        CHECK_THROWS_AS(parse_mcp_tools(doc), McpParseError);
    }
    SUBCASE("missing name") {
        CHECK_THROWS_AS(parse_mcp_tools(Value::parse(R"([{"description": "x"}])")),
                        McpParseError);
    }
    SUBCASE("non-string input-mapping annotation") {
        const auto doc = Value::parse(
            R"([{"name": "bad", "annotations": {"input-mapping": ["a"]}}])");
        CHECK_THROWS_AS(parse_mcp_tools(doc), McpParseError);
    }
    SUBCASE("not an array") {
        CHECK_THROWS_AS(parse_mcp_tools(Value::parse(R"({"name": "x"})")), McpParseError);
    }
}

TEST_CASE("unknown annotation keys are preserved verbatim") {
    const auto defs = parse_mcp_tools(Value::parse(
        R"([{"name": "t", "annotations": {"x-compensation-tool": "u", "x-vendor-hint": {"a": 1}}}])"));
    REQUIRE(defs.size() == 1);
    CHECK(defs.front().annotations.at("x-vendor-hint") == Value{{"a", 1}});
}

TEST_CASE("round-trip: serialize then re-parse yields identical definitions") {
    for (const char* fixture : {"/mcp/book_flight_annotation.json", "/mcp/travel_tools.json",
                                "/mcp/group_tools.json"}) {
        const auto defs = parse_mcp_tools_text(read_file(std::string(SAGA_DATA_DIR) + fixture));
        const auto reparsed = parse_mcp_tools(tool_definitions_to_json(defs));
        CHECK(defs == reparsed);
    }
}

TEST_CASE("registry registration and annotation merging") {
    ToolRegistry registry;
    ToolDefinition book;
    book.name = "book_flight";
    ToolDefinition cancel;
    cancel.name = "cancel_flight";
    registry.register_tool(book);
    registry.register_tool(cancel);

    SUBCASE("duplicate registration fails") {
        CHECK_THROWS_AS(registry.register_tool(ToolDefinition{"book_flight", "", {}, {}}),
                        ConfigError);
    }
    SUBCASE("names come out sorted") {
        CHECK(registry.names() == std::vector<std::string>{"book_flight", "cancel_flight"});
    }
    SUBCASE("merge overlays annotations on existing tools") {
        ToolDefinition overlay;
        overlay.name = "book_flight";
        overlay.annotations = Value{{kCompensationToolAnnotation, "cancel_flight"}};
        registry.merge_annotations({overlay});
        CHECK(registry.at("book_flight").annotations.at(kCompensationToolAnnotation) ==
              "cancel_flight");
    }
    SUBCASE("merge for an unknown tool is a config error") {
        ToolDefinition overlay;
        overlay.name = "no_such_tool";
        CHECK_THROWS_AS(registry.merge_annotations({overlay}), ConfigError);
    }
    SUBCASE("lookup of unregistered tool") {
        CHECK_THROWS_AS(registry.at("nope"), UnknownToolError);
    }
}
