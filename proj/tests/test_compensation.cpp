#include "doctest.h"
#include "saga/compensation.hpp"

using namespace saga;

namespace {

ToolRegistry travel_registry() {
    ToolRegistry registry;
    ToolDefinition book;
    book.name = "book_flight";
    book.input_schema = Value::parse(
        R"({"type": "object", "properties": {"flight_id": {"type": "string"}},
            "required": ["flight_id"]})");
    registry.register_tool(book);

    ToolDefinition cancel;
    cancel.name = "cancel_flight";
    cancel.input_schema = Value::parse(
        R"({"type": "object", "properties": {"booking_ref": {"type": "string"}},
            "required": ["booking_ref"]})");
    registry.register_tool(cancel);

    ToolDefinition weather;
    weather.name = "get_weather";
    registry.register_tool(weather);

    ToolDefinition noop_undo;
    noop_undo.name = "release_lock";  // compensation without required params
    noop_undo.input_schema = Value::parse(R"({"type": "object", "properties": {}})");
    registry.register_tool(noop_undo);
    return registry;
}

ToolCallRecord completed_booking() {
    ToolCallRecord rec;
    rec.record_id = 1;
    rec.run_id = "r";
    rec.tool_name = "book_flight";
    rec.params = Value{{"flight_id", "F100"}};
    rec.result = Value{{"confirmation_ref", "C9"}};
    rec.status = RecordStatus::Completed;
    return rec;
}

}  // namespace

TEST_CASE("mapping expression grammar") {
    SUBCASE("parse and serialize are inverses") {
        const std::string expr = "booking_ref=result.confirmation_ref;extra=params.flight_id";
        const auto rules = parse_mapping(expr);
        REQUIRE(rules.size() == 2);
        CHECK(rules[0] ==
              MappingRule{"booking_ref", MappingSource::ForwardResultPath, "confirmation_ref"});
        CHECK(rules[1] == MappingRule{"extra", MappingSource::ForwardParam, "flight_id"});
        CHECK(serialize_mapping(rules) == expr);
    }
    SUBCASE("whitespace is tolerated") {
        const auto rules = parse_mapping("  a = result.x.y ;\tb = params.z ");
        REQUIRE(rules.size() == 2);
        CHECK(rules[0].ref == "x.y");
        CHECK(rules[1].ref == "z");
    }
    SUBCASE("empty expression means no rules") {
        CHECK(parse_mapping("").empty());
    }
    SUBCASE("rejects malformed rules") {
        CHECK_THROWS_AS(parse_mapping("no_equals"), MappingParseError);
        CHECK_THROWS_AS(parse_mapping("a=unknown.x"), MappingParseError);
        CHECK_THROWS_AS(parse_mapping("a=result."), MappingParseError);
        CHECK_THROWS_AS(parse_mapping("a=params.x.y"), MappingParseError);
        CHECK_THROWS_AS(parse_mapping("1bad=params.x"), MappingParseError);
        CHECK_THROWS_AS(parse_mapping("a=params.x;;b=params.y"), MappingParseError);
    }
}

TEST_CASE("resolution precedence across the three sources") {
    // A second reversal tool so the API config can win distinguishably.
    ToolDefinition alt_cancel;
    alt_cancel.name = "void_booking";
    alt_cancel.input_schema =
        Value::parse(R"({"type": "object", "properties": {"ref": {"type": "string"}},
                         "required": ["ref"]})");

    ToolRegistry annotated_registry = travel_registry();
    annotated_registry.merge_annotations(
        {ToolDefinition{"book_flight", "", Value::object(),
                        Value{{kCompensationToolAnnotation, "cancel_flight"}}}});

    RuleTableAdvisor advisor(RuleTableAdvisor::parse_rule_table(Value::parse(
        R"({"compensations": {"book_flight": {"compensation_tool": "release_lock"}}})")));

    SUBCASE("api config beats annotation and advisor") {
        ToolRegistry both = travel_registry();
        both.register_tool(alt_cancel);
        both.merge_annotations(
            {ToolDefinition{"book_flight", "", Value::object(),
                            Value{{kCompensationToolAnnotation, "cancel_flight"}}}});
        CompensationConfig config;
        config.pairs["book_flight"] = "void_booking";
        config.mappings["book_flight"] = "ref=result.confirmation_ref";
        const auto binding = resolve("book_flight", config, both, advisor);
        CHECK(binding.provenance == BindingProvenance::ApiConfig);
        CHECK(binding.compensation_tool == "void_booking");
    }
    SUBCASE("annotation beats advisor when config is silent") {
        const auto binding = resolve("book_flight", {}, annotated_registry, advisor);
        CHECK(binding.provenance == BindingProvenance::McpAnnotation);
        CHECK(binding.compensation_tool == "cancel_flight");
        // No mapping annotation: the required parameter defers to the advisor.
        REQUIRE(binding.input_mapping.size() == 1);
        CHECK(binding.input_mapping[0] ==
              MappingRule{"booking_ref", MappingSource::AdvisorInferred, ""});
    }
    SUBCASE("advisor wins when config and annotation are both silent") {
        ToolRegistry plain = travel_registry();
        const auto binding = resolve("book_flight", {}, plain, advisor);
        CHECK(binding.provenance == BindingProvenance::Advisor);
        CHECK(binding.compensation_tool == "release_lock");
        CHECK(binding.input_mapping.empty());  // release_lock requires nothing
    }
    SUBCASE("nothing anywhere: assumed to have no side effects") {
        ToolRegistry plain = travel_registry();
        RuleTableAdvisor empty_advisor;
        const auto binding = resolve("get_weather", {}, plain, empty_advisor);
        CHECK(binding.provenance == BindingProvenance::AssumedNoSideEffects);
        CHECK_FALSE(binding.compensation_tool.has_value());
    }
}

TEST_CASE("declared sources naming unregistered tools fail at resolution time") {
    ToolRegistry registry = travel_registry();
    RuleTableAdvisor advisor;
    SUBCASE("api config") {
        CompensationConfig config;
        config.pairs["book_flight"] = "no_such_tool";
        CHECK_THROWS_AS(resolve("book_flight", config, registry, advisor), ResolutionError);
    }
    SUBCASE("annotation") {
        registry.merge_annotations(
            {ToolDefinition{"book_flight", "", Value::object(),
                            Value{{kCompensationToolAnnotation, "no_such_tool"}}}});
        CHECK_THROWS_AS(resolve("book_flight", {}, registry, advisor), ResolutionError);
    }
    SUBCASE("advisor answers naming unknown tools degrade to no-side-effects") {
        RuleTableAdvisor bad_advisor(RuleTableAdvisor::parse_rule_table(Value::parse(
            R"({"compensations": {"book_flight": {"compensation_tool": "no_such_tool"}}})")));
        const auto binding = resolve("book_flight", {}, registry, bad_advisor);
        CHECK(binding.provenance == BindingProvenance::AssumedNoSideEffects);
    }
    SUBCASE("mapping targeting an undeclared compensation parameter") {
        CompensationConfig config;
        config.pairs["book_flight"] = "cancel_flight";
        config.mappings["book_flight"] = "wrong_param=result.confirmation_ref";
        CHECK_THROWS_AS(resolve("book_flight", config, registry, advisor), ResolutionError);
    }
    SUBCASE("eager resolver surfaces the failure at construction") {
        CompensationConfig config;
        config.pairs["book_flight"] = "no_such_tool";
        CHECK_THROWS_AS(CompensationResolver(config, registry, advisor), ResolutionError);
    }
}

TEST_CASE("the eager resolver caches one binding per registered tool") {
    ToolRegistry registry = travel_registry();
    RuleTableAdvisor advisor;
    CompensationConfig config;
    config.pairs["book_flight"] = "cancel_flight";
    config.mappings["book_flight"] = "booking_ref=result.confirmation_ref";
    CompensationResolver resolver(config, registry, advisor);
    CHECK(resolver.bindings().size() == registry.size());
    CHECK(resolver.binding_for("book_flight").provenance == BindingProvenance::ApiConfig);
    CHECK(resolver.binding_for("get_weather").provenance ==
          BindingProvenance::AssumedNoSideEffects);
    CHECK_THROWS_AS(resolver.binding_for("unknown"), UnknownToolError);
}

TEST_CASE("extract_params pulls values along the mapping rules") {
    ToolRegistry registry = travel_registry();
    RuleTableAdvisor advisor;
    const ToolCallRecord record = completed_booking();

    SUBCASE("result path rule") {
        CompensationBinding binding{"book_flight", "cancel_flight",
                                    {{"booking_ref", MappingSource::ForwardResultPath,
                                      "confirmation_ref"}},
                                    BindingProvenance::ApiConfig};
        const auto extracted = extract_params(binding, record, registry, advisor);
        CHECK(extracted.params == Value{{"booking_ref", "C9"}});
        CHECK(extracted.provenance.at("booking_ref") == "result.confirmation_ref");
    }
    SUBCASE("forward param rule") {
        CompensationBinding binding{"book_flight", "release_lock",
                                    {{"flight", MappingSource::ForwardParam, "flight_id"}},
                                    BindingProvenance::ApiConfig};
        // release_lock declares no properties; undeclared params pass the
        // schema check only because the schema is open.
        const auto extracted = extract_params(binding, record, registry, advisor);
        CHECK(extracted.params == Value{{"flight", "F100"}});
        CHECK(extracted.provenance.at("flight") == "params.flight_id");
    }
    SUBCASE("empty mapping yields an empty parameter map") {
        CompensationBinding binding{"book_flight", "release_lock", {},
                                    BindingProvenance::Advisor};
        const auto extracted = extract_params(binding, record, registry, advisor);
        CHECK(extracted.params == Value::object());
    }
    SUBCASE("missing result path raises an extraction error naming the rule") {
        CompensationBinding binding{"book_flight", "cancel_flight",
                                    {{"booking_ref", MappingSource::ForwardResultPath,
                                      "reservation_id"}},
                                    BindingProvenance::ApiConfig};
        try {
            extract_params(binding, record, registry, advisor);
            FAIL("expected ExtractionError");
        } catch (const ExtractionError& e) {
            CHECK(e.param == "booking_ref");
            CHECK(e.record_id == 1);
        }
    }
    SUBCASE("advisor-inferred rule resolves lazily from the record") {
        CompensationBinding binding{"book_flight", "cancel_flight",
                                    {{"booking_ref", MappingSource::AdvisorInferred, ""}},
                                    BindingProvenance::McpAnnotation};
        const auto extracted = extract_params(binding, record, registry, advisor);
        // The stub stems booking_ref to confirmation_ref in the result.
        CHECK(extracted.params == Value{{"booking_ref", "C9"}});
        CHECK(extracted.provenance.at("booking_ref") == "advisor:result.confirmation_ref");
    }
    SUBCASE("advisor abstention on a required parameter is an extraction error") {
        ToolCallRecord bare = record;
        bare.result = Value{{"nothing_useful", 1}};
        CompensationBinding binding{"book_flight", "cancel_flight",
                                    {{"booking_ref", MappingSource::AdvisorInferred, ""}},
                                    BindingProvenance::McpAnnotation};
        CHECK_THROWS_AS(extract_params(binding, bare, registry, advisor), ExtractionError);
    }
    SUBCASE("a mapping that skips a required parameter fails") {
        CompensationBinding binding{"book_flight", "cancel_flight", {},
                                    BindingProvenance::ApiConfig};
        CHECK_THROWS_AS(extract_params(binding, record, registry, advisor), ExtractionError);
    }
}

TEST_CASE("every extracted value is traceable to the record") {
    ToolRegistry registry = travel_registry();
    RuleTableAdvisor advisor;
    const ToolCallRecord record = completed_booking();
    CompensationBinding binding{"book_flight", "cancel_flight",
                                {{"booking_ref", MappingSource::ForwardResultPath,
                                  "confirmation_ref"},
                                 {"flight", MappingSource::ForwardParam, "flight_id"}},
                                BindingProvenance::ApiConfig};
    const auto extracted = extract_params(binding, record, registry, advisor);
    for (const auto& [param, source] : extracted.provenance) {
        Value expected;
        if (source.rfind("result.", 0) == 0) {
            expected = *value_at_path(*record.result, source.substr(7));
        } else if (source.rfind("params.", 0) == 0) {
            expected = *value_at_path(record.params, source.substr(7));
        } else {
            FAIL("unexpected provenance " << source);
        }
        CHECK(extracted.params.at(param) == expected);
    }
}
