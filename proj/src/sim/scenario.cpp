#include "saga/sim/scenario.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "saga/graph.hpp"
#include "saga/intercept.hpp"

namespace saga::sim {

std::vector<SimToolSpec> ScenarioSpec::environment_tools() const {
    return kind == "custom" ? custom_tools : builtin_tools(kind);
}

ScenarioSpec ScenarioSpec::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open scenario file " + file.string());
    Value config;
    try {
        config = Value::parse(in);
    } catch (const Value::exception& e) {
        throw ConfigError("scenario file " + file.string() + ": " + e.what());
    }
    return from_json(config, file.parent_path());
}

ScenarioSpec ScenarioSpec::from_json(const Value& config, const std::filesystem::path& base_dir) {
    ScenarioSpec spec;
    try {
        spec.name = config.at("name").get<std::string>();
        spec.kind = config.at("kind").get<std::string>();
        spec.seed = config.value("seed", 0);
        if (spec.kind == "custom") {
            if (!config.contains("tools")) {
                throw ConfigError("scenario field 'tools': required for kind 'custom'");
            }
            for (const auto& entry : config["tools"]) {
                spec.custom_tools.push_back(SimToolSpec::from_json(entry));
            }
        } else {
            builtin_tools(spec.kind);  // validates the kind
        }
        if (config.contains("script")) {
            for (const auto& entry : config["script"]) {
                ScriptStep step;
                step.tool = entry.at("tool").get<std::string>();
                step.params = entry.value("params", Value::object());
                step.note = entry.value("note", "");
                spec.script.push_back(std::move(step));
            }
        }
        if (config.contains("disruptions")) {
            for (const auto& entry : config["disruptions"]) {
                spec.disruptions.push_back(DisruptionSpec::from_json(entry));
            }
        }
        spec.policy = RecoveryConfig::from_json(config.value("policy", Value()));
        spec.advisor_rules = RuleTableAdvisor::parse_rule_table(config.value("advisor", Value()));
        if (config.contains("bindings")) {
            const Value& bindings = config["bindings"];
            spec.api_config = CompensationConfig::from_json(bindings.value("api_config", Value()));
            if (bindings.contains("mcp_document")) {
                const std::filesystem::path doc = bindings["mcp_document"].get<std::string>();
                spec.mcp_document = doc.is_absolute() ? doc : base_dir / doc;
            }
        }
    } catch (const Value::exception& e) {
        throw ConfigError(std::string("scenario config: ") + e.what());
    }
    return spec;
}

std::string_view to_string(RunOutcome o) {
    switch (o) {
        case RunOutcome::Success: return "SUCCESS";
        case RunOutcome::RolledBackClean: return "ROLLED_BACK_CLEAN";
        case RunOutcome::HaltedDirty: return "HALTED_DIRTY";
    }
    return "SUCCESS";
}

int exit_code_for(RunOutcome o) {
    return o == RunOutcome::HaltedDirty ? 2 : 0;
}

Value RunReport::to_json() const {
    return Value{
        {"scenario", scenario},
        {"seed", seed},
        {"outcome", std::string(to_string(outcome))},
        {"counts",
         {{"retries", retries},
          {"alternatives", alternatives},
          {"compensations", compensations},
          {"advisor_calls", advisor_calls}}},
        {"wall_time_ms", wall_time_ms},
        {"ledger", {{"clean", ledger_clean}, {"violations", ledger_violations}}},
    };
}

std::string RunReport::to_text() const {
    std::ostringstream out;
    out << "scenario:      " << scenario << "\n";
    out << "seed:          " << seed << "\n";
    out << "outcome:       " << to_string(outcome) << "\n";
    out << "retries:       " << retries << "\n";
    out << "alternatives:  " << alternatives << "\n";
    out << "compensations: " << compensations << "\n";
    out << "advisor_calls: " << advisor_calls << "\n";
    out << "wall_time_ms:  " << wall_time_ms << "\n";
    out << "ledger:        " << (ledger_clean ? "clean" : "DIRTY") << "\n";
    for (const auto& violation : ledger_violations) {
        out << "  violation:   " << violation << "\n";
    }
    return out.str();
}

std::string RunReport::to_json_lines(const std::optional<RollbackReport>& rollback) const {
    std::ostringstream out;
    if (rollback.has_value()) {
        for (const auto& entry : rollback->entries) {
            Value line{
                {"event", "rollback_entry"},
                {"record_id", entry.record_id},
                {"tool", entry.tool_name},
                {"outcome", std::string(to_string(entry.outcome))},
            };
            if (entry.compensation_tool.has_value()) {
                line["compensation_tool"] = *entry.compensation_tool;
                line["params"] = entry.extracted_params;
            }
            if (entry.error.has_value()) line["error"] = *entry.error;
            out << line.dump() << "\n";
        }
    }
    Value report_line = to_json();
    report_line["event"] = "run_report";
    out << report_line.dump() << "\n";
    return out.str();
}

namespace {

struct RunStack {
    std::unique_ptr<Clock> clock;
    std::unique_ptr<SimEnvironment> env;
    ToolRegistry registry;
    std::unique_ptr<RuleTableAdvisor> advisor;
    std::unique_ptr<CompensationResolver> resolver;
    std::unique_ptr<TransactionLog> log;
    std::unique_ptr<RecoveryManager> manager;
    std::string run_id;
    std::filesystem::path log_path;
};

RunStack build_stack(const ScenarioSpec& spec, const RunnerOptions& options, bool fresh_run) {
    RunStack stack;
    const std::uint64_t seed = options.seed_override.value_or(spec.seed);
    stack.run_id = spec.name + "-s" + std::to_string(seed);

    if (options.real_time) {
        stack.clock = std::make_unique<SystemClock>();
    } else {
        stack.clock = std::make_unique<VirtualClock>();
    }

    std::filesystem::create_directories(options.log_dir);
    stack.log_path = options.log_dir / (stack.run_id + ".jsonl");
    if (fresh_run) {
        std::filesystem::remove(stack.log_path);
        if (options.env_ledger.has_value()) std::filesystem::remove(*options.env_ledger);
    }

    stack.env = std::make_unique<SimEnvironment>(spec.environment_tools(), options.env_ledger);
    for (const auto& disruption : spec.disruptions) stack.env->inject(disruption);

    for (auto& def : stack.env->definitions()) stack.registry.register_tool(std::move(def));
    if (spec.mcp_document.has_value()) {
        std::ifstream doc(*spec.mcp_document);
        if (!doc) throw ConfigError("cannot open tool document " + spec.mcp_document->string());
        std::stringstream buffer;
        buffer << doc.rdbuf();
        stack.registry.merge_annotations(parse_mcp_tools_text(buffer.str()));
    }

    stack.advisor = std::make_unique<RuleTableAdvisor>(spec.advisor_rules);
    stack.resolver = std::make_unique<CompensationResolver>(spec.api_config, stack.registry,
                                                            *stack.advisor);

    TransactionLog::Options log_options;
    if (options.crash_after_appends > 0) {
        log_options.after_append = [n = options.crash_after_appends,
                                    seen = 0](const ToolCallRecord&) mutable {
            if (++seen == n) std::_Exit(70);
        };
    }
    stack.log = std::make_unique<TransactionLog>(stack.run_id, stack.log_path, *stack.clock,
                                                 std::move(log_options));

    stack.manager = std::make_unique<RecoveryManager>(*stack.log, *stack.env, stack.registry,
                                                      *stack.resolver, *stack.advisor,
                                                      *stack.clock, spec.policy, seed);
    return stack;
}

RunResult finish(const ScenarioSpec& spec, const RunnerOptions& options, RunStack& stack,
                 std::optional<RollbackReport> rollback, const std::string& transcript,
                 std::int64_t started_at_ms) {
    const bool run_succeeded = !rollback.has_value();
    const LedgerVerdict verdict = ledger_is_clean(stack.env->ledger(), run_succeeded);

    RunResult result;
    result.rollback = rollback;
    result.transcript = transcript;
    result.log_path = stack.log_path;
    result.ledger = stack.env->ledger();
    result.records = stack.log->get_all();
    result.report.scenario = spec.name;
    result.report.seed = options.seed_override.value_or(spec.seed);
    result.report.retries = stack.manager->stats().retries;
    result.report.alternatives = stack.manager->stats().alternatives_tried;
    result.report.compensations = stack.manager->stats().compensations;
    result.report.advisor_calls = stack.advisor->consult_count();
    result.report.wall_time_ms = stack.clock->now_ms() - started_at_ms;
    result.report.ledger_clean = verdict.clean;
    result.report.ledger_violations = verdict.violations;

    if (run_succeeded) {
        result.report.outcome = RunOutcome::Success;
    } else if (rollback->halted_at.has_value()) {
        result.report.outcome = RunOutcome::HaltedDirty;
    } else if (!verdict.clean) {
        // A completed rollback must leave the world clean; anything else
        // is a bug that must never pass silently.
        std::string detail;
        for (const auto& violation : verdict.violations) detail += " " + violation;
        throw SafetyViolation("rollback completed but the environment is dirty:" + detail);
    } else {
        result.report.outcome = RunOutcome::RolledBackClean;
    }

    if (options.export_graph.has_value()) {
        std::ofstream out(*options.export_graph);
        out << to_dot(build_graph(stack.log->get_all()), stack.log->get_all());
    }
    if (options.export_trace.has_value()) {
        std::ofstream out(*options.export_trace);
        out << stack.manager->trace_as_json_lines();
    }
    return result;
}

}  // namespace

RunResult run_scenario(const ScenarioSpec& spec, const RunnerOptions& options) {
    if (spec.script.size() > options.max_steps) {
        throw ConfigError("scenario script has " + std::to_string(spec.script.size()) +
                          " steps, above the limit of " + std::to_string(options.max_steps));
    }
    RunStack stack = build_stack(spec, options, /*fresh_run=*/true);
    const std::int64_t started_at_ms = stack.clock->now_ms();

    AgentContext context{stack.run_id, {}};
    ToolInterceptor interceptor(*stack.log, *stack.env, *stack.manager, context);

    std::optional<RollbackReport> rollback;
    for (const auto& step : spec.script) {
        context.add(MessageSource::Agent,
                    step.note.empty() ? "call " + step.tool : step.note);
        InvokeOutcome outcome = interceptor.invoke_tool(step.tool, step.params);
        if (auto* summary = std::get_if<RecoverySummary>(&outcome)) {
            // Recovery already rolled everything back; a scripted agent
            // has nothing left to replan, so the run ends here.
            rollback = std::move(summary->report);
            break;
        }
    }
    return finish(spec, options, stack, std::move(rollback), context.transcript(),
                  started_at_ms);
}

RunResult resume_rollback(const ScenarioSpec& spec, const RunnerOptions& options) {
    RunStack stack = build_stack(spec, options, /*fresh_run=*/false);
    const std::int64_t started_at_ms = stack.clock->now_ms();
    RollbackReport report = stack.manager->rollback();
    return finish(spec, options, stack, std::move(report), "", started_at_ms);
}

}  // namespace saga::sim
