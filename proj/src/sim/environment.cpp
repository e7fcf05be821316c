#include "saga/sim/environment.hpp"

#include <algorithm>

#include "saga/errors.hpp"

namespace saga::sim {

LedgerVerdict ledger_is_clean(const EnvironmentLedger& ledger, bool run_succeeded) {
    LedgerVerdict verdict;
    if (run_succeeded) return verdict;
    for (const auto& effect : ledger.effects) {
        if (!effect.reversed) {
            verdict.clean = false;
            verdict.violations.push_back("unreversed effect '" + effect.ref + "' from '" +
                                         effect.tool_name + "'");
        }
    }
    return verdict;
}

DisruptionSpec DisruptionSpec::from_json(const Value& config) {
    DisruptionSpec spec;
    spec.target_tool = config.at("tool").get<std::string>();
    const std::string mode = config.at("mode").get<std::string>();
    if (mode == "transient") {
        spec.mode = Mode::Transient;
        spec.count = config.value("fail_count", 1);
        if (spec.count < 1) throw ConfigError("disruption fail_count must be >= 1");
    } else if (mode == "permanent") {
        spec.mode = Mode::Permanent;
    } else if (mode == "fail_on_nth_call") {
        spec.mode = Mode::FailOnNthCall;
        spec.count = config.value("n", 1);
        if (spec.count < 1) throw ConfigError("disruption n must be >= 1");
    } else {
        throw ConfigError("unknown disruption mode '" + mode + "'");
    }
    spec.error_code = config.value("error_code", spec.error_code);
    return spec;
}

Value DisruptionSpec::to_json() const {
    Value out{{"tool", target_tool}, {"error_code", error_code}};
    switch (mode) {
        case Mode::Transient:
            out["mode"] = "transient";
            out["fail_count"] = count;
            break;
        case Mode::Permanent:
            out["mode"] = "permanent";
            break;
        case Mode::FailOnNthCall:
            out["mode"] = "fail_on_nth_call";
            out["n"] = count;
            break;
    }
    return out;
}

ToolDefinition SimToolSpec::to_definition() const {
    ToolDefinition def;
    def.name = name;
    def.description = description;
    Value properties = Value::object();
    for (const auto& param : params) {
        properties[param] = Value{{"type", "string"}};
    }
    def.input_schema = Value{{"type", "object"}, {"properties", properties}, {"required", params}};
    def.annotations = annotations;
    return def;
}

SimToolSpec SimToolSpec::from_json(const Value& config) {
    SimToolSpec spec;
    spec.name = config.at("name").get<std::string>();
    spec.description = config.value("description", "");
    const std::string kind = config.at("kind").get<std::string>();
    if (config.contains("params")) {
        spec.params = config["params"].get<std::vector<std::string>>();
    }
    if (kind == "effect") {
        spec.kind = Kind::Effect;
        spec.result_key = config.at("result_key").get<std::string>();
        spec.ref_prefix = config.at("ref_prefix").get<std::string>();
    } else if (kind == "reverse") {
        spec.kind = Kind::Reverse;
        spec.reverses = config.at("reverses").get<std::string>();
        spec.ref_param = config.at("ref_param").get<std::string>();
    } else if (kind == "read") {
        spec.kind = Kind::Read;
        spec.fixed_result = config.value("result", Value::object());
    } else {
        throw ConfigError("unknown tool kind '" + kind + "' for tool '" + spec.name + "'");
    }
    if (config.contains("annotations")) spec.annotations = config["annotations"];
    return spec;
}

SimEnvironment::SimEnvironment(std::vector<SimToolSpec> tools,
                               std::optional<std::filesystem::path> ledger_path)
    : specs_(std::move(tools)), ledger_path_(std::move(ledger_path)) {
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        if (!by_name_.emplace(specs_[i].name, i).second) {
            throw ConfigError("duplicate simulated tool '" + specs_[i].name + "'");
        }
    }
    for (const auto& spec : specs_) {
        if (spec.kind == SimToolSpec::Kind::Reverse && by_name_.count(spec.reverses) == 0) {
            throw ConfigError("tool '" + spec.name + "' reverses unknown tool '" +
                              spec.reverses + "'");
        }
    }
    if (ledger_path_.has_value()) {
        if (std::filesystem::exists(*ledger_path_)) replay_ledger();
        ledger_out_.open(*ledger_path_, std::ios::app);
        if (!ledger_out_) {
            throw ConfigError("cannot open environment ledger at " + ledger_path_->string());
        }
    }
}

bool SimEnvironment::has_tool(const std::string& name) const {
    return by_name_.count(name) != 0;
}

std::vector<ToolDefinition> SimEnvironment::definitions() const {
    std::vector<ToolDefinition> defs;
    defs.reserve(specs_.size());
    for (const auto& spec : specs_) defs.push_back(spec.to_definition());
    return defs;
}

void SimEnvironment::inject(const DisruptionSpec& disruption) {
    if (!has_tool(disruption.target_tool)) {
        throw ConfigError("disruption targets unregistered tool '" + disruption.target_tool +
                          "'");
    }
    disruptions_[disruption.target_tool] = disruption;
}

std::optional<std::string> SimEnvironment::disruption_failure(const std::string& name) {
    const auto it = disruptions_.find(name);
    if (it == disruptions_.end()) return std::nullopt;
    DisruptionSpec& d = it->second;
    switch (d.mode) {
        case DisruptionSpec::Mode::Transient:
            if (d.count > 0) {
                --d.count;
                return d.error_code + ": simulated transient outage on '" + name + "'";
            }
            return std::nullopt;
        case DisruptionSpec::Mode::Permanent:
            return d.error_code + ": simulated permanent outage on '" + name + "'";
        case DisruptionSpec::Mode::FailOnNthCall:
            if (call_counts_[name] == d.count) {
                return d.error_code + ": simulated failure on call " + std::to_string(d.count) +
                       " of '" + name + "'";
            }
            return std::nullopt;
    }
    return std::nullopt;
}

ToolResult SimEnvironment::call(const std::string& name, const Value& params) {
    const auto it = by_name_.find(name);
    if (it == by_name_.end()) {
        return ToolResult::failure("UNKNOWN_TOOL: '" + name + "' is not part of this environment");
    }
    ++call_counts_[name];

    ToolResult result;
    if (const auto injected = disruption_failure(name)) {
        result = ToolResult::failure(*injected);
    } else {
        result = execute(specs_[it->second], params);
    }
    ledger_.call_trace.push_back({name, params, result.ok, result.ok ? "" : result.error});
    return result;
}

ToolResult SimEnvironment::execute(const SimToolSpec& spec, const Value& params) {
    for (const auto& required : spec.params) {
        if (!params.contains(required)) {
            return ToolResult::failure("INVALID_INPUT: '" + spec.name +
                                       "' requires parameter '" + required + "'");
        }
    }
    switch (spec.kind) {
        case SimToolSpec::Kind::Effect: {
            Effect effect;
            effect.effect_id = next_effect_id_++;
            effect.tool_name = spec.name;
            effect.params = params;
            effect.ref = spec.ref_prefix + "-" + std::to_string(effect.effect_id);
            ledger_.effects.push_back(effect);
            persist({{"kind", "effect"},
                     {"effect_id", effect.effect_id},
                     {"tool_name", effect.tool_name},
                     {"params", effect.params},
                     {"ref", effect.ref}});
            return ToolResult::success({{spec.result_key, effect.ref}});
        }
        case SimToolSpec::Kind::Reverse: {
            if (!params.contains(spec.ref_param)) {
                return ToolResult::failure("INVALID_INPUT: '" + spec.name +
                                           "' requires parameter '" + spec.ref_param + "'");
            }
            const Value& ref_value = params.at(spec.ref_param);
            if (!ref_value.is_string()) {
                return ToolResult::failure("UNKNOWN_REF: '" + spec.ref_param +
                                           "' must be a reference string");
            }
            const std::string ref = ref_value.get<std::string>();
            const auto effect =
                std::find_if(ledger_.effects.begin(), ledger_.effects.end(),
                             [&](const Effect& e) { return e.ref == ref; });
            if (effect == ledger_.effects.end()) {
                return ToolResult::failure("UNKNOWN_REF: no effect with reference '" + ref +
                                           "'");
            }
            if (effect->tool_name != spec.reverses) {
                return ToolResult::failure("WRONG_TOOL: reference '" + ref +
                                           "' was created by '" + effect->tool_name + "', not '" +
                                           spec.reverses + "'");
            }
            if (effect->reversed) {
                return ToolResult::failure("ALREADY_REVERSED: effect '" + ref +
                                           "' was already reversed");
            }
            effect->reversed = true;
            persist({{"kind", "reversed"}, {"ref", ref}});
            return ToolResult::success({{"reversed_ref", ref}});
        }
        case SimToolSpec::Kind::Read:
            return ToolResult::success(spec.fixed_result);
    }
    return ToolResult::failure("INVALID_INPUT: unreachable tool kind");
}

void SimEnvironment::persist(const Value& entry) {
    if (!ledger_path_.has_value()) return;
    ledger_out_ << entry.dump() << '\n';
    ledger_out_.flush();
}

void SimEnvironment::replay_ledger() {
    std::ifstream in(*ledger_path_);
    if (!in) {
        throw ConfigError("cannot read environment ledger at " + ledger_path_->string());
    }
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Value entry = Value::parse(line, nullptr, false);
        if (entry.is_discarded()) {
            // Same torn-tail tolerance as the transaction log.
            if (in.peek() == std::ifstream::traits_type::eof()) break;
            throw ConfigError("corrupt environment ledger at " + ledger_path_->string());
        }
        const std::string kind = entry.at("kind").get<std::string>();
        if (kind == "effect") {
            Effect effect;
            effect.effect_id = entry.at("effect_id").get<std::int64_t>();
            effect.tool_name = entry.at("tool_name").get<std::string>();
            effect.params = entry.at("params");
            effect.ref = entry.at("ref").get<std::string>();
            ledger_.effects.push_back(std::move(effect));
            next_effect_id_ = std::max(next_effect_id_, ledger_.effects.back().effect_id + 1);
        } else if (kind == "reversed") {
            const std::string ref = entry.at("ref").get<std::string>();
            for (auto& effect : ledger_.effects) {
                if (effect.ref == ref) effect.reversed = true;
            }
        }
    }
}

std::vector<SimToolSpec> travel_tools() {
    const auto tools_json = Value::parse(R"([
      {"name": "get_weather", "kind": "read", "params": ["city"],
       "description": "Weather forecast for a city.",
       "result": {"forecast": "clear"}},
      {"name": "book_flight", "kind": "effect",
       "params": ["flight_id", "seat_class", "passenger_id"],
       "description": "Books a flight and returns a confirmation reference.",
       "result_key": "confirmation_ref", "ref_prefix": "FL"},
      {"name": "cancel_flight", "kind": "reverse", "params": ["booking_ref"],
       "description": "Cancels a flight booking by confirmation reference.",
       "reverses": "book_flight", "ref_param": "booking_ref"},
      {"name": "book_hotel", "kind": "effect", "params": ["hotel_id", "nights"],
       "description": "Reserves a hotel room and returns a reservation id.",
       "result_key": "reservation_id", "ref_prefix": "HT"},
      {"name": "cancel_hotel", "kind": "reverse", "params": ["res_id"],
       "description": "Cancels a hotel reservation.",
       "reverses": "book_hotel", "ref_param": "res_id"},
      {"name": "book_car", "kind": "effect", "params": ["car_class"],
       "description": "Books a rental car and returns a confirmation reference.",
       "result_key": "confirmation_ref", "ref_prefix": "CR"},
      {"name": "cancel_car", "kind": "reverse", "params": ["booking_ref"],
       "description": "Cancels a car booking.",
       "reverses": "book_car", "ref_param": "booking_ref"}
    ])");
    std::vector<SimToolSpec> specs;
    for (const auto& entry : tools_json) specs.push_back(SimToolSpec::from_json(entry));
    return specs;
}

std::vector<SimToolSpec> jobshop_tools() {
    std::vector<SimToolSpec> specs;
    SimToolSpec status;
    status.name = "get_machine_status";
    status.description = "Reports whether a machine is accepting jobs.";
    status.kind = SimToolSpec::Kind::Read;
    status.params = {"machine"};
    status.fixed_result = Value{{"status", "accepting"}};
    specs.push_back(status);

    for (int machine = 1; machine <= 3; ++machine) {
        const std::string suffix = std::to_string(machine);
        SimToolSpec assign;
        assign.name = "assign_machine_" + suffix;
        assign.description = "Schedules a job on machine " + suffix + ".";
        assign.kind = SimToolSpec::Kind::Effect;
        assign.params = {"job_id"};
        assign.result_key = "assignment_ref";
        assign.ref_prefix = "M" + suffix;
        specs.push_back(assign);

        SimToolSpec unassign;
        unassign.name = "unassign_machine_" + suffix;
        unassign.description = "Removes a previously scheduled job from machine " + suffix + ".";
        unassign.kind = SimToolSpec::Kind::Reverse;
        unassign.params = {"assignment_ref"};
        unassign.reverses = assign.name;
        unassign.ref_param = "assignment_ref";
        specs.push_back(unassign);
    }
    return specs;
}

std::vector<SimToolSpec> group_booking_tools() {
    const auto tools_json = Value::parse(R"([
      {"name": "book_flight", "kind": "effect", "params": ["passenger_id", "flight_id"],
       "description": "Books one passenger on a flight.",
       "result_key": "confirmation_ref", "ref_prefix": "FL"},
      {"name": "cancel_flight", "kind": "reverse", "params": ["booking_ref"],
       "description": "Cancels a single passenger booking.",
       "reverses": "book_flight", "ref_param": "booking_ref"}
    ])");
    std::vector<SimToolSpec> specs;
    for (const auto& entry : tools_json) specs.push_back(SimToolSpec::from_json(entry));
    return specs;
}

std::vector<SimToolSpec> builtin_tools(const std::string& kind) {
    if (kind == "travel") return travel_tools();
    if (kind == "jobshop") return jobshop_tools();
    if (kind == "group_booking") return group_booking_tools();
    throw ConfigError("unknown scenario kind '" + kind + "'");
}

}  // namespace saga::sim
