#include "saga/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "saga/errors.hpp"
#include "saga/graph.hpp"

namespace saga {

std::int64_t RetryPolicy::delay_before_retry_ms(int k) const {
    double delay = static_cast<double>(base_delay_ms);
    for (int i = 1; i < k; ++i) delay *= multiplier;
    return static_cast<std::int64_t>(std::llround(delay));
}

RecoveryConfig RecoveryConfig::from_json(const Value& config) {
    RecoveryConfig out;
    if (config.is_null()) return out;
    if (!config.is_object()) throw ConfigError("policy must be an object");
    out.retry.max_retries = config.value("max_retries", out.retry.max_retries);
    out.retry.base_delay_ms = config.value("base_delay_ms", out.retry.base_delay_ms);
    out.retry.multiplier = config.value("multiplier", out.retry.multiplier);
    out.retry.jitter_fraction = config.value("jitter_fraction", out.retry.jitter_fraction);
    out.max_alternatives = config.value("max_alternatives", out.max_alternatives);
    if (out.retry.max_retries < 0) throw ConfigError("policy.max_retries must be >= 0");
    if (out.retry.multiplier < 1.0) throw ConfigError("policy.multiplier must be >= 1");
    if (out.retry.jitter_fraction < 0.0 || out.retry.jitter_fraction >= 1.0) {
        throw ConfigError("policy.jitter_fraction must be in [0, 1)");
    }
    if (config.contains("transient_codes")) {
        out.transient_codes = config["transient_codes"].get<std::vector<std::string>>();
    }
    if (config.contains("permanent_codes")) {
        out.permanent_codes = config["permanent_codes"].get<std::vector<std::string>>();
    }
    return out;
}

std::string_view to_string(CompensationOutcome o) {
    switch (o) {
        case CompensationOutcome::Compensated: return "COMPENSATED";
        case CompensationOutcome::CompensationFailed: return "COMPENSATION_FAILED";
        case CompensationOutcome::SkippedNoSideEffects: return "SKIPPED_NO_SIDE_EFFECTS";
    }
    return "SKIPPED_NO_SIDE_EFFECTS";
}

int RollbackReport::compensated_count() const {
    return static_cast<int>(std::count_if(entries.begin(), entries.end(), [](const auto& e) {
        return e.outcome == CompensationOutcome::Compensated;
    }));
}

int RollbackReport::skipped_count() const {
    return static_cast<int>(std::count_if(entries.begin(), entries.end(), [](const auto& e) {
        return e.outcome == CompensationOutcome::SkippedNoSideEffects;
    }));
}

namespace {

// Error messages carry a leading "CODE: detail" tag.
std::string error_code_of(const std::string& error) {
    const auto colon = error.find(':');
    std::string code = colon == std::string::npos ? error : error.substr(0, colon);
    while (!code.empty() && code.back() == ' ') code.pop_back();
    while (!code.empty() && code.front() == ' ') code.erase(code.begin());
    return code;
}

bool contains(const std::vector<std::string>& haystack, const std::string& needle) {
    return std::find(haystack.begin(), haystack.end(), needle) != haystack.end();
}

std::string plural(int n, const char* one, const char* many) {
    return std::to_string(n) + " " + (n == 1 ? one : many);
}

std::string render_entry(const RollbackEntry& entry) {
    std::ostringstream line;
    line << "  - record " << entry.record_id << " '" << entry.tool_name << "': ";
    switch (entry.outcome) {
        case CompensationOutcome::Compensated:
            line << "compensated via '" << *entry.compensation_tool << "' with "
                 << entry.extracted_params.dump();
            break;
        case CompensationOutcome::CompensationFailed:
            line << "compensation '" << *entry.compensation_tool
                 << "' FAILED: " << entry.error.value_or("");
            break;
        case CompensationOutcome::SkippedNoSideEffects:
            line << "skipped (no known side effects)";
            break;
    }
    return line.str();
}

std::string render_rollback_body(const RollbackReport& report) {
    std::ostringstream out;
    out << "Rollback result: " << plural(report.compensated_count(), "compensation",
                                         "compensations")
        << ", " << report.skipped_count() << " skipped (no known side effects).\n";
    for (const auto& entry : report.entries) out << render_entry(entry) << "\n";
    if (report.halted_at.has_value()) {
        const auto halted = std::find_if(report.entries.begin(), report.entries.end(),
                                         [&](const auto& e) {
                                             return e.record_id == *report.halted_at;
                                         });
        out << "Rollback HALTED at record " << *report.halted_at;
        if (halted != report.entries.end() && halted->compensation_tool.has_value()) {
            out << ": compensation '" << *halted->compensation_tool
                << "' failed: " << halted->error.value_or("");
        }
        out << "\n";
        out << "Remaining completed actions were not compensated and require manual "
               "attention.";
    } else if (report.entries.empty()) {
        out << "No completed actions required compensation.";
    } else {
        out << "All recorded side effects have been compensated.";
    }
    return out.str();
}

}  // namespace

std::string format_context_message(const FailureContext& ctx, const RollbackReport& report) {
    std::ostringstream out;
    out << "Tool '" << ctx.tool_name << "' failed: " << ctx.error_message << "\n";
    out << "Recovery attempted: " << plural(ctx.attempts_made - 1, "retry", "retries") << ", "
        << plural(static_cast<int>(ctx.alternatives_tried.size()), "alternative",
                  "alternatives");
    if (!ctx.alternatives_tried.empty()) {
        out << " (";
        for (std::size_t i = 0; i < ctx.alternatives_tried.size(); ++i) {
            if (i > 0) out << ", ";
            out << ctx.alternatives_tried[i];
        }
        out << ")";
    }
    out << "; classification: " << to_string(ctx.classification) << ".\n";
    out << render_rollback_body(report);
    return out.str();
}

RecoveryManager::RecoveryManager(TransactionLog& log, ToolHost& host,
                                 const ToolRegistry& registry,
                                 const CompensationResolver& resolver, Advisor& advisor,
                                 Clock& clock, RecoveryConfig config, std::uint64_t seed)
    : log_(log),
      host_(host),
      registry_(registry),
      resolver_(resolver),
      advisor_(advisor),
      clock_(clock),
      config_(std::move(config)),
      rng_(seed) {}

void RecoveryManager::record_event(std::string kind, Value data) {
    trace_.push_back({std::move(kind), std::move(data), clock_.now_ms()});
}

std::int64_t RecoveryManager::jittered(std::int64_t delay_ms) {
    const double jf = config_.retry.jitter_fraction;
    if (jf <= 0.0) return delay_ms;
    // Uniform in [1-jf, 1+jf) from raw generator bits; keeps delays
    // identical across standard libraries for a fixed seed.
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    const double scaled = static_cast<double>(delay_ms) * (1.0 - jf + 2.0 * jf * u);
    return std::max<std::int64_t>(0, static_cast<std::int64_t>(std::llround(scaled)));
}

ErrorClass RecoveryManager::classify_error(const std::string& error) {
    const std::string code = error_code_of(error);
    if (contains(config_.transient_codes, code)) return ErrorClass::Transient;
    if (contains(config_.permanent_codes, code)) return ErrorClass::Permanent;

    const AdvisorAnswer answer = advisor_.consult(
        {QueryKind::ClassifyError, {{"code", code}, {"error", error}}});
    if (const auto* cls = std::get_if<ErrorClass>(&answer.value)) {
        if (*cls != ErrorClass::Unknown) return *cls;
    }
    // Abstention: retrying is bounded and harmless, misclassifying as
    // permanent forfeits recoverable runs.
    return ErrorClass::Transient;
}

std::optional<LoggedCall> RecoveryManager::retry_with_backoff(const ToolCallRecord& failed_record,
                                                              FailureContext& ctx) {
    for (int k = 1; k <= config_.retry.max_retries; ++k) {
        const std::int64_t wait = jittered(config_.retry.delay_before_retry_ms(k));
        record_event("retry_wait", {{"record_id", failed_record.record_id}, {"delay_ms", wait}});
        clock_.sleep_ms(wait);

        const int attempt = failed_record.attempt + k;
        record_event("retry_attempt",
                     {{"tool", failed_record.tool_name}, {"attempt", attempt}});
        ++stats_.retries;
        ++ctx.attempts_made;
        LoggedCall call =
            execute_logged(log_, host_, failed_record.tool_name, failed_record.params, attempt);
        if (call.ok) return call;
    }
    return std::nullopt;
}

std::optional<LoggedCall> RecoveryManager::try_alternatives(FailureContext& ctx,
                                                            const ToolCallRecord& failed_record) {
    const AdvisorAnswer answer =
        advisor_.consult({QueryKind::SuggestAlternative,
                          {{"failed_tool", failed_record.tool_name},
                           {"params", failed_record.params},
                           {"error", ctx.error_message},
                           {"available_tools", registry_.names()}}});
    const auto* suggestions = std::get_if<std::vector<AlternativeSuggestion>>(&answer.value);
    if (suggestions == nullptr) return std::nullopt;

    for (const auto& suggestion : *suggestions) {
        if (static_cast<int>(ctx.alternatives_tried.size()) >= config_.max_alternatives) break;
        ctx.alternatives_tried.push_back(suggestion.tool);
        ++stats_.alternatives_tried;
        if (suggestion.tool == failed_record.tool_name) {
            record_event("alternative_discarded",
                         {{"tool", suggestion.tool}, {"reason", "self-suggestion"}});
            continue;
        }
        if (!registry_.has(suggestion.tool)) {
            record_event("alternative_discarded",
                         {{"tool", suggestion.tool}, {"reason", "unregistered"}});
            continue;
        }
        const Value params =
            suggestion.params.is_null() ? failed_record.params : suggestion.params;
        record_event("alternative_invoked", {{"tool", suggestion.tool}});
        LoggedCall call = execute_logged(log_, host_, suggestion.tool, params, 1);
        if (call.ok) return call;
    }
    return std::nullopt;
}

RollbackReport RecoveryManager::rollback() {
    record_event("rollback_started", Value::object());
    ++stats_.rollbacks;

    const ExecutionGraph graph = build_graph(log_.get_all());
    const std::vector<std::int64_t> plan = rollback_order(graph);

    RollbackReport report;
    for (const auto record_id : plan) {
        const ToolCallRecord& record = log_.at(record_id);
        const CompensationBinding& binding = resolver_.binding_for(record.tool_name);

        if (!binding.compensation_tool.has_value()) {
            report.entries.push_back({record_id, record.tool_name, std::nullopt,
                                      Value::object(),
                                      CompensationOutcome::SkippedNoSideEffects, std::nullopt});
            record_event("compensation_skipped",
                         {{"record_id", record_id}, {"tool", record.tool_name}});
            continue;
        }

        ExtractedParams extracted;
        try {
            extracted = extract_params(binding, record, registry_, advisor_);
        } catch (const ExtractionError& e) {
            log_.transition(record_id, RecordStatus::CompensationFailed, std::nullopt,
                            std::string(e.what()));
            report.entries.push_back({record_id, record.tool_name, binding.compensation_tool,
                                      Value::object(), CompensationOutcome::CompensationFailed,
                                      std::string(e.what())});
            report.halted_at = record_id;
            record_event("compensation_failed",
                         {{"record_id", record_id}, {"error", std::string(e.what())}});
            break;
        }

        record_event("compensation_invoked", {{"record_id", record_id},
                                              {"tool", *binding.compensation_tool},
                                              {"params", extracted.params}});
        const LoggedCall call =
            execute_logged(log_, host_, *binding.compensation_tool, extracted.params, 1);
        if (call.ok) {
            log_.transition(record_id, RecordStatus::Compensated);
            report.entries.push_back({record_id, record.tool_name, binding.compensation_tool,
                                      extracted.params, CompensationOutcome::Compensated,
                                      std::nullopt});
            ++stats_.compensations;
        } else {
            log_.transition(record_id, RecordStatus::CompensationFailed, std::nullopt,
                            call.error);
            report.entries.push_back({record_id, record.tool_name, binding.compensation_tool,
                                      extracted.params, CompensationOutcome::CompensationFailed,
                                      call.error});
            report.halted_at = record_id;
            record_event("compensation_failed",
                         {{"record_id", record_id}, {"error", call.error}});
            break;
        }
    }
    report.summary_text = render_rollback_body(report);
    record_event("rollback_finished", {{"compensations", report.compensated_count()},
                                       {"halted", report.halted_at.has_value()}});
    return report;
}

RecoveryOutcome RecoveryManager::handle_failure(const ToolCallRecord& failed_record,
                                                const std::string& error) {
    if (failed_record.status != RecordStatus::Failed) {
        throw SagaError("handle_failure requires a FAILED record");
    }
    record_event("recovery_started",
                 {{"record_id", failed_record.record_id}, {"tool", failed_record.tool_name}});

    FailureContext ctx;
    ctx.record_id = failed_record.record_id;
    ctx.tool_name = failed_record.tool_name;
    ctx.error_message = error;
    ctx.attempts_made = failed_record.attempt;
    ctx.classification = classify_error(error);
    record_event("classified", {{"record_id", failed_record.record_id},
                                {"class", std::string(to_string(ctx.classification))}});

    if (ctx.classification != ErrorClass::Permanent) {
        if (auto call = retry_with_backoff(failed_record, ctx)) {
            record_event("recovered", {{"via", "retry"}, {"record_id", call->record_id}});
            return Recovered{call->result, call->record_id};
        }
    }

    if (auto call = try_alternatives(ctx, failed_record)) {
        record_event("recovered",
                     {{"via", "alternative"}, {"tool", ctx.alternatives_tried.back()}});
        return RecoveredViaAlternative{call->result, ctx.alternatives_tried.back(),
                                       call->record_id};
    }

    RollbackReport report = rollback();
    report.summary_text = format_context_message(ctx, report);
    record_event("recovery_finished", {{"outcome", "rolled_back"}});
    return RolledBack{std::move(report)};
}

std::string RecoveryManager::trace_as_json_lines() const {
    std::ostringstream out;
    for (const auto& event : trace_) {
        Value line = event.data;
        line["kind"] = event.kind;
        line["at_ms"] = event.at_ms;
        out << line.dump() << "\n";
    }
    return out.str();
}

}  // namespace saga
