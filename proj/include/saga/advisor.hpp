#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "saga/value.hpp"

namespace saga {

enum class ErrorClass { Transient, Permanent, Unknown };

std::string_view to_string(ErrorClass c);
ErrorClass error_class_from_string(std::string_view s);

enum class QueryKind {
    ClassifyError,
    SuggestAlternative,
    DiscoverCompensation,
    InferInputMapping,
};

// A single consultation. The payload carries only data already present in
// the log or the registry; the advisor never sees fabricated context.
struct AdvisorQuery {
    QueryKind kind;
    Value payload;
};

struct AlternativeSuggestion {
    std::string tool;
    // Explicit parameters for the substitute call; null means "reuse the
    // failed call's parameters".
    Value params = Value();
};

struct DiscoveredCompensation {
    std::string compensation_tool;
    std::optional<std::string> input_mapping;  // mapping expression, if known
};

// Where an inferred compensation input comes from: a key of the forward
// call's params or a path into its result.
struct InferredMapping {
    enum class Source { Params, Result };
    Source source;
    std::string path;
};

// Answer kinds line up with query kinds; abstention is first-class and
// covers every don't-know case.
struct AdvisorAnswer {
    std::variant<std::monostate, ErrorClass, std::vector<AlternativeSuggestion>,
                 DiscoveredCompensation, InferredMapping>
        value;

    static AdvisorAnswer abstain() { return {}; }
    bool is_abstain() const { return std::holds_alternative<std::monostate>(value); }
};

// Stand-in for every LLM consultation. Implementations must be
// deterministic functions of the query for the acceptance suite to run
// hermetically; a live adapter is possible but stays out of the tests.
class Advisor {
public:
    virtual ~Advisor() = default;

    AdvisorAnswer consult(const AdvisorQuery& query) {
        ++consult_count_;
        return do_consult(query);
    }

    int consult_count() const { return consult_count_; }

protected:
    virtual AdvisorAnswer do_consult(const AdvisorQuery& query) = 0;

private:
    int consult_count_ = 0;
};

// Deterministic advisor answering from a declarative rule table (loaded
// from scenario config). Input-mapping inference uses a fixed heuristic:
// exact name match against the forward call's result and params, then a
// unique suffix-stem match ("res_id" <-> "reservation_id"), else abstain.
class RuleTableAdvisor final : public Advisor {
public:
    struct RuleTable {
        std::map<std::string, ErrorClass> classifications;  // error code -> class
        std::map<std::string, std::vector<AlternativeSuggestion>> alternatives;
        std::map<std::string, DiscoveredCompensation> compensations;
    };

    RuleTableAdvisor() = default;
    explicit RuleTableAdvisor(RuleTable table) : table_(std::move(table)) {}

    static RuleTable parse_rule_table(const Value& config);

protected:
    AdvisorAnswer do_consult(const AdvisorQuery& query) override;

private:
    RuleTable table_;
};

// Shared by the stub and by compensation extraction tests: the name stem is
// the segment after the last underscore ("res_id" -> "id").
std::string name_stem(const std::string& name);

}  // namespace saga
