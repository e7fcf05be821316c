#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace saga {

struct SagaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The transaction log is the source of truth for recovery; if it cannot be
// written the run must abort rather than continue without a safety net.
struct LogStorageError : SagaError {
    using SagaError::SagaError;
};

// A persisted entry could not be reconstructed (torn tails excepted).
struct LogReplayError : SagaError {
    using SagaError::SagaError;
};

// Illegal record status transition.
struct LifecycleError : SagaError {
    using SagaError::SagaError;
};

struct McpParseError : SagaError {
    McpParseError(int entry_index, const std::string& what)
        : SagaError("tool document entry " + std::to_string(entry_index) + ": " + what),
          entry_index(entry_index) {}
    int entry_index;
};

struct MappingParseError : SagaError {
    using SagaError::SagaError;
};

// A compensation binding names a tool that is not registered. Raised
// eagerly when bindings are resolved, never in the middle of a rollback.
struct ResolutionError : SagaError {
    using SagaError::SagaError;
};

// A mapping rule could not produce a value for a compensation parameter.
struct ExtractionError : SagaError {
    ExtractionError(std::string param, std::int64_t record_id, const std::string& what)
        : SagaError("record " + std::to_string(record_id) + ", parameter '" + param +
                    "': " + what),
          param(std::move(param)),
          record_id(record_id) {}
    std::string param;
    std::int64_t record_id;
};

struct UnknownToolError : SagaError {
    using SagaError::SagaError;
};

struct ConfigError : SagaError {
    using SagaError::SagaError;
};

// Internal contract violation: rollback planning saw a cycle. Construction
// only creates edges from earlier to later records, so this is unreachable
// unless the graph was built by hand.
struct CycleError : SagaError {
    using SagaError::SagaError;
};

}  // namespace saga
