#pragma once

#include <chrono>
#include <cstdint>
#include <thread>

namespace saga {

// All delays and timestamps go through this interface so tests and the
// simulator can run on virtual time. Retry backoff against a real clock
// would make the property suites minutes long.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_ms() = 0;
    virtual void sleep_ms(std::int64_t ms) = 0;
};

class SystemClock final : public Clock {
public:
    std::int64_t now_ms() override {
        using namespace std::chrono;
        return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
    }
    void sleep_ms(std::int64_t ms) override {
        std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }
};

// Deterministic clock starting at a fixed epoch; sleeping advances it.
class VirtualClock final : public Clock {
public:
    explicit VirtualClock(std::int64_t start_ms = 0) : now_(start_ms) {}
    std::int64_t now_ms() override { return now_; }
    void sleep_ms(std::int64_t ms) override { now_ += ms; }
    void advance_ms(std::int64_t ms) { now_ += ms; }

private:
    std::int64_t now_;
};

}  // namespace saga
