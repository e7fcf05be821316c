#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "saga/txlog.hpp"

using namespace saga;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() /
                 ("saga_txlog_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

fs::path fresh_path(const std::string& name) {
    const fs::path p = temp_dir() / name;
    fs::remove(p);
    return p;
}

bool records_equal(const ToolCallRecord& a, const ToolCallRecord& b) {
    return a.record_id == b.record_id && a.run_id == b.run_id && a.tool_name == b.tool_name &&
           a.params == b.params && a.result == b.result && a.status == b.status &&
           a.error == b.error && a.started_at_ms == b.started_at_ms &&
           a.finished_at_ms == b.finished_at_ms && a.attempt == b.attempt;
}

}  // namespace

TEST_CASE("first append creates record 1 in status PENDING") {
    VirtualClock clock;
    TransactionLog log("r1", fresh_path("first_append.jsonl"), clock);
    const auto& rec = log.append("book_flight", {{"flight_id", "F100"}});
    CHECK(rec.record_id == 1);
    CHECK(rec.status == RecordStatus::Pending);
    CHECK(rec.run_id == "r1");
    CHECK(rec.attempt == 1);
    CHECK_FALSE(rec.result.has_value());
}

TEST_CASE("record ids increase monotonically and entries hit the file") {
    VirtualClock clock;
    const auto path = fresh_path("monotone.jsonl");
    TransactionLog log("r1", path, clock);
    CHECK(log.append("a", Value::object()).record_id == 1);
    CHECK(log.append("b", Value::object()).record_id == 2);

    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 2);
}

TEST_CASE("legal and illegal transitions") {
    VirtualClock clock;
    TransactionLog log("r1", fresh_path("transitions.jsonl"), clock);
    log.append("book_flight", {{"flight_id", "F100"}});

    SUBCASE("pending to completed attaches the result") {
        const auto& rec =
            log.transition(1, RecordStatus::Completed, Value{{"confirmation_ref", "C9"}});
        CHECK(rec.status == RecordStatus::Completed);
        CHECK(rec.result.has_value());
        CHECK((*rec.result)["confirmation_ref"] == "C9");
        CHECK(rec.finished_at_ms == clock.now_ms());
    }
    SUBCASE("completed cannot regress to pending") {
        log.transition(1, RecordStatus::Completed, Value::object());
        CHECK_THROWS_AS(log.transition(1, RecordStatus::Pending), LifecycleError);
    }
    SUBCASE("failed records cannot be compensated") {
        log.transition(1, RecordStatus::Failed, std::nullopt, "BOOM: nope");
        CHECK_THROWS_AS(log.transition(1, RecordStatus::Compensated), LifecycleError);
    }
    SUBCASE("completed requires a result, failed requires an error") {
        CHECK_THROWS_AS(log.transition(1, RecordStatus::Completed), LifecycleError);
        CHECK_THROWS_AS(log.transition(1, RecordStatus::Failed), LifecycleError);
    }
    SUBCASE("pending cannot jump straight to compensated") {
        CHECK_THROWS_AS(log.transition(1, RecordStatus::Compensated), LifecycleError);
    }
    SUBCASE("unknown record id") {
        CHECK_THROWS_AS(log.transition(42, RecordStatus::Completed, Value::object()),
                        LifecycleError);
    }
}

TEST_CASE("get_all returns append order; empty log is a valid run") {
    VirtualClock clock;
    TransactionLog log("r1", fresh_path("get_all.jsonl"), clock);
    CHECK(log.get_all().empty());

    log.append("a", Value::object());
    log.append("b", Value::object());
    log.append("c", Value::object());
    const auto& records = log.get_all();
    REQUIRE(records.size() == 3);
    CHECK(records[0].tool_name == "a");
    CHECK(records[1].tool_name == "b");
    CHECK(records[2].tool_name == "c");
}

TEST_CASE("reopening a log reconstructs the exact record sequence") {
    const auto path = fresh_path("roundtrip.jsonl");
    VirtualClock clock(1000);
    std::deque<ToolCallRecord> before;
    {
        TransactionLog log("r1", path, clock);
        log.append("book_flight", {{"flight_id", "F100"}, {"seats", 2}});
        clock.advance_ms(5);
        log.transition(1, RecordStatus::Completed, Value{{"confirmation_ref", "C9"}});
        log.append("book_hotel", {{"hotel_id", "H1"}});
        clock.advance_ms(3);
        log.transition(2, RecordStatus::Failed, std::nullopt, "RATE_LIMITED: busy");
        log.append("book_hotel", {{"hotel_id", "H1"}}, 2);
        log.transition(3, RecordStatus::Completed, Value{{"reservation_id", "R1"}});
        log.transition(1, RecordStatus::Compensated);
        before = log.get_all();
    }
    TransactionLog reopened("r1", path, clock);
    const auto& after = reopened.get_all();
    REQUIRE(after.size() == before.size());
    for (std::size_t i = 0; i < after.size(); ++i) {
        CAPTURE(i);
        CHECK(records_equal(before[i], after[i]));
    }
    CHECK_FALSE(reopened.recovered_torn_tail());
}

TEST_CASE("replay property: random logs survive reopen field-for-field") {
    std::mt19937 rng(20240811);
    for (int round = 0; round < 30; ++round) {
        const auto path = fresh_path("replay_prop.jsonl");
        VirtualClock clock(rng() % 100000);
        std::deque<ToolCallRecord> before;
        {
            TransactionLog log("prop", path, clock);
            const int n = 1 + static_cast<int>(rng() % 10);
            for (int i = 0; i < n; ++i) {
                log.append("tool_" + std::to_string(rng() % 5),
                           {{"x", static_cast<int>(rng() % 1000)},
                            {"tag", std::string(3 + rng() % 4, 'a' + rng() % 26)}},
                           1 + static_cast<int>(rng() % 3));
                clock.advance_ms(rng() % 50);
                const auto id = static_cast<std::int64_t>(i + 1);
                switch (rng() % 4) {
                    case 0:
                        break;  // stays pending
                    case 1:
                        log.transition(id, RecordStatus::Failed, std::nullopt, "CODE: boom");
                        break;
                    case 2:
                        log.transition(id, RecordStatus::Completed, Value{{"out", i}});
                        break;
                    case 3:
                        log.transition(id, RecordStatus::Completed, Value{{"out", i}});
                        if (rng() % 2 == 0) {
                            log.transition(id, RecordStatus::Compensated);
                        } else {
                            log.transition(id, RecordStatus::CompensationFailed, std::nullopt,
                                           "CANCEL_FAILED: no");
                        }
                        break;
                }
            }
            before = log.get_all();
        }
        TransactionLog reopened("prop", path, clock);
        const auto& after = reopened.get_all();
        REQUIRE(after.size() == before.size());
        for (std::size_t i = 0; i < after.size(); ++i) {
            CHECK(records_equal(before[i], after[i]));
        }
    }
}

TEST_CASE("append survives a real process kill") {
    const auto path = fresh_path("fork_crash.jsonl");
    const pid_t child = fork();
    REQUIRE(child >= 0);
    if (child == 0) {
        // Child: write one record, then die without any cleanup.
        VirtualClock clock(77);
        TransactionLog log("crash_run", path, clock);
        log.append("book_flight", {{"flight_id", "F100"}});
        std::_Exit(70);
    }
    int status = 0;
    REQUIRE(waitpid(child, &status, 0) == child);
    REQUIRE(WIFEXITED(status));
    REQUIRE(WEXITSTATUS(status) == 70);

    VirtualClock clock;
    TransactionLog log("crash_run", path, clock);
    REQUIRE(log.size() == 1);
    const auto& rec = log.get_all().front();
    CHECK(rec.record_id == 1);
    CHECK(rec.tool_name == "book_flight");
    CHECK(rec.params == Value{{"flight_id", "F100"}});
    CHECK(rec.status == RecordStatus::Pending);
    CHECK(rec.started_at_ms == 77);
}

TEST_CASE("a torn final line is discarded, torn middle lines are fatal") {
    const auto path = fresh_path("torn.jsonl");
    VirtualClock clock;
    {
        TransactionLog log("r1", path, clock);
        log.append("a", Value::object());
        log.append("b", Value::object());
    }
    SUBCASE("torn tail") {
        {
            std::ofstream out(path, std::ios::app);
            out << R"({"kind":"append","record_id":3,"run_id":"r1","tool_na)";
        }
        TransactionLog log("r1", path, clock);
        CHECK(log.size() == 2);
        CHECK(log.recovered_torn_tail());
    }
    SUBCASE("corruption before the end") {
        {
            std::ofstream out(path, std::ios::app);
            out << "{garbage\n";
            out << R"({"kind":"transition","record_id":1,"status":"COMPLETED","result":{},"at_ms":4})"
                << "\n";
        }
        CHECK_THROWS_AS(TransactionLog("r1", path, clock), LogReplayError);
    }
}

TEST_CASE("replay rejects a log belonging to a different run") {
    const auto path = fresh_path("wrong_run.jsonl");
    VirtualClock clock;
    {
        TransactionLog log("r1", path, clock);
        log.append("a", Value::object());
    }
    CHECK_THROWS_AS(TransactionLog("other_run", path, clock), LogReplayError);
}

TEST_CASE("a log directory that cannot be created is a storage error") {
    VirtualClock clock;
    CHECK_THROWS_AS(TransactionLog("r1", "/nonexistent_dir_zz/x.jsonl", clock),
                    LogStorageError);
}

TEST_CASE("batched flushing still lands everything by destruction") {
    const auto path = fresh_path("batched.jsonl");
    VirtualClock clock;
    {
        TransactionLog::Options options;
        options.flush_each_entry = false;
        TransactionLog log("r1", path, clock, options);
        log.append("a", Value::object());
        log.append("b", Value::object());
        log.flush();
        log.append("c", Value::object());
    }
    TransactionLog reopened("r1", path, clock);
    CHECK(reopened.size() == 3);
}
