// Command-line runner for simulated recovery scenarios.
//
//   saga run <scenario.json>      execute one scenario and print its report
//   saga batch <directory>        execute every *.json scenario in a directory
//   saga resume <scenario.json>   reopen a crashed run's log and roll it back

#include <algorithm>
#include <future>
#include <iostream>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "saga/sim/scenario.hpp"

namespace {

using saga::sim::RunnerOptions;
using saga::sim::RunOutcome;
using saga::sim::RunResult;
using saga::sim::ScenarioSpec;

struct CommonFlags {
    std::string log_dir = "logs";
    std::string report_format = "text";
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool real_time = false;
    std::size_t max_steps = 100;
    std::string env_ledger;
    std::string export_graph;
    std::string export_trace;
    int crash_after_appends = 0;
};

void add_common_flags(CLI::App& cmd, CommonFlags& flags) {
    cmd.add_option("--log-dir", flags.log_dir, "Directory for transaction logs");
    cmd.add_option("--report-format", flags.report_format, "Report format")
        ->check(CLI::IsMember({"text", "json-lines"}));
    cmd.add_option("--seed", flags.seed, "Override the scenario seed")
        ->each([&flags](const std::string&) { flags.seed_set = true; });
    cmd.add_flag("--real-time", flags.real_time,
                 "Use the system clock instead of the virtual clock");
    cmd.add_option("--max-steps", flags.max_steps, "Upper bound on script steps");
    cmd.add_option("--env-ledger", flags.env_ledger,
                   "Persist the simulated environment's effects to this file");
    cmd.add_option("--export-graph", flags.export_graph,
                   "Write the final execution graph as Graphviz dot");
    cmd.add_option("--export-trace", flags.export_trace,
                   "Write the recovery event trace as JSON lines");
    cmd.add_option("--crash-after-appends", flags.crash_after_appends,
                   "Testing aid: kill the process after the Nth log append")
        ->group("");  // hidden from --help
}

RunnerOptions to_options(const CommonFlags& flags) {
    RunnerOptions options;
    options.log_dir = flags.log_dir;
    if (flags.seed_set) options.seed_override = flags.seed;
    options.real_time = flags.real_time;
    options.max_steps = flags.max_steps;
    if (!flags.env_ledger.empty()) options.env_ledger = flags.env_ledger;
    if (!flags.export_graph.empty()) options.export_graph = flags.export_graph;
    if (!flags.export_trace.empty()) options.export_trace = flags.export_trace;
    options.crash_after_appends = flags.crash_after_appends;
    return options;
}

void print_report(const RunResult& result, const std::string& format) {
    if (format == "json-lines") {
        std::cout << result.report.to_json_lines(result.rollback);
    } else {
        std::cout << result.report.to_text();
    }
}

int run_command(const std::string& scenario_path, const CommonFlags& flags) {
    const ScenarioSpec spec = ScenarioSpec::load(scenario_path);
    const RunResult result = saga::sim::run_scenario(spec, to_options(flags));
    print_report(result, flags.report_format);
    return saga::sim::exit_code_for(result.report.outcome);
}

int resume_command(const std::string& scenario_path, const CommonFlags& flags) {
    const ScenarioSpec spec = ScenarioSpec::load(scenario_path);
    const RunResult result = saga::sim::resume_rollback(spec, to_options(flags));
    print_report(result, flags.report_format);
    return saga::sim::exit_code_for(result.report.outcome);
}

int batch_command(const std::string& directory, const CommonFlags& flags, unsigned jobs) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(directory)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::cerr << "no *.json scenarios in " << directory << "\n";
        return 1;
    }

    struct BatchRow {
        std::string name;
        std::string outcome;
        RunResult result;
        std::string error;
    };
    std::vector<BatchRow> rows(files.size());

    // One run per worker; each run is internally sequential and fully
    // independent (own log, environment and clock).
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next.fetch_add(1); i < files.size(); i = next.fetch_add(1)) {
            BatchRow& row = rows[i];
            row.name = files[i].stem().string();
            try {
                const ScenarioSpec spec = ScenarioSpec::load(files[i]);
                row.result = saga::sim::run_scenario(spec, to_options(flags));
                row.outcome = std::string(to_string(row.result.report.outcome));
            } catch (const std::exception& e) {
                row.outcome = "ERROR";
                row.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned n = std::max(1u, jobs);
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    int exit_code = 0;
    if (flags.report_format == "json-lines") {
        for (const auto& row : rows) {
            if (row.outcome == "ERROR") {
                std::cout << saga::Value{{"event", "scenario_error"},
                                         {"scenario", row.name},
                                         {"error", row.error}}
                                 .dump()
                          << "\n";
            } else {
                saga::Value line = row.result.report.to_json();
                line["event"] = "run_report";
                std::cout << line.dump() << "\n";
            }
        }
    } else {
        std::printf("%-28s %-18s %8s %6s %6s %8s %10s\n", "scenario", "outcome", "retries",
                    "alts", "comps", "advisor", "time_ms");
        for (const auto& row : rows) {
            if (row.outcome == "ERROR") {
                std::printf("%-28s %-18s %s\n", row.name.c_str(), "ERROR", row.error.c_str());
            } else {
                const auto& r = row.result.report;
                std::printf("%-28s %-18s %8d %6d %6d %8d %10lld\n", row.name.c_str(),
                            row.outcome.c_str(), r.retries, r.alternatives, r.compensations,
                            r.advisor_calls, static_cast<long long>(r.wall_time_ms));
            }
        }
    }
    for (const auto& row : rows) {
        if (row.outcome == "ERROR") {
            exit_code = std::max(exit_code, 1);
        } else {
            exit_code = std::max(exit_code,
                                 saga::sim::exit_code_for(row.result.report.outcome));
        }
    }
    return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compensation-based recovery engine, simulated scenario runner"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    std::string run_scenario_path;
    CLI::App* run = app.add_subcommand("run", "Execute one scenario");
    run->add_option("scenario", run_scenario_path, "Scenario JSON file")->required();
    add_common_flags(*run, run_flags);

    CommonFlags batch_flags;
    std::string batch_dir;
    unsigned batch_jobs = 1;
    CLI::App* batch = app.add_subcommand("batch", "Execute every scenario in a directory");
    batch->add_option("directory", batch_dir, "Directory of scenario JSON files")->required();
    batch->add_option("--jobs", batch_jobs, "Parallel workers");
    add_common_flags(*batch, batch_flags);

    CommonFlags resume_flags;
    std::string resume_scenario_path;
    CLI::App* resume = app.add_subcommand(
        "resume", "Reopen a previous run's log and roll back whatever is still standing");
    resume->add_option("scenario", resume_scenario_path, "Scenario JSON file")->required();
    add_common_flags(*resume, resume_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_command(run_scenario_path, run_flags);
        if (batch->parsed()) return batch_command(batch_dir, batch_flags, batch_jobs);
        if (resume->parsed()) return resume_command(resume_scenario_path, resume_flags);
    } catch (const saga::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
