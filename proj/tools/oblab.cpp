// Scenario runner for the obstacle-problem free-boundary laboratory.
//
// Subcommands:
//   solve    — assemble and solve a scenario, dump the solution + hypotheses
//   analyze  — solve plus the scenario's full analysis plan
//   compare  — refinement diff of two run directories (same scenario)
//   report   — human-readable digest of a run directory
//
// Exit codes: 0 ok, 1 solver failure, 2 hypothesis-check failure,
//             3 refinement violation (compare), 64 configuration error.
#include <CLI11.hpp>

#include "oblab/scenario.hpp"

using namespace oblab;

namespace {

int run_cmd(const std::string& config_path, const std::string& out_dir,
            const std::string& solver, bool strict, int threads, bool analyses) {
    Scenario sc;
    try {
        sc = load_scenario(parse_config_file(config_path));
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error (line %d): %s\n", e.line, e.what());
        return 64;
    }
    if (!analyses) sc.plans.clear();
    RunOptions opts;
    opts.solver_override = solver;
    opts.strict = strict;
    opts.threads = threads;
    try {
        const RunResult res = run_scenario(sc, out_dir, opts);
        std::printf("%s\n", res.summary["status"].get<std::string>().c_str());
        if (res.exit_code == 2) {
            for (const auto& n : res.summary["hypotheses"]["notes"])
                std::fprintf(stderr, "hypothesis: %s\n", n.get<std::string>().c_str());
        }
        return res.exit_code;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 64;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"obstacle-problem free-boundary laboratory"};
    app.require_subcommand(1);

    std::string config, out = "out", solver, run_a, run_b, dir;
    bool strict = false;
    int threads = 1;

    auto add_run_flags = [&](CLI::App* cmd) {
        cmd->add_option("--config", config, "scenario config file")->required();
        cmd->add_option("--out", out, "output directory");
        cmd->add_option("--solver", solver, "psor | activeset | both")
            ->check(CLI::IsMember({"psor", "activeset", "both"}));
        cmd->add_flag("--strict", strict, "turn hypothesis warnings into failures");
        cmd->add_option("--threads", threads, "parallel analysis workers")
            ->check(CLI::PositiveNumber);
    };

    CLI::App* solve = app.add_subcommand("solve", "solve the scenario and dump the solution");
    add_run_flags(solve);
    CLI::App* analyze = app.add_subcommand("analyze", "solve plus the full analysis plan");
    add_run_flags(analyze);

    CLI::App* compare = app.add_subcommand("compare", "diff two runs of one scenario");
    compare->add_option("run_a", run_a, "first run directory")->required();
    compare->add_option("run_b", run_b, "second run directory")->required();

    CLI::App* report = app.add_subcommand("report", "summarize a run directory");
    report->add_option("dir", dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed()) return run_cmd(config, out, solver, strict, threads, false);
    if (analyze->parsed()) return run_cmd(config, out, solver, strict, threads, true);
    if (compare->parsed()) {
        try {
            const auto res = compare_runs(load_summary(run_a), load_summary(run_b));
            std::printf("%s", res.report.c_str());
            return res.exit_code;
        } catch (const std::invalid_argument& e) {
            std::fprintf(stderr, "usage error: %s\n", e.what());
            return 64;
        }
    }
    if (report->parsed()) {
        try {
            std::printf("%s", report_run(load_summary(dir)).c_str());
            return 0;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return 64;
        }
    }
    return 0;
}
