#include "timebroker/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv)
{
    CLI::App app{"timebroker experiment runner"};
    app.require_subcommand(1);

    timebroker::RunOptions run_opts;
    std::string run_clock;
    auto* run = app.add_subcommand("run", "run one experiment spec and emit CSV profiles");
    run->add_option("--spec", run_opts.spec_path, "experiment spec file")->required();
    std::string run_trace;
    run->add_option("--trace", run_trace, "trace CSV to replay");
    run->add_option("--out", run_opts.out_dir, "output directory");
    run->add_option("--seed", run_opts.seed, "seed for synthetic data and jitter");
    run->add_option("--clock", run_clock, "override the spec clock: virtual|wall")
        ->check(CLI::IsMember({"virtual", "wall"}));

    timebroker::CompareOptions cmp_opts;
    std::string cmp_trace;
    auto* cmp = app.add_subcommand("compare", "run two specs differing in semantics");
    cmp->add_option("--spec-a", cmp_opts.spec_a_path, "first spec file")->required();
    cmp->add_option("--spec-b", cmp_opts.spec_b_path, "second spec file")->required();
    cmp->add_option("--trace", cmp_trace, "trace CSV to replay");
    cmp->add_option("--out", cmp_opts.out_dir, "output directory");
    cmp->add_option("--seed", cmp_opts.seed, "seed for synthetic data and jitter");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        if (!run_trace.empty()) {
            run_opts.trace_path = run_trace;
        }
        if (run_clock == "virtual") {
            run_opts.clock_override = timebroker::ClockMode::Virtual;
        } else if (run_clock == "wall") {
            run_opts.clock_override = timebroker::ClockMode::Wall;
        }
        return timebroker::cli_run(run_opts, std::cerr);
    }

    if (!cmp_trace.empty()) {
        cmp_opts.trace_path = cmp_trace;
    }
    return timebroker::cli_compare(cmp_opts, std::cerr);
}
