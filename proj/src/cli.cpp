#include "timebroker/cli.hpp"

#include "timebroker/errors.hpp"
#include "timebroker/stats.hpp"

#include <fstream>
#include <ostream>

namespace timebroker {

namespace {

std::optional<ReplaySource> load_optional_trace(const std::optional<std::filesystem::path>& p)
{
    if (!p) {
        return std::nullopt;
    }
    return load_trace(*p);
}

void write_file(const std::filesystem::path& path, const auto& writer)
{
    std::ofstream out(path);
    if (!out) {
        throw TraceError("cannot write output file: " + path.string());
    }
    writer(out);
}

} // namespace

int cli_run(const RunOptions& opts, std::ostream& diag)
{
    ExperimentSpec spec;
    std::optional<ReplaySource> trace;
    ReplaySource src;
    try {
        spec = parse_spec_file(opts.spec_path);
        if (opts.clock_override) {
            spec.clock = *opts.clock_override;
        }
        trace = load_optional_trace(opts.trace_path);
        src = materialize_source(spec, trace, opts.seed);
    } catch (const std::exception& e) {
        diag << "spec error: " << e.what() << '\n';
        return kExitSpecError;
    }

    for (const auto& note : configuration_advice(spec)) {
        diag << "note: " << note << '\n';
    }

    try {
        std::filesystem::create_directories(opts.out_dir);
        const auto runs = run_experiment(spec, src, opts.seed);

        std::vector<std::vector<ProfileRecord>> profiles;
        for (std::size_t k = 0; k < runs.size(); ++k) {
            const auto path =
                opts.out_dir / ("profile_rep" + std::to_string(k + 1) + ".csv");
            write_file(path, [&](std::ostream& out) { write_profile_csv(out, runs[k].profile); });
            if (runs[k].aborted) {
                diag << "repetition " << (k + 1) << " aborted: initialization timeout\n";
                return kExitRuntimeAbort;
            }
            profiles.push_back(runs[k].profile);
        }

        const auto rows = aggregate(profiles);
        write_file(opts.out_dir / "aggregate.csv",
                   [&](std::ostream& out) { write_aggregate_csv(out, rows); });
    } catch (const std::exception& e) {
        diag << "run aborted: " << e.what() << '\n';
        return kExitRuntimeAbort;
    }
    return kExitOk;
}

int cli_compare(const CompareOptions& opts, std::ostream& diag)
{
    ExperimentSpec spec_a, spec_b;
    ReplaySource src;
    try {
        spec_a = parse_spec_file(opts.spec_a_path);
        spec_b = parse_spec_file(opts.spec_b_path);
        const auto trace = load_optional_trace(opts.trace_path);
        src = materialize_source(spec_a, trace, opts.seed);
    } catch (const std::exception& e) {
        diag << "spec error: " << e.what() << '\n';
        return kExitSpecError;
    }

    try {
        std::filesystem::create_directories(opts.out_dir);
        const auto rows = compare_semantics(spec_a, spec_b, src, opts.seed);
        write_file(opts.out_dir / "compare.csv",
                   [&](std::ostream& out) { write_compare_csv(out, rows); });
    } catch (const ConfigError& e) {
        diag << "spec error: " << e.what() << '\n';
        return kExitSpecError;
    } catch (const std::exception& e) {
        diag << "compare aborted: " << e.what() << '\n';
        return kExitRuntimeAbort;
    }
    return kExitOk;
}

} // namespace timebroker
