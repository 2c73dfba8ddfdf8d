#pragma once

#include "timebroker/experiment.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace timebroker {

// Exit codes shared by the run and compare commands:
//   0 success, 2 spec/input error, 3 runtime abort.
inline constexpr int kExitOk = 0;
inline constexpr int kExitSpecError = 2;
inline constexpr int kExitRuntimeAbort = 3;

struct RunOptions {
    std::filesystem::path spec_path;
    std::optional<std::filesystem::path> trace_path;
    std::filesystem::path out_dir = ".";
    std::uint64_t seed = 1;
    std::optional<ClockMode> clock_override;
};

// Runs the experiment and writes profile_rep<k>.csv per repetition plus
// aggregate.csv into out_dir.
int cli_run(const RunOptions& opts, std::ostream& diag);

struct CompareOptions {
    std::filesystem::path spec_a_path;
    std::filesystem::path spec_b_path;
    std::optional<std::filesystem::path> trace_path;
    std::filesystem::path out_dir = ".";
    std::uint64_t seed = 1;
};

// Runs both specs and writes compare.csv into out_dir.
int cli_compare(const CompareOptions& opts, std::ostream& diag);

} // namespace timebroker
