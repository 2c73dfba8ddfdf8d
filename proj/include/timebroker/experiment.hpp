#pragma once

#include "timebroker/config.hpp"
#include "timebroker/fmu.hpp"
#include "timebroker/replay.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace timebroker {

enum class GapPattern { None, FromTrace, Fixed };
enum class ClockMode { Virtual, Wall };
enum class Wiring { Passthrough, Monitor };

// One experiment row: step size, artificial per-step delay standing in for
// the rest of the co-simulation, the data rate on the wire, and the broker
// configuration under test.
struct ExperimentSpec {
    Duration step{};
    Duration sim_delay{};
    Duration data_period{};
    GapPattern gap_pattern = GapPattern::None;
    Duration gap{};             // Fixed gap width
    std::size_t gap_every = 5;  // a Fixed gap replaces every n-th delta
    Duration total_sim_time{};
    BrokerConfig cfg;
    std::uint32_t repetitions = 1;
    ClockMode clock = ClockMode::Virtual;

    // shape of synthesized data when no trace is given
    std::size_t n_real = 107;
    std::size_t n_int = 10;

    // transport injection
    Duration latency{};
    Duration jitter{};

    // co-simulation wiring: plain replay (cs1) or monitored approach (cs2)
    Wiring wiring = Wiring::Passthrough;
    double safety_threshold_m = 1.0;

    void validate() const;
};

// Spec files are flat key/value text, one `key value` (or `key = value`)
// pair per line, `#` comments. Keys match the field names above; nested
// broker fields are spelled cfg.maxage, cfg.lookahead, cfg.semantics,
// cfg.threading, cfg.queue_capacity, cfg.init_timeout. Durations take a
// unit suffix: 100ms, 2s, 250us.
ExperimentSpec parse_spec_text(const std::string& text);
ExperimentSpec parse_spec_file(const std::filesystem::path& path);

// Non-fatal configuration review: flags parameter combinations known to
// behave poorly (step size not aligned with the data period, maxage too
// small to bridge even the nominal spacing, lookahead far below the
// per-step message budget, gaps wider than maxage). Empty means no
// remarks.
std::vector<std::string> configuration_advice(const ExperimentSpec& spec);

// The stream an experiment replays: the given trace (FromTrace), the trace
// cleaned to the nominal period (None), or synthesized data (no trace /
// Fixed gaps).
ReplaySource materialize_source(const ExperimentSpec& spec,
                                const std::optional<ReplaySource>& trace, std::uint64_t seed);

struct RepetitionResult {
    std::vector<ProfileRecord> profile;
    // Everything the FMU forwarded on the command key during the run; the
    // message timestamp is the end time of the step that published it.
    std::vector<TimedMessage> commands;
    bool aborted = false; // initialization timed out
};

// Jacobi master loop over the broker FMU (and the monitor, when wired):
// per step, read outputs, feed the monitor, set inputs, step the FMU, then
// idle for sim_delay. The producer replays `src` at its wire period on a
// separate thread (wall clock) or interleaved on the injected schedule
// (virtual clock).
std::vector<RepetitionResult> run_experiment(const ExperimentSpec& spec,
                                             const ReplaySource& src, std::uint64_t seed = 1);

} // namespace timebroker
