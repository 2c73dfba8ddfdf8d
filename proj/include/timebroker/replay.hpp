#pragma once

#include "timebroker/message.hpp"
#include "timebroker/time.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace timebroker {

// A recorded stream to replay. Payload timestamps are strictly increasing
// and may contain gaps; on the wire the messages are produced back to back
// at a fixed `wire_period` regardless, the way historical data is replayed
// into a live broker.
struct ReplaySource {
    std::vector<TimedMessage> messages;
    Duration wire_period{};
};

// Trace CSV: first column `time_us`, remaining columns named with a type
// suffix (`:r` real, `:i` integer, `:b` boolean, `:s` text). One message
// per row, seqno = row index from 0. The loaded wire_period is the
// smallest timestamp delta in the file (the nominal rate; gaps are wider).
ReplaySource load_trace(std::istream& in);
ReplaySource load_trace(const std::filesystem::path& path);

void write_trace(std::ostream& out, const ReplaySource& src);
void write_trace(const std::filesystem::path& path, const ReplaySource& src);

// Rewrites payload timestamps to the exact progression i * period,
// removing all gaps. Values and seqnos are untouched. Idempotent.
ReplaySource clean_gaps(ReplaySource src, Duration period);

// Gap injection for synthetic traces: every `every`-th timestamp delta is
// `gap` instead of the nominal period. every == 0 means no gaps.
struct GapSpec {
    std::size_t every = 0;
    Duration gap{};
};

// Synthetic stream shaped like the UR robot data: n_real real signals (the
// first carrying the timestamp in seconds) plus n_int integer signals,
// pseudo-random from a fixed seed, so two calls with the same arguments
// yield identical traces.
ReplaySource synth_ur(std::size_t n, std::size_t n_real, std::size_t n_int, Duration period,
                      GapSpec gaps = {}, std::uint64_t seed = 1);

// Straight-line approach toward a fixed obstacle at the origin: signals
// robot_x, robot_y, obstacle_x, obstacle_y. Used by the monitor wiring.
ReplaySource synth_approach(std::size_t n, Duration period, double start_distance_m,
                            double speed_m_per_s);

} // namespace timebroker
