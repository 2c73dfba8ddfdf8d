#pragma once

#include "timebroker/experiment.hpp"
#include "timebroker/fmu.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace timebroker {

// Per-step sample mean and population standard deviation across
// repetitions. One row per step; all repetitions must share the same
// sim_time axis.
struct AggregateRow {
    SimTime sim_time{};
    double dur_mean = 0, dur_std = 0;
    double seq_mean = 0, seq_std = 0;
    double q_mean = 0, q_std = 0;
};

std::vector<AggregateRow> aggregate(std::span<const std::vector<ProfileRecord>> runs);

// CSV emission. Columns:
//   profile:   sim_time_us,step_duration_us,out_seqno,queue_size,status
//   aggregate: sim_time,dur_mean,dur_std,seq_mean,seq_std,q_mean,q_std
void write_profile_csv(std::ostream& out, std::span<const ProfileRecord> profile);
std::vector<ProfileRecord> read_profile_csv(std::istream& in);
void write_aggregate_csv(std::ostream& out, std::span<const AggregateRow> rows);

// Per-step output comparison of the two semantics on one input stream.
// delta = seq_v2 - seq_v1; an output not yet defined counts as -1.
struct CompareRow {
    SimTime sim_time{};
    std::int64_t seq_v1 = -1;
    std::int64_t seq_v2 = -1;
    std::int64_t delta = 0;
};

// The two specs must be identical except for cfg.semantics (one V1, one
// V2).
std::vector<CompareRow> compare_semantics(const ExperimentSpec& spec_a,
                                          const ExperimentSpec& spec_b,
                                          const ReplaySource& src, std::uint64_t seed = 1);

void write_compare_csv(std::ostream& out, std::span<const CompareRow> rows);

} // namespace timebroker
