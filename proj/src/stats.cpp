#include "timebroker/stats.hpp"

#include "timebroker/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

namespace timebroker {

namespace {

struct MeanStd {
    double mean = 0;
    double std = 0;
};

MeanStd mean_std(std::span<const double> xs)
{
    double sum = 0;
    for (double x : xs) {
        sum += x;
    }
    const double mean = sum / static_cast<double>(xs.size());
    double sq = 0;
    for (double x : xs) {
        sq += (x - mean) * (x - mean);
    }
    return MeanStd{mean, std::sqrt(sq / static_cast<double>(xs.size()))};
}

void write_double(std::ostream& out, double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

} // namespace

std::vector<AggregateRow> aggregate(std::span<const std::vector<ProfileRecord>> runs)
{
    if (runs.empty()) {
        throw TraceError("aggregate needs at least one run");
    }
    const std::size_t steps = runs.front().size();
    for (const auto& run : runs) {
        if (run.size() != steps) {
            throw TraceError("aggregate: runs have different lengths");
        }
    }

    std::vector<AggregateRow> rows;
    rows.reserve(steps);
    std::vector<double> dur(runs.size()), seq(runs.size()), q(runs.size());
    for (std::size_t i = 0; i < steps; ++i) {
        const SimTime t = runs.front()[i].sim_time;
        for (std::size_t r = 0; r < runs.size(); ++r) {
            if (runs[r][i].sim_time != t) {
                throw TraceError("aggregate: runs have different sim_time axes");
            }
            dur[r] = static_cast<double>(runs[r][i].step_duration.micros);
            seq[r] = static_cast<double>(runs[r][i].out_seqno);
            q[r] = static_cast<double>(runs[r][i].queue_size_at_exit);
        }
        const auto d = mean_std(dur);
        const auto s = mean_std(seq);
        const auto que = mean_std(q);
        rows.push_back(AggregateRow{t, d.mean, d.std, s.mean, s.std, que.mean, que.std});
    }
    return rows;
}

void write_profile_csv(std::ostream& out, std::span<const ProfileRecord> profile)
{
    out << "sim_time_us,step_duration_us,out_seqno,queue_size,status\n";
    for (const auto& rec : profile) {
        out << rec.sim_time.micros << ',' << rec.step_duration.micros << ',' << rec.out_seqno
            << ',' << rec.queue_size_at_exit << ',' << to_string(rec.status) << '\n';
    }
}

std::vector<ProfileRecord> read_profile_csv(std::istream& in)
{
    std::vector<ProfileRecord> out;
    std::string line;
    if (!std::getline(in, line)) {
        throw TraceError("profile csv: missing header");
    }
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        ProfileRecord rec;
        char status[32] = {0};
        long long t = 0, d = 0, s = 0;
        unsigned long long q = 0;
        if (std::sscanf(line.c_str(), "%lld,%lld,%lld,%llu,%31s", &t, &d, &s, &q, status)
            != 5) {
            throw TraceError("profile csv: bad row '" + line + "'");
        }
        rec.sim_time = SimTime{t};
        rec.step_duration = Duration{d};
        rec.out_seqno = s;
        rec.queue_size_at_exit = static_cast<std::size_t>(q);
        const std::string st(status);
        if (st == "ok") {
            rec.status = StepStatus::Ok;
        } else if (st == "stale_hold") {
            rec.status = StepStatus::StaleHold;
        } else if (st == "no_valid_data") {
            rec.status = StepStatus::NoValidData;
        } else if (st == "timeout") {
            rec.status = StepStatus::Timeout;
        } else if (st == "overflowed") {
            rec.status = StepStatus::Overflowed;
        } else {
            throw TraceError("profile csv: bad status '" + st + "'");
        }
        out.push_back(rec);
    }
    return out;
}

void write_aggregate_csv(std::ostream& out, std::span<const AggregateRow> rows)
{
    out << "sim_time,dur_mean,dur_std,seq_mean,seq_std,q_mean,q_std\n";
    for (const auto& r : rows) {
        out << r.sim_time.micros << ',';
        write_double(out, r.dur_mean);
        out << ',';
        write_double(out, r.dur_std);
        out << ',';
        write_double(out, r.seq_mean);
        out << ',';
        write_double(out, r.seq_std);
        out << ',';
        write_double(out, r.q_mean);
        out << ',';
        write_double(out, r.q_std);
        out << '\n';
    }
}

std::vector<CompareRow> compare_semantics(const ExperimentSpec& spec_a,
                                          const ExperimentSpec& spec_b,
                                          const ReplaySource& src, std::uint64_t seed)
{
    ExperimentSpec a = spec_a;
    ExperimentSpec b = spec_b;
    if (a.cfg.semantics == b.cfg.semantics) {
        throw ConfigError("compare_semantics: specs must differ in cfg.semantics");
    }
    const ExperimentSpec& v1 = (a.cfg.semantics == Semantics::V1) ? a : b;
    const ExperimentSpec& v2 = (a.cfg.semantics == Semantics::V1) ? b : a;

    // Everything but the semantics must agree.
    ExperimentSpec check = v1;
    check.cfg.semantics = Semantics::V2;
    const auto same = [](const ExperimentSpec& x, const ExperimentSpec& y) {
        return x.step == y.step && x.sim_delay == y.sim_delay && x.data_period == y.data_period
               && x.gap_pattern == y.gap_pattern && x.gap == y.gap
               && x.gap_every == y.gap_every && x.total_sim_time == y.total_sim_time
               && x.repetitions == y.repetitions && x.clock == y.clock && x.n_real == y.n_real
               && x.n_int == y.n_int && x.latency == y.latency && x.jitter == y.jitter
               && x.wiring == y.wiring && x.safety_threshold_m == y.safety_threshold_m
               && x.cfg.maxage == y.cfg.maxage && x.cfg.lookahead == y.cfg.lookahead
               && x.cfg.threading == y.cfg.threading
               && x.cfg.queue_capacity == y.cfg.queue_capacity
               && x.cfg.init_timeout == y.cfg.init_timeout
               && x.cfg.semantics == y.cfg.semantics;
    };
    if (!same(check, v2)) {
        throw ConfigError("compare_semantics: specs differ beyond cfg.semantics");
    }

    const auto runs_v1 = run_experiment(v1, src, seed);
    const auto runs_v2 = run_experiment(v2, src, seed);
    const auto& p1 = runs_v1.front().profile;
    const auto& p2 = runs_v2.front().profile;
    if (p1.size() != p2.size()) {
        throw TraceError("compare_semantics: run lengths differ");
    }

    std::vector<CompareRow> rows;
    rows.reserve(p1.size());
    for (std::size_t i = 0; i < p1.size(); ++i) {
        if (p1[i].sim_time != p2[i].sim_time) {
            throw TraceError("compare_semantics: sim_time axes differ");
        }
        rows.push_back(CompareRow{p1[i].sim_time, p1[i].out_seqno, p2[i].out_seqno,
                                  p2[i].out_seqno - p1[i].out_seqno});
    }
    return rows;
}

void write_compare_csv(std::ostream& out, std::span<const CompareRow> rows)
{
    out << "sim_time,seq_v1,seq_v2,delta\n";
    for (const auto& r : rows) {
        out << r.sim_time.micros << ',' << r.seq_v1 << ',' << r.seq_v2 << ',' << r.delta
            << '\n';
    }
}

} // namespace timebroker
