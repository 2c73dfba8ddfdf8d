#include "timebroker/experiment.hpp"
#include "timebroker/monitor.hpp"
#include "timebroker/replay.hpp"

#include "timebroker/codec.hpp"
#include "timebroker/inmem_broker.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

using namespace timebroker;

TEST_CASE("load_trace: three rows at 2ms spacing")
{
    std::istringstream in("time_us,pos:r,count:i\n"
                          "0,1.5,10\n"
                          "2000,2.5,11\n"
                          "4000,3.5,12\n");
    const ReplaySource src = load_trace(in);
    REQUIRE(src.messages.size() == 3);
    CHECK(src.messages[0].timestamp.micros == 0);
    CHECK(src.messages[1].timestamp.micros == 2000);
    CHECK(src.messages[2].timestamp.micros == 4000);
    CHECK(src.messages[0].seqno == 0);
    CHECK(src.messages[2].seqno == 2);
    CHECK(src.messages[1].values.at("pos").as_real() == 2.5);
    CHECK(src.messages[1].values.at("count").as_integer() == 11);
    CHECK(src.wire_period == msec(2));
}

TEST_CASE("load_trace preserves payload gaps")
{
    std::ostringstream buf;
    buf << "time_us,x:r\n";
    std::int64_t t = 0;
    for (int i = 0; i < 20; ++i) {
        buf << t << "," << i << ".0\n";
        t += (i == 9) ? 300000 : 2000; // a 300ms gap between rows 10 and 11
    }
    std::istringstream in(buf.str());
    const ReplaySource src = load_trace(in);
    REQUIRE(src.messages.size() == 20);
    CHECK((src.messages[10].timestamp - src.messages[9].timestamp) == msec(300));
    CHECK((src.messages[11].timestamp - src.messages[10].timestamp) == msec(2));
    CHECK(src.wire_period == msec(2)); // nominal rate, not the gap
}

TEST_CASE("load_trace rejects malformed input")
{
    std::istringstream arity("time_us,a:r,b:i\n0,1.0\n");
    CHECK_THROWS_AS(load_trace(arity), TraceError);

    std::istringstream unsorted("time_us,a:r\n1000,1.0\n500,2.0\n");
    CHECK_THROWS_AS(load_trace(unsorted), TraceError);

    std::istringstream bad_header("when,a:r\n0,1.0\n");
    CHECK_THROWS_AS(load_trace(bad_header), TraceError);

    std::istringstream no_suffix("time_us,a\n0,1.0\n");
    CHECK_THROWS_AS(load_trace(no_suffix), TraceError);

    std::istringstream empty("");
    CHECK_THROWS_AS(load_trace(empty), TraceError);
}

TEST_CASE("trace files round-trip through write and load")
{
    const ReplaySource src = synth_ur(50, 5, 3, msec(2), GapSpec{7, msec(40)}, 99);
    std::ostringstream out;
    write_trace(out, src);
    std::istringstream in(out.str());
    const ReplaySource back = load_trace(in);
    REQUIRE(back.messages.size() == src.messages.size());
    for (std::size_t i = 0; i < src.messages.size(); ++i) {
        CHECK(back.messages[i] == src.messages[i]);
    }
}

TEST_CASE("clean_gaps rewrites timestamps to an exact progression")
{
    ReplaySource src = synth_ur(100, 3, 1, msec(2), GapSpec{10, msec(300)}, 1);
    const ReplaySource cleaned = clean_gaps(src, msec(2));
    for (std::size_t i = 0; i < cleaned.messages.size(); ++i) {
        CHECK(cleaned.messages[i].timestamp.micros == static_cast<std::int64_t>(i) * 2000);
        CHECK(cleaned.messages[i].seqno == src.messages[i].seqno);
        CHECK(cleaned.messages[i].values == src.messages[i].values);
    }

    // idempotent
    const ReplaySource again = clean_gaps(cleaned, msec(2));
    for (std::size_t i = 0; i < again.messages.size(); ++i) {
        CHECK(again.messages[i] == cleaned.messages[i]);
    }

    // the delta histogram collapses to a single bin at the period
    std::map<std::int64_t, int> histogram;
    for (std::size_t i = 1; i < cleaned.messages.size(); ++i) {
        ++histogram[(cleaned.messages[i].timestamp - cleaned.messages[i - 1].timestamp).micros];
    }
    REQUIRE(histogram.size() == 1);
    CHECK(histogram.begin()->first == 2000);
}

TEST_CASE("synth_ur produces the robot message shape")
{
    const ReplaySource src = synth_ur(100, 107, 10, msec(2), GapSpec{}, 5);
    REQUIRE(src.messages.size() == 100);
    for (const auto& msg : src.messages) {
        CHECK(msg.values.size() == 117);
    }
    CHECK(src.messages[3].values.at("f000").as_real()
          == doctest::Approx(0.006).epsilon(1e-12));
    CHECK(src.messages[50].timestamp.micros == 50 * 2000);
}

TEST_CASE("synth_ur gap injection yields the repeating delta pattern")
{
    const ReplaySource src = synth_ur(26, 2, 1, msec(2), GapSpec{5, msec(500)}, 5);
    for (std::size_t i = 1; i < src.messages.size(); ++i) {
        const Duration delta = src.messages[i].timestamp - src.messages[i - 1].timestamp;
        if (i % 5 == 0) {
            CHECK(delta == msec(500));
        } else {
            CHECK(delta == msec(2));
        }
    }
}

TEST_CASE("synth_ur is deterministic for a fixed seed")
{
    const ReplaySource a = synth_ur(40, 10, 4, msec(2), GapSpec{6, msec(100)}, 77);
    const ReplaySource b = synth_ur(40, 10, 4, msec(2), GapSpec{6, msec(100)}, 77);
    REQUIRE(a.messages.size() == b.messages.size());
    for (std::size_t i = 0; i < a.messages.size(); ++i) {
        CHECK(encode(a.messages[i]) == encode(b.messages[i])); // byte-level identical
    }
    const ReplaySource c = synth_ur(40, 10, 4, msec(2), GapSpec{6, msec(100)}, 78);
    CHECK(encode(a.messages[1]) != encode(c.messages[1]));
}

TEST_CASE("monitor_step: 3-4-5 triangle")
{
    const auto r = monitor_step(Point2{0, 0}, Point2{3, 4}, 1.0);
    CHECK(r.distance_m == doctest::Approx(5.0).epsilon(1e-15));
    CHECK_FALSE(r.stop);
}

TEST_CASE("monitor_step: violation inside the threshold")
{
    const auto r = monitor_step(Point2{0, 0}, Point2{0.5, 0}, 1.0);
    CHECK(r.stop);
}

TEST_CASE("monitor_step matches std::hypot on random pairs")
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> coord(-1e3, 1e3);
    for (int i = 0; i < 1000; ++i) {
        const Point2 a{coord(rng), coord(rng)};
        const Point2 b{coord(rng), coord(rng)};
        const double expect = std::hypot(a.x - b.x, a.y - b.y);
        const auto r = monitor_step(a, b, 1.0);
        CHECK(r.distance_m == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("monitor rejects non-finite coordinates")
{
    CHECK_THROWS_AS(monitor_step(Point2{std::nan(""), 0}, Point2{0, 0}, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        monitor_step(Point2{0, 0}, Point2{std::numeric_limits<double>::infinity(), 0}, 1.0),
        std::invalid_argument);
}

TEST_CASE("MonitorFmu latches the stop flag")
{
    MonitorFmu mon(1.0);
    CHECK_FALSE(mon.step(Point2{5, 0}, Point2{0, 0}).stop);
    CHECK(mon.step(Point2{0.5, 0}, Point2{0, 0}).stop);
    // back outside the threshold: still stopped
    CHECK(mon.step(Point2{5, 0}, Point2{0, 0}).stop);
    CHECK(mon.stopped());
}

TEST_CASE("experiment spec parsing round-trips the table rows")
{
    const ExperimentSpec spec = parse_spec_text("step 100ms\n"
                                                "sim_delay 100ms\n"
                                                "data_period 2ms\n"
                                                "total_sim_time 20s\n"
                                                "gap_pattern none\n"
                                                "repetitions 5\n"
                                                "clock virtual\n"
                                                "cfg.maxage 300ms\n"
                                                "cfg.lookahead 1\n"
                                                "cfg.semantics v1\n"
                                                "cfg.threading on\n"
                                                "cfg.queue_capacity 10000\n"
                                                "cfg.init_timeout 5s\n");
    CHECK(spec.step == msec(100));
    CHECK(spec.sim_delay == msec(100));
    CHECK(spec.data_period == msec(2));
    CHECK(spec.total_sim_time == sec(20));
    CHECK(spec.repetitions == 5);
    CHECK(spec.cfg.maxage == msec(300));
    CHECK(spec.cfg.semantics == Semantics::V1);
    CHECK(spec.cfg.threading == Threading::On);
}

TEST_CASE("experiment spec parsing accepts '=' and comments, rejects junk")
{
    const ExperimentSpec spec = parse_spec_text("# a comment\n"
                                                "step = 10ms\n"
                                                "data_period = 10ms\n"
                                                "total_sim_time = 1s\n"
                                                "gap_pattern fixed:500ms\n"
                                                "gap_every 5\n");
    CHECK(spec.step == msec(10));
    CHECK(spec.gap_pattern == GapPattern::Fixed);
    CHECK(spec.gap == msec(500));

    CHECK_THROWS_AS(parse_spec_text("step 10ms\nnonsense 4\n"), ConfigError);
    CHECK_THROWS_AS(parse_spec_text("step ten\n"), ConfigError);
    CHECK_THROWS_AS(parse_spec_text("step 10ms\ndata_period 2ms\ncfg.lookahead 0\n"),
                    ConfigError);
    // step is mandatory via validate()
    CHECK_THROWS_AS(parse_spec_text("data_period 2ms\n"), ConfigError);
}

TEST_CASE("configuration advice flags known-bad parameter relations")
{
    ExperimentSpec spec;
    spec.step = msec(100);
    spec.sim_delay = msec(100);
    spec.data_period = msec(2);
    spec.total_sim_time = sec(1);
    spec.cfg.maxage = msec(300);
    spec.cfg.lookahead = 50;

    // aligned rates, maxage covers the spacing, lookahead near the budget
    CHECK(configuration_advice(spec).empty());

    SUBCASE("misaligned step and data period")
    {
        spec.data_period = msec(3);
        spec.cfg.lookahead = 34;
        const auto advice = configuration_advice(spec);
        REQUIRE_FALSE(advice.empty());
        CHECK(advice.front().find("align") != std::string::npos);
    }
    SUBCASE("maxage below the data spacing")
    {
        spec.data_period = msec(500);
        spec.cfg.lookahead = 1;
        const auto advice = configuration_advice(spec);
        REQUIRE_FALSE(advice.empty());
        CHECK(advice.front().find("maxage") != std::string::npos);
    }
    SUBCASE("lookahead below the per-step budget")
    {
        spec.cfg.lookahead = 1;
        const auto advice = configuration_advice(spec);
        REQUIRE_FALSE(advice.empty());
        CHECK(advice.front().find("lookahead") != std::string::npos);
    }
    SUBCASE("gaps wider than maxage")
    {
        spec.gap_pattern = GapPattern::Fixed;
        spec.gap = msec(900);
        const auto advice = configuration_advice(spec);
        REQUIRE_FALSE(advice.empty());
        bool found = false;
        for (const auto& a : advice) {
            found = found || a.find("gap") != std::string::npos;
        }
        CHECK(found);
    }
}

TEST_CASE("materialize_source honours the gap pattern")
{
    ExperimentSpec spec;
    spec.step = msec(100);
    spec.data_period = msec(100);
    spec.total_sim_time = sec(2);
    spec.cfg.maxage = msec(200);

    SUBCASE("from_trace requires a trace")
    {
        spec.gap_pattern = GapPattern::FromTrace;
        CHECK_THROWS_AS(materialize_source(spec, std::nullopt, 1), ConfigError);
    }
    SUBCASE("none cleans a supplied trace")
    {
        spec.gap_pattern = GapPattern::None;
        const ReplaySource gapped = synth_ur(10, 2, 1, msec(100), GapSpec{3, sec(1)}, 2);
        const ReplaySource out = materialize_source(spec, gapped, 1);
        for (std::size_t i = 1; i < out.messages.size(); ++i) {
            CHECK((out.messages[i].timestamp - out.messages[i - 1].timestamp) == msec(100));
        }
    }
    SUBCASE("fixed gaps synthesize a gapped stream")
    {
        spec.gap_pattern = GapPattern::Fixed;
        spec.gap = msec(500);
        spec.gap_every = 4;
        const ReplaySource out = materialize_source(spec, std::nullopt, 1);
        CHECK((out.messages[4].timestamp - out.messages[3].timestamp) == msec(500));
    }
}

TEST_CASE("run_experiment: zero total time produces an empty profile")
{
    ExperimentSpec spec;
    spec.step = msec(100);
    spec.sim_delay = msec(100);
    spec.data_period = msec(100);
    spec.total_sim_time = usec(0);
    spec.cfg.maxage = msec(200);

    const ReplaySource src = synth_ur(3, 2, 1, msec(100), GapSpec{}, 1);
    const auto runs = run_experiment(spec, src, 1);
    REQUIRE(runs.size() == 1);
    CHECK_FALSE(runs[0].aborted);
    CHECK(runs[0].profile.empty());
}

TEST_CASE("run_experiment: virtual runs with the same seed are identical")
{
    ExperimentSpec spec;
    spec.step = msec(100);
    spec.sim_delay = msec(100);
    spec.data_period = msec(2);
    spec.total_sim_time = sec(3);
    spec.cfg.maxage = msec(300);
    spec.cfg.lookahead = 60;
    spec.cfg.threading = Threading::On;
    spec.repetitions = 2;

    const ReplaySource src = materialize_source(spec, std::nullopt, 7);
    const auto a = run_experiment(spec, src, 7);
    const auto b = run_experiment(spec, src, 7);
    REQUIRE(a.size() == 2);
    for (std::size_t r = 0; r < a.size(); ++r) {
        REQUIRE(a[r].profile.size() == b[r].profile.size());
        for (std::size_t i = 0; i < a[r].profile.size(); ++i) {
            CHECK(a[r].profile[i].out_seqno == b[r].profile[i].out_seqno);
            CHECK(a[r].profile[i].sim_time == b[r].profile[i].sim_time);
            CHECK(a[r].profile[i].queue_size_at_exit == b[r].profile[i].queue_size_at_exit);
        }
    }
}

TEST_CASE("run_experiment: cleaned 2ms data offers ~50 messages per 100ms step")
{
    ExperimentSpec spec;
    spec.step = msec(100);
    spec.sim_delay = msec(100);
    spec.data_period = msec(2);
    spec.total_sim_time = sec(4);
    spec.cfg.maxage = msec(300);
    spec.cfg.lookahead = 200;
    spec.cfg.threading = Threading::On;
    spec.n_real = 3;
    spec.n_int = 1;

    const ReplaySource src = materialize_source(spec, std::nullopt, 4);
    const auto runs = run_experiment(spec, src, 4);
    REQUIRE_FALSE(runs[0].aborted);
    // each step adopts the newest message at its end time: the seqno rate
    // is exactly the 50 messages produced per step
    std::int64_t prev = 0;
    for (const auto& rec : runs[0].profile) {
        CHECK(rec.out_seqno - prev == 50);
        prev = rec.out_seqno;
    }
}

TEST_CASE("run_experiment: a silent stream aborts the repetition with a timeout mark")
{
    ExperimentSpec spec;
    spec.step = msec(100);
    spec.sim_delay = msec(100);
    spec.data_period = msec(100);
    spec.total_sim_time = sec(1);
    spec.cfg.maxage = msec(200);
    spec.cfg.init_timeout = msec(200);
    spec.clock = ClockMode::Wall;

    // all payload timestamps far in the future: nothing valid at start
    ReplaySource src = synth_ur(5, 2, 1, msec(100), GapSpec{}, 1);
    for (auto& m : src.messages) {
        m.timestamp = m.timestamp + sec(3600);
    }
    const auto runs = run_experiment(spec, src, 1);
    REQUIRE(runs.size() == 1);
    CHECK(runs[0].aborted);
}

TEST_CASE("run_experiment with monitor wiring publishes the stop within one step")
{
    // approach at 1 m/s from 10 m toward the origin, threshold 1 m: the
    // first violating sample is at t > 9 s
    ExperimentSpec spec;
    spec.step = msec(100);
    spec.sim_delay = msec(100);
    spec.data_period = msec(100);
    spec.total_sim_time = sec(12);
    spec.cfg.maxage = msec(300);
    spec.cfg.lookahead = 4;
    spec.wiring = Wiring::Monitor;
    spec.safety_threshold_m = 1.0;

    const ReplaySource src = materialize_source(spec, std::nullopt, 1);
    const auto runs = run_experiment(spec, src, 1);
    REQUIRE(runs.size() == 1);
    CHECK_FALSE(runs[0].aborted);
    CHECK(runs[0].profile.size() == 120);

    // distance(t) = 10 - t crosses the 1m threshold strictly after t=9s;
    // the first violating sample (ts=9.1s) is output at the step ending
    // 9.1s, and the stop command must go out at that step or the next one
    std::optional<SimTime> stop_published;
    for (const auto& cmd : runs[0].commands) {
        auto it = cmd.values.find("stop");
        if (it != cmd.values.end() && it->second.as_boolean()) {
            stop_published = cmd.timestamp;
            break;
        }
    }
    REQUIRE(stop_published.has_value());
    CHECK(stop_published->micros >= 9'100'000);
    CHECK(stop_published->micros <= 9'200'000);

    // Jacobi ordering means the very first step forwarded the initial
    // stop=false input
    REQUIRE_FALSE(runs[0].commands.empty());
    CHECK(runs[0].commands.front().values.at("stop").as_boolean() == false);
}
