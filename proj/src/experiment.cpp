#include "timebroker/experiment.hpp"

#include "timebroker/codec.hpp"
#include "timebroker/errors.hpp"
#include "timebroker/inmem_broker.hpp"
#include "timebroker/monitor.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

namespace timebroker {

void ExperimentSpec::validate() const
{
    if (step.micros <= 0) {
        throw ConfigError("step must be > 0");
    }
    if (repetitions < 1) {
        throw ConfigError("repetitions must be >= 1");
    }
    if (data_period.micros <= 0) {
        throw ConfigError("data_period must be > 0");
    }
    if (gap_pattern == GapPattern::Fixed && gap.micros <= 0) {
        throw ConfigError("fixed gap_pattern needs a gap > 0");
    }
    cfg.validate();
}

namespace {

Duration parse_duration(const std::string& s)
{
    std::int64_t n = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec != std::errc{} || n < 0) {
        throw ConfigError("bad duration '" + s + "'");
    }
    const std::string unit(ptr, s.data() + s.size());
    if (unit == "us") {
        return usec(n);
    }
    if (unit == "ms") {
        return msec(n);
    }
    if (unit == "s") {
        return sec(n);
    }
    throw ConfigError("duration '" + s + "' needs a us/ms/s suffix");
}

std::uint64_t parse_count(const std::string& s)
{
    std::uint64_t n = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError("bad count '" + s + "'");
    }
    return n;
}

} // namespace

ExperimentSpec parse_spec_text(const std::string& text)
{
    ExperimentSpec spec;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream ls(line);
        std::string key, value, eq;
        if (!(ls >> key)) {
            continue; // blank
        }
        if (!(ls >> value)) {
            throw ConfigError("spec line " + std::to_string(line_no) + ": missing value");
        }
        if (value == "=" && !(ls >> value)) {
            throw ConfigError("spec line " + std::to_string(line_no) + ": missing value");
        }

        if (key == "step") {
            spec.step = parse_duration(value);
        } else if (key == "sim_delay") {
            spec.sim_delay = parse_duration(value);
        } else if (key == "data_period") {
            spec.data_period = parse_duration(value);
        } else if (key == "total_sim_time") {
            spec.total_sim_time = parse_duration(value);
        } else if (key == "gap_pattern") {
            if (value == "none") {
                spec.gap_pattern = GapPattern::None;
            } else if (value == "from_trace") {
                spec.gap_pattern = GapPattern::FromTrace;
            } else if (value.rfind("fixed:", 0) == 0) {
                spec.gap_pattern = GapPattern::Fixed;
                spec.gap = parse_duration(value.substr(6));
            } else {
                throw ConfigError("gap_pattern must be none, from_trace or fixed:<dur>");
            }
        } else if (key == "gap_every") {
            spec.gap_every = parse_count(value);
        } else if (key == "repetitions") {
            spec.repetitions = static_cast<std::uint32_t>(parse_count(value));
        } else if (key == "clock") {
            if (value == "virtual") {
                spec.clock = ClockMode::Virtual;
            } else if (value == "wall") {
                spec.clock = ClockMode::Wall;
            } else {
                throw ConfigError("clock must be virtual or wall");
            }
        } else if (key == "n_real") {
            spec.n_real = parse_count(value);
        } else if (key == "n_int") {
            spec.n_int = parse_count(value);
        } else if (key == "latency") {
            spec.latency = parse_duration(value);
        } else if (key == "jitter") {
            spec.jitter = parse_duration(value);
        } else if (key == "wiring") {
            if (value == "cs1") {
                spec.wiring = Wiring::Passthrough;
            } else if (value == "cs2") {
                spec.wiring = Wiring::Monitor;
            } else {
                throw ConfigError("wiring must be cs1 or cs2");
            }
        } else if (key == "safety_threshold") {
            spec.safety_threshold_m = std::stod(value);
        } else if (key == "cfg.maxage") {
            spec.cfg.maxage = parse_duration(value);
        } else if (key == "cfg.lookahead") {
            spec.cfg.lookahead = static_cast<std::uint32_t>(parse_count(value));
        } else if (key == "cfg.semantics") {
            if (value == "v1") {
                spec.cfg.semantics = Semantics::V1;
            } else if (value == "v2") {
                spec.cfg.semantics = Semantics::V2;
            } else {
                throw ConfigError("cfg.semantics must be v1 or v2");
            }
        } else if (key == "cfg.threading") {
            if (value == "on") {
                spec.cfg.threading = Threading::On;
            } else if (value == "off") {
                spec.cfg.threading = Threading::Off;
            } else {
                throw ConfigError("cfg.threading must be on or off");
            }
        } else if (key == "cfg.queue_capacity") {
            spec.cfg.queue_capacity = parse_count(value);
        } else if (key == "cfg.init_timeout") {
            spec.cfg.init_timeout = parse_duration(value);
        } else {
            throw ConfigError("spec line " + std::to_string(line_no) + ": unknown key '" + key
                              + "'");
        }
    }
    spec.validate();
    return spec;
}

ExperimentSpec parse_spec_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open spec file: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_spec_text(buf.str());
}

std::vector<std::string> configuration_advice(const ExperimentSpec& spec)
{
    std::vector<std::string> advice;
    const auto say = [&](std::string s) { advice.push_back(std::move(s)); };

    if (spec.step.micros % spec.data_period.micros != 0
        && spec.data_period.micros % spec.step.micros != 0) {
        say("step (" + to_string(spec.step) + ") and data_period ("
            + to_string(spec.data_period)
            + ") do not align; outputs will beat against the data rate");
    }
    if (spec.cfg.maxage < spec.data_period) {
        say("maxage (" + to_string(spec.cfg.maxage)
            + ") is below the nominal data spacing (" + to_string(spec.data_period)
            + "); the output will go invalid between messages");
    }
    if (spec.gap_pattern == GapPattern::Fixed && spec.cfg.maxage < spec.gap) {
        say("maxage (" + to_string(spec.cfg.maxage) + ") cannot bridge the injected gaps ("
            + to_string(spec.gap) + ")");
    }
    const std::int64_t per_step = spec.step.micros / spec.data_period.micros;
    if (per_step >= 2 && spec.cfg.lookahead < static_cast<std::uint32_t>(per_step)) {
        say("lookahead " + std::to_string(spec.cfg.lookahead) + " is below the ~"
            + std::to_string(per_step)
            + " messages arriving per step; the output will lag the stream");
    }
    if (spec.cfg.lookahead > 1
        && spec.cfg.maxage.micros > 0
        && per_step >= 1
        && spec.cfg.lookahead > static_cast<std::uint32_t>(4 * std::max<std::int64_t>(per_step, 1))) {
        say("lookahead " + std::to_string(spec.cfg.lookahead)
            + " is far above the per-step budget; expect large jumps between outputs");
    }
    return advice;
}

ReplaySource materialize_source(const ExperimentSpec& spec,
                                const std::optional<ReplaySource>& trace, std::uint64_t seed)
{
    if (spec.gap_pattern == GapPattern::FromTrace) {
        if (!trace) {
            throw ConfigError("gap_pattern from_trace requires a trace");
        }
        ReplaySource src = *trace;
        src.wire_period = spec.data_period;
        return src;
    }

    if (trace) {
        // Gaps cleaned away; Fixed gaps over a recorded trace are not a
        // thing we synthesize.
        return clean_gaps(*trace, spec.data_period);
    }

    const std::size_t n =
        static_cast<std::size_t>(spec.total_sim_time.micros / spec.data_period.micros) + 2;
    if (spec.wiring == Wiring::Monitor) {
        return synth_approach(n, spec.data_period, /*start_distance_m=*/10.0,
                              /*speed_m_per_s=*/1.0);
    }
    GapSpec gaps;
    if (spec.gap_pattern == GapPattern::Fixed) {
        gaps.every = spec.gap_every;
        gaps.gap = spec.gap;
    }
    return synth_ur(n, spec.n_real, spec.n_int, spec.data_period, gaps, seed);
}

namespace {

const RoutingKey kDataKey{"fmu.exp.data"};
const RoutingKey kCmdKey{"fmu.exp.cmd"};

// Interleaves producer publishes with the master's schedule: advancing to
// a target virtual time fires every wire event at its own timestamp first.
class VirtualProducer {
public:
    VirtualProducer(VirtualClock& clock, std::shared_ptr<BrokerEndpoint> ep,
                    const ReplaySource& src)
        : clock_(clock), ep_(std::move(ep)), src_(src)
    {
    }

    void advance_to(SimTime target)
    {
        while (next_ < src_.messages.size()) {
            const SimTime sched{static_cast<std::int64_t>(next_) * src_.wire_period.micros};
            if (sched > target) {
                break;
            }
            clock_.advance_to(sched);
            ep_->publish(kDataKey, encode(src_.messages[next_]));
            ++next_;
        }
        clock_.advance_to(target);
    }

private:
    VirtualClock& clock_;
    std::shared_ptr<BrokerEndpoint> ep_;
    const ReplaySource& src_;
    std::size_t next_ = 0;
};

void busy_wait_until(std::chrono::steady_clock::time_point target)
{
    while (std::chrono::steady_clock::now() < target) {
        // idle occupation standing in for other FMUs
    }
}

// Jacobi get/set half of a round: read the broker outputs, run the
// monitor, stage the stop input.
void wire_monitor(const ExperimentSpec& spec, BrokerFmu& fmu, MonitorFmu& monitor)
{
    if (spec.wiring != Wiring::Monitor || !fmu.output().current) {
        return;
    }
    const auto& values = fmu.output().current->values;
    const auto get = [&](const char* name) {
        auto it = values.find(name);
        if (it == values.end() || it->second.type() != ValueType::Real) {
            throw ConfigError(std::string("monitor wiring needs real signal '") + name + "'");
        }
        return it->second.as_real();
    };
    const Point2 robot{get("robot_x"), get("robot_y")};
    const Point2 obstacle{get("obstacle_x"), get("obstacle_y")};
    const MonitorReading reading = monitor.step(robot, obstacle);
    fmu.set_input("stop", Value(reading.stop));
}

RepetitionResult run_once(const ExperimentSpec& spec, const ReplaySource& src,
                          std::uint64_t seed)
{
    FmuSetup setup;
    setup.cfg = spec.cfg;
    setup.data_key = kDataKey;
    setup.command_key = kCmdKey;
    if (spec.wiring == Wiring::Monitor) {
        setup.inputs.emplace("stop", ValueType::Boolean);
    }

    MonitorFmu monitor(spec.safety_threshold_m);
    RepetitionResult result;

    const std::size_t n_steps =
        static_cast<std::size_t>(spec.total_sim_time.micros / spec.step.micros);

    const auto collect_commands = [&result](Subscription& sub) {
        while (auto wm = sub.poll(Duration{0})) {
            result.commands.push_back(decode(wm->body));
        }
    };

    if (spec.clock == ClockMode::Virtual) {
        auto clock = std::make_shared<VirtualClock>();
        auto hub = inmem_broker(clock, spec.latency, spec.jitter, seed);
        BrokerFmu fmu(setup, hub->endpoint(), clock);
        VirtualProducer producer(*clock, hub->endpoint(), src);
        auto cmd_sub = hub->endpoint()->subscribe(kCmdKey);

        fmu.enter_initialization();
        producer.advance_to(SimTime{0});
        if (fmu.exit_initialization(SimTime{0}) != StepStatus::Ok) {
            result.aborted = true;
            result.profile.assign(fmu.profile().begin(), fmu.profile().end());
            return result;
        }

        SimTime wall{0};
        SimTime t{0};
        for (std::size_t k = 0; k < n_steps; ++k) {
            wall = wall + spec.sim_delay;
            producer.advance_to(wall);
            wire_monitor(spec, fmu, monitor);
            fmu.do_step(t, spec.step);
            t = t + spec.step;
        }
        clock->advance_to(wall + spec.latency); // let the last command land
        collect_commands(*cmd_sub);
        result.profile.assign(fmu.profile().begin(), fmu.profile().end());
        return result;
    }

    auto clock = std::make_shared<WallClock>();
    auto hub = inmem_broker(clock, spec.latency, spec.jitter, seed);
    BrokerFmu fmu(setup, hub->endpoint(), clock);
    auto cmd_sub = hub->endpoint()->subscribe(kCmdKey);

    fmu.enter_initialization();

    std::atomic<bool> stop_producer{false};
    auto producer_ep = hub->endpoint();
    std::thread producer([&] {
        const auto epoch = std::chrono::steady_clock::now();
        for (std::size_t i = 0; i < src.messages.size(); ++i) {
            std::this_thread::sleep_until(
                epoch + std::chrono::microseconds(static_cast<std::int64_t>(i)
                                                  * src.wire_period.micros));
            if (stop_producer.load(std::memory_order_relaxed)) {
                return;
            }
            producer_ep->publish(kDataKey, encode(src.messages[i]));
        }
    });

    const auto stop_and_join = [&] {
        stop_producer.store(true);
        producer.join();
        fmu.terminate();
    };

    try {
        if (fmu.exit_initialization(SimTime{0}) != StepStatus::Ok) {
            result.aborted = true;
            result.profile.assign(fmu.profile().begin(), fmu.profile().end());
            stop_and_join();
            return result;
        }
        // Fixed-rate rounds: each step starts sim_delay after the previous
        // round started, so the master's own execution time is absorbed by
        // the idle window instead of drifting the schedule.
        const auto epoch = std::chrono::steady_clock::now();
        SimTime t{0};
        for (std::size_t k = 0; k < n_steps; ++k) {
            busy_wait_until(epoch
                            + std::chrono::microseconds(static_cast<std::int64_t>(k + 1)
                                                        * spec.sim_delay.micros));
            wire_monitor(spec, fmu, monitor);
            fmu.do_step(t, spec.step);
            t = t + spec.step;
        }
    } catch (...) {
        stop_and_join();
        throw;
    }

    // let in-flight command messages land before draining
    if (auto wm = cmd_sub->poll(spec.latency + spec.jitter)) {
        result.commands.push_back(decode(wm->body));
    }
    collect_commands(*cmd_sub);
    result.profile.assign(fmu.profile().begin(), fmu.profile().end());
    stop_and_join();
    return result;
}

} // namespace

std::vector<RepetitionResult> run_experiment(const ExperimentSpec& spec,
                                             const ReplaySource& src, std::uint64_t seed)
{
    spec.validate();
    if (src.messages.empty()) {
        throw ConfigError("replay source is empty");
    }
    if (src.wire_period.micros <= 0) {
        throw ConfigError("replay source wire_period must be > 0");
    }

    std::vector<RepetitionResult> results;
    results.reserve(spec.repetitions);
    for (std::uint32_t r = 0; r < spec.repetitions; ++r) {
        results.push_back(run_once(spec, src, seed + r));
    }
    return results;
}

} // namespace timebroker
