#include "timebroker/fmu.hpp"

#include "timebroker/errors.hpp"
#include "timebroker/validity.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>

namespace timebroker {

using std::chrono::steady_clock;

// Inline consumption path for the unthreaded configuration. Messages pass
// through the incoming queue one at a time (keeping the sequence-number
// protocol check in one place) and the queue is empty again the moment the
// take returns, matching the live behavior where any backlog builds up in
// the socket layer, not the FMU layer. A future-stamped message that V2
// declines sits in the one-slot buffer below, which plays the role of that
// socket layer.
class BrokerFmu::TransportSource final : public MessageSource {
public:
    explicit TransportSource(BrokerFmu& fmu) : fmu_(fmu) {}

    std::optional<TimedMessage> take_if_at_or_before(SimTime bound) override
    {
        if (!fill_() || slot_->timestamp > bound) {
            return std::nullopt;
        }
        auto msg = std::move(*slot_);
        slot_.reset();
        return msg;
    }

    std::optional<TimedMessage> take_any() override
    {
        if (!fill_()) {
            return std::nullopt;
        }
        auto msg = std::move(*slot_);
        slot_.reset();
        return msg;
    }

private:
    bool fill_()
    {
        while (!slot_) {
            auto wm = fmu_.data_sub_->poll(Duration{0});
            if (!wm) {
                return false;
            }
            if (fmu_.ingest_(wm->body)) {
                slot_ = fmu_.inq_.take_any();
            }
        }
        return true;
    }

    BrokerFmu& fmu_;
    std::optional<TimedMessage> slot_;
};

BrokerFmu::BrokerFmu(FmuSetup setup, std::shared_ptr<BrokerEndpoint> transport,
                     std::shared_ptr<Clock> clock)
    : setup_(std::move(setup)),
      transport_(std::move(transport)),
      clock_(std::move(clock)),
      inq_(setup_.cfg.queue_capacity),
      selector_(setup_.cfg)
{
    if (!transport_ || !clock_) {
        throw ConfigError("BrokerFmu requires a transport and a clock");
    }
    setup_.cfg.validate();
}

BrokerFmu::~BrokerFmu()
{
    try {
        terminate();
    } catch (...) {
        // destructor must not throw
    }
}

bool BrokerFmu::ingest_(const std::string& body)
{
    try {
        inq_.enqueue(decode(body));
        return true;
    } catch (const ProtocolError&) {
        protocol_errors_.fetch_add(1);
    } catch (const CodecError&) {
        codec_errors_.fetch_add(1);
    }
    return false;
}

void BrokerFmu::drain_visible_()
{
    while (auto wm = data_sub_->poll(Duration{0})) {
        ingest_(wm->body);
    }
}

void BrokerFmu::enter_initialization()
{
    if (phase_ != Phase::Fresh) {
        return; // idempotent
    }

    // no partial state on failure: members are only assigned once every
    // subscription succeeded
    std::unique_ptr<Subscription> data_sub = transport_->subscribe(setup_.data_key);
    std::unique_ptr<Subscription> health_sub;
    if (setup_.health) {
        health_sub = transport_->subscribe(setup_.health->consume_key);
    }
    data_sub_ = std::move(data_sub);
    health_sub_ = std::move(health_sub);

    if (setup_.cfg.threading == Threading::On && !clock_->is_virtual()) {
        stop_consumer_.store(false);
        consumer_ = std::thread([this] {
            while (!stop_consumer_.load(std::memory_order_relaxed)) {
                auto wm = data_sub_->poll(msec(2));
                if (wm) {
                    ingest_(wm->body);
                }
            }
        });
    } else if (setup_.cfg.threading == Threading::Off) {
        inline_source_ = std::make_unique<TransportSource>(*this);
    }

    phase_ = Phase::Initializing;
}

StepStatus BrokerFmu::run_selection_(SimTime now)
{
    if (setup_.cfg.threading == Threading::Off) {
        return selector_.select(*inline_source_, out_, now);
    }
    QueueSource src(inq_);
    return selector_.select(src, out_, now);
}

StepStatus BrokerFmu::exit_initialization(SimTime start_time)
{
    if (phase_ == Phase::Fresh) {
        throw LifecycleError("exit_initialization before enter_initialization");
    }
    if (phase_ == Phase::Stepping) {
        throw LifecycleError("exit_initialization called twice");
    }

    auto finish = [&](StepStatus st) {
        phase_ = Phase::Stepping;
        next_step_time_ = start_time;
        return st;
    };

    // Done only once the held output is actually valid at start_time; V2
    // adoption alone does not guarantee that (it ignores maxage).
    const auto held_valid = [&] {
        return out_.current && is_valid(out_.current->timestamp, start_time, setup_.cfg.maxage);
    };

    if (clock_->is_virtual()) {
        // The whole arrival schedule up to start_time is already visible;
        // either a valid first message is in it or the wait would never end.
        if (setup_.cfg.threading == Threading::On) {
            drain_visible_();
        }
        for (;;) {
            if (held_valid()) {
                return finish(StepStatus::Ok);
            }
            run_selection_(start_time);
            if (held_valid()) {
                return finish(StepStatus::Ok);
            }
            if (selector_.last().examined == 0) {
                return finish(StepStatus::Timeout);
            }
        }
    }

    const auto deadline =
        steady_clock::now() + std::chrono::microseconds(setup_.cfg.init_timeout.micros);
    for (;;) {
        if (held_valid()) {
            return finish(StepStatus::Ok);
        }
        run_selection_(start_time);
        if (held_valid()) {
            return finish(StepStatus::Ok);
        }
        if (steady_clock::now() >= deadline) {
            return finish(StepStatus::Timeout);
        }
        if (selector_.last().examined == 0) {
            std::this_thread::sleep_for(std::chrono::microseconds(500));
        }
    }
}

StepStatus BrokerFmu::do_step(SimTime current, Duration step)
{
    if (phase_ != Phase::Stepping) {
        throw LifecycleError("do_step before initialization completed");
    }
    if (current != next_step_time_) {
        throw LifecycleError("do_step at " + to_string(current) + " but previous step ended at "
                             + to_string(next_step_time_));
    }

    const auto t0 = steady_clock::now();
    const SimTime now = current + step;

    if (setup_.cfg.threading == Threading::On && clock_->is_virtual()) {
        // Everything the consumer thread would have queued by `now` in a
        // live run is exactly what the schedule has made visible.
        drain_visible_();
    }

    StepStatus status = run_selection_(now);

    publish_on_change(now);
    if (setup_.health) {
        health_exchange(now);
    }

    if (inq_.overflowed_since_last_check()) {
        status = StepStatus::Overflowed;
    }

    const auto dur =
        std::chrono::duration_cast<std::chrono::microseconds>(steady_clock::now() - t0);
    profile_.push_back(ProfileRecord{now, Duration{dur.count()}, out_seqno(), inq_.size(),
                                     status});
    next_step_time_ = now;
    return status;
}

void BrokerFmu::set_input(const std::string& name, Value v)
{
    auto it = setup_.inputs.find(name);
    if (it == setup_.inputs.end()) {
        throw ConfigError("set_input: unknown input '" + name + "'");
    }
    if (it->second != v.type()) {
        throw ConfigError("set_input: input '" + name + "' is " + to_string(it->second)
                          + ", got " + to_string(v.type()));
    }
    staged_inputs_[name] = std::move(v);
}

std::size_t BrokerFmu::publish_on_change(SimTime now)
{
    if (phase_ == Phase::Fresh) {
        throw LifecycleError("publish_on_change before initialization");
    }

    std::map<std::string, Value> changed;
    for (const auto& [name, v] : staged_inputs_) {
        auto prev = prev_inputs_.find(name);
        if (prev == prev_inputs_.end() || !(prev->second == v)) {
            changed.emplace(name, v);
        }
    }

    const std::size_t count = changed.size();
    if (count > 0) {
        TimedMessage out{now, out_msg_seqno_++, std::move(changed)};
        transport_->publish(setup_.command_key, encode(out));
    }
    prev_inputs_ = staged_inputs_;
    return count;
}

std::optional<Duration> BrokerFmu::health_exchange(SimTime current)
{
    if (!setup_.health) {
        throw LifecycleError("health channel not configured");
    }
    if (phase_ == Phase::Fresh) {
        throw LifecycleError("health_exchange before initialization");
    }

    nlohmann::json body = {
        {"sim_time_us", current.micros},
        {"wall_us", wall_micros_()},
    };
    transport_->publish(setup_.health->publish_key, body.dump());

    // Keep only the freshest echo; lag is the round trip of our own stamp.
    std::optional<Duration> lag;
    while (auto wm = health_sub_->poll(Duration{0})) {
        auto j = nlohmann::json::parse(wm->body, nullptr, /*allow_exceptions=*/false);
        if (j.is_discarded() || !j.contains("wall_us") || !j["wall_us"].is_number_integer()) {
            continue;
        }
        const std::int64_t stamped = j["wall_us"].get<std::int64_t>();
        lag = Duration{std::max<std::int64_t>(wall_micros_() - stamped, 0)};
    }
    return lag;
}

void BrokerFmu::terminate()
{
    stop_consumer_.store(true);
    if (consumer_.joinable()) {
        consumer_.join();
    }
    if (data_sub_) {
        data_sub_->close();
    }
    if (health_sub_) {
        health_sub_->close();
    }
}

std::int64_t BrokerFmu::wall_micros_() const
{
    return std::chrono::duration_cast<std::chrono::microseconds>(steady_clock::now()
                                                                 - wall_epoch_)
        .count();
}

} // namespace timebroker
