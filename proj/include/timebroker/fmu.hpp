#pragma once

#include "timebroker/clock.hpp"
#include "timebroker/codec.hpp"
#include "timebroker/config.hpp"
#include "timebroker/endpoint.hpp"
#include "timebroker/message.hpp"
#include "timebroker/queue.hpp"
#include "timebroker/select.hpp"

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace timebroker {

struct HealthChannel {
    RoutingKey publish_key;
    RoutingKey consume_key;
};

struct FmuSetup {
    BrokerConfig cfg;
    RoutingKey data_key;    // subscription carrying timestamped data
    RoutingKey command_key; // outgoing publish-on-change messages
    std::optional<HealthChannel> health;
    std::map<std::string, ValueType> inputs; // declared input signals
};

// One row of a run profile, appended per do_step call.
struct ProfileRecord {
    SimTime sim_time{};
    Duration step_duration{}; // wall execution time of the do_step body
    std::int64_t out_seqno = -1;
    std::size_t queue_size_at_exit = 0;
    StepStatus status = StepStatus::NoValidData;
};

// Data-broker unit with an FMU-shaped lifecycle: subscribe during
// initialization, then per step consume incoming data (inline or via a
// consumer thread), select the output, forward changed inputs, and record
// a profile row.
//
// Exactly two threads may touch an instance in threaded wall-clock mode:
// the internal consumer thread (enqueue only) and the stepping thread.
// Lifecycle calls are not reentrant.
class BrokerFmu {
public:
    BrokerFmu(FmuSetup setup, std::shared_ptr<BrokerEndpoint> transport,
              std::shared_ptr<Clock> clock);
    ~BrokerFmu();

    BrokerFmu(const BrokerFmu&) = delete;
    BrokerFmu& operator=(const BrokerFmu&) = delete;

    // Establishes the subscriptions (and the consumer thread in threaded
    // wall-clock mode). Idempotent; a transport failure leaves no partial
    // state behind.
    void enter_initialization();

    // Waits for a first message valid at `start_time`, up to
    // cfg.init_timeout of wall time. Under a virtual clock the arrival
    // schedule is already fixed, so the wait degenerates to a drain of
    // what is visible at `start_time`.
    StepStatus exit_initialization(SimTime start_time);

    StepStatus do_step(SimTime current, Duration step);

    void set_input(const std::string& name, Value v);

    // Forwards exactly the inputs that changed since the previous step as
    // one message, and snapshots the inputs. Phase (c) of do_step, exposed
    // for direct testing. Returns the number of changed signals.
    std::size_t publish_on_change(SimTime now);

    // Publishes a health stamp and, if a peer echo has been consumed,
    // returns the round-trip wall-clock lag. Best effort.
    std::optional<Duration> health_exchange(SimTime current);

    // Stops the consumer thread and closes subscriptions.
    void terminate();

    const OutputState& output() const { return out_; }
    std::int64_t out_seqno() const
    {
        return out_.current ? static_cast<std::int64_t>(out_.current->seqno) : -1;
    }
    std::span<const ProfileRecord> profile() const { return profile_; }
    std::size_t queue_size() const { return inq_.size(); }
    std::uint64_t dropped_count() const { return inq_.dropped_count(); }
    std::size_t retained_future_count() const { return selector_.retained_future_count(); }
    const SelectionStats& last_selection() const { return selector_.last(); }
    std::uint64_t protocol_error_count() const { return protocol_errors_.load(); }
    std::uint64_t codec_error_count() const { return codec_errors_.load(); }

private:
    enum class Phase { Fresh, Initializing, Stepping };

    class TransportSource;

    void drain_visible_();
    bool ingest_(const std::string& body);
    StepStatus run_selection_(SimTime now);
    std::int64_t wall_micros_() const;

    FmuSetup setup_;
    std::shared_ptr<BrokerEndpoint> transport_;
    std::shared_ptr<Clock> clock_;

    IncomingQueue inq_;
    OutputSelector selector_;
    OutputState out_;

    std::unique_ptr<Subscription> data_sub_;
    std::unique_ptr<Subscription> health_sub_;
    std::unique_ptr<TransportSource> inline_source_;

    std::map<std::string, Value> staged_inputs_;
    std::map<std::string, Value> prev_inputs_;
    std::uint64_t out_msg_seqno_ = 0;

    std::vector<ProfileRecord> profile_;
    Phase phase_ = Phase::Fresh;
    SimTime next_step_time_{};

    std::thread consumer_;
    std::atomic<bool> stop_consumer_{false};
    std::atomic<std::uint64_t> protocol_errors_{0};
    std::atomic<std::uint64_t> codec_errors_{0};

    std::chrono::steady_clock::time_point wall_epoch_ = std::chrono::steady_clock::now();
};

} // namespace timebroker
