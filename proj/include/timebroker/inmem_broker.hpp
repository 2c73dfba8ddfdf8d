#pragma once

#include "timebroker/clock.hpp"
#include "timebroker/endpoint.hpp"

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <vector>

namespace timebroker {

// Deterministic stand-in for a live broker. Published messages become
// visible to matching subscribers `latency` after publish; in wall-clock
// mode a seeded jitter of up to +/- `jitter` is added, clamped so per-key
// FIFO is preserved. Under a virtual clock delivery is exact and the whole
// broker is deterministic: identical schedules produce identical traces.
class InMemoryBroker : public std::enable_shared_from_this<InMemoryBroker> {
public:
    static std::shared_ptr<InMemoryBroker> create(std::shared_ptr<Clock> clock,
                                                  Duration latency = {},
                                                  Duration jitter = {},
                                                  std::uint64_t seed = 1);

    // A connection facade; endpoints share the hub's message flow.
    std::shared_ptr<BrokerEndpoint> endpoint();

    void close();

    const Clock& clock() const { return *clock_; }

private:
    InMemoryBroker(std::shared_ptr<Clock> clock, Duration latency, Duration jitter,
                   std::uint64_t seed);

    struct Entry {
        SimTime visible_at;
        std::string body;
    };

    struct SubState {
        RoutingKey key;
        std::deque<Entry> entries;
        SimTime last_visible{};
        bool closed = false;
    };

    class SubscriptionImpl;
    class EndpointImpl;

    void publish_(const RoutingKey& key, std::string body);
    std::unique_ptr<Subscription> subscribe_(const RoutingKey& key);
    std::optional<WireMessage> poll_(const std::shared_ptr<SubState>& sub, Duration wait);

    std::shared_ptr<Clock> clock_;
    const WallClock* wall_ = nullptr; // non-null iff clock is a wall clock
    Duration latency_;
    Duration jitter_;

    std::mutex mu_;
    std::condition_variable cv_;
    std::mt19937_64 rng_;
    std::vector<std::weak_ptr<SubState>> subs_;
    bool closed_ = false;
};

// Endpoint factory over a fresh hub.
std::shared_ptr<InMemoryBroker> inmem_broker(std::shared_ptr<Clock> clock,
                                             Duration latency = {},
                                             Duration jitter = {},
                                             std::uint64_t seed = 1);

} // namespace timebroker
