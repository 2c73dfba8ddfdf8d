#pragma once

#include "timebroker/routing.hpp"
#include "timebroker/time.hpp"

#include <memory>
#include <optional>
#include <string>

namespace timebroker {

struct WireMessage {
    RoutingKey key;
    std::string body;
};

// Pull-based message source bound to one routing key. Per-key delivery
// order equals publish order.
class Subscription {
public:
    virtual ~Subscription() = default;

    // Next visible message, waiting up to `wait` for one to arrive.
    // A virtual-clock transport never blocks: it returns whatever is
    // visible at the current virtual time.
    virtual std::optional<WireMessage> poll(Duration wait) = 0;

    virtual void close() = 0;
};

// Broker capability: publish, subscribe, close. One publisher and one
// subscriber thread per endpoint at most.
class BrokerEndpoint {
public:
    virtual ~BrokerEndpoint() = default;

    virtual void publish(const RoutingKey& key, std::string body) = 0;
    virtual std::unique_ptr<Subscription> subscribe(const RoutingKey& key) = 0;
    virtual void close() = 0;
};

} // namespace timebroker
