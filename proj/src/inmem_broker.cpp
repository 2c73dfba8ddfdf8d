#include "timebroker/inmem_broker.hpp"

#include "timebroker/errors.hpp"

#include <algorithm>

namespace timebroker {

class InMemoryBroker::SubscriptionImpl final : public Subscription {
public:
    SubscriptionImpl(std::shared_ptr<InMemoryBroker> hub, std::shared_ptr<SubState> state)
        : hub_(std::move(hub)), state_(std::move(state))
    {
    }

    std::optional<WireMessage> poll(Duration wait) override
    {
        return hub_->poll_(state_, wait);
    }

    void close() override
    {
        std::lock_guard lock(hub_->mu_);
        state_->closed = true;
    }

private:
    std::shared_ptr<InMemoryBroker> hub_;
    std::shared_ptr<SubState> state_;
};

class InMemoryBroker::EndpointImpl final : public BrokerEndpoint {
public:
    explicit EndpointImpl(std::shared_ptr<InMemoryBroker> hub) : hub_(std::move(hub)) {}

    void publish(const RoutingKey& key, std::string body) override
    {
        hub_->publish_(key, std::move(body));
    }

    std::unique_ptr<Subscription> subscribe(const RoutingKey& key) override
    {
        return hub_->subscribe_(key);
    }

    void close() override { hub_->close(); }

private:
    std::shared_ptr<InMemoryBroker> hub_;
};

InMemoryBroker::InMemoryBroker(std::shared_ptr<Clock> clock, Duration latency,
                               Duration jitter, std::uint64_t seed)
    : clock_(std::move(clock)), latency_(latency), jitter_(jitter), rng_(seed)
{
    if (!clock_) {
        throw ConfigError("broker requires a clock");
    }
    wall_ = dynamic_cast<const WallClock*>(clock_.get());
}

std::shared_ptr<InMemoryBroker> InMemoryBroker::create(std::shared_ptr<Clock> clock,
                                                       Duration latency, Duration jitter,
                                                       std::uint64_t seed)
{
    return std::shared_ptr<InMemoryBroker>(
        new InMemoryBroker(std::move(clock), latency, jitter, seed));
}

std::shared_ptr<BrokerEndpoint> InMemoryBroker::endpoint()
{
    return std::make_shared<EndpointImpl>(shared_from_this());
}

void InMemoryBroker::close()
{
    std::lock_guard lock(mu_);
    closed_ = true;
    cv_.notify_all();
}

void InMemoryBroker::publish_(const RoutingKey& key, std::string body)
{
    std::lock_guard lock(mu_);
    if (closed_) {
        throw TransportError("publish after close");
    }

    SimTime base = clock_->now() + latency_;
    for (auto it = subs_.begin(); it != subs_.end();) {
        auto sub = it->lock();
        if (!sub) {
            it = subs_.erase(it);
            continue;
        }
        if (sub->key == key && !sub->closed) {
            SimTime visible = base;
            if (!clock_->is_virtual() && jitter_.micros > 0) {
                std::uniform_int_distribution<std::int64_t> dist(-jitter_.micros,
                                                                 jitter_.micros);
                std::int64_t t = visible.micros + dist(rng_);
                visible = SimTime{std::max<std::int64_t>(t, 0)};
            }
            // FIFO per key: visibility never regresses behind an earlier message.
            visible = std::max(visible, sub->last_visible);
            sub->last_visible = visible;
            sub->entries.push_back(Entry{visible, body});
        }
        ++it;
    }
    cv_.notify_all();
}

std::unique_ptr<Subscription> InMemoryBroker::subscribe_(const RoutingKey& key)
{
    std::lock_guard lock(mu_);
    if (closed_) {
        throw TransportError("subscribe after close");
    }
    auto state = std::make_shared<SubState>();
    state->key = key;
    subs_.push_back(state);
    return std::make_unique<SubscriptionImpl>(shared_from_this(), std::move(state));
}

std::optional<WireMessage> InMemoryBroker::poll_(const std::shared_ptr<SubState>& sub,
                                                 Duration wait)
{
    std::unique_lock lock(mu_);

    auto visible_front = [&]() -> bool {
        return !sub->entries.empty() && sub->entries.front().visible_at <= clock_->now();
    };

    if (clock_->is_virtual()) {
        // Virtual time never advances while we wait, so there is nothing to
        // block on.
        if (!visible_front()) {
            return std::nullopt;
        }
        WireMessage msg{sub->key, std::move(sub->entries.front().body)};
        sub->entries.pop_front();
        return msg;
    }

    const auto deadline = wall_->to_steady(clock_->now() + wait);
    while (!visible_front()) {
        if (closed_ || sub->closed) {
            return std::nullopt;
        }
        auto wake = deadline;
        if (!sub->entries.empty()) {
            wake = std::min(wake, wall_->to_steady(sub->entries.front().visible_at));
        }
        if (cv_.wait_until(lock, wake) == std::cv_status::timeout
            && std::chrono::steady_clock::now() >= deadline && !visible_front()) {
            return std::nullopt;
        }
    }
    WireMessage msg{sub->key, std::move(sub->entries.front().body)};
    sub->entries.pop_front();
    return msg;
}

std::shared_ptr<InMemoryBroker> inmem_broker(std::shared_ptr<Clock> clock, Duration latency,
                                             Duration jitter, std::uint64_t seed)
{
    return InMemoryBroker::create(std::move(clock), latency, jitter, seed);
}

} // namespace timebroker
