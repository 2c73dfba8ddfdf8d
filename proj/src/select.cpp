#include "timebroker/select.hpp"

#include "timebroker/validity.hpp"

#include <algorithm>

namespace timebroker {

OutputSelector::OutputSelector(BrokerConfig cfg) : cfg_(cfg)
{
    cfg_.validate();
}

StepStatus OutputSelector::select(MessageSource& src, OutputState& state, SimTime now)
{
    return cfg_.semantics == Semantics::V1 ? select_v1_(src, state, now)
                                           : select_v2_(src, state, now);
}

StepStatus OutputSelector::select(IncomingQueue& q, OutputState& state, SimTime now)
{
    QueueSource src(q);
    return select(src, state, now);
}

StepStatus OutputSelector::select_v1_(MessageSource& src, OutputState& state, SimTime now)
{
    last_ = {};

    // The hold comes first: while the current output is within maxage the
    // step consumes nothing at all.
    if (state.current && is_valid(state.current->timestamp, now, cfg_.maxage)) {
        return StepStatus::StaleHold;
    }

    while (last_.examined < cfg_.lookahead) {
        // The holdover buffer carries the oldest sequence numbers, so it is
        // scanned before the queue. Timestamps ascend across holdover and
        // queue together: a future-stamped holdover front means nothing
        // further can be valid at `now`.
        if (!holdover_.empty()) {
            if (holdover_.front().timestamp > now) {
                break;
            }
            TimedMessage msg = std::move(holdover_.front());
            holdover_.pop_front();
            ++last_.examined;
            if (is_valid(msg.timestamp, now, cfg_.maxage)) {
                state.adopt(std::move(msg), now);
                return StepStatus::Ok;
            }
            continue; // stale: discarded
        }

        auto msg = src.take_any();
        if (!msg) {
            break;
        }
        ++last_.examined;
        ++last_.queue_consumed;
        if (is_valid(msg->timestamp, now, cfg_.maxage)) {
            state.adopt(std::move(*msg), now);
            return StepStatus::Ok;
        }
        if (msg->timestamp > now) {
            // Not valid yet: parked in the processing buffer until its
            // timestamp comes around.
            holdover_.push_back(std::move(*msg));
        }
        // else stale: discarded
    }

    return StepStatus::NoValidData;
}

StepStatus OutputSelector::select_v2_(MessageSource& src, OutputState& state, SimTime now)
{
    last_ = {};

    std::optional<TimedMessage> candidate;
    while (last_.examined < cfg_.lookahead) {
        auto msg = src.take_if_at_or_before(now);
        if (!msg) {
            break;
        }
        ++last_.examined;
        ++last_.queue_consumed;
        candidate = std::move(msg); // earlier candidates are superseded
    }

    if (candidate) {
        state.adopt(std::move(*candidate), now);
        return StepStatus::Ok;
    }
    if (state.current && is_valid(state.current->timestamp, now, cfg_.maxage)) {
        return StepStatus::StaleHold;
    }
    return StepStatus::NoValidData;
}

bool lookahead_bound_check(std::span<const StepConsumption> trace, std::size_t lookahead)
{
    return std::all_of(trace.begin(), trace.end(), [lookahead](const StepConsumption& s) {
        return s.consumed <= lookahead;
    });
}

} // namespace timebroker
