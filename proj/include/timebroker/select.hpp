#pragma once

#include "timebroker/config.hpp"
#include "timebroker/queue.hpp"
#include "timebroker/time.hpp"

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace timebroker {

// Where a selection pulls messages from. The incoming queue is the normal
// backing; the unthreaded stepper substitutes a source that pulls straight
// off the transport so nothing lingers in the queue at step exit.
class MessageSource {
public:
    virtual ~MessageSource() = default;

    // Takes the next message only if stamped at or before `bound`;
    // otherwise it stays where it is.
    virtual std::optional<TimedMessage> take_if_at_or_before(SimTime bound) = 0;

    // Takes the next message unconditionally.
    virtual std::optional<TimedMessage> take_any() = 0;
};

class QueueSource final : public MessageSource {
public:
    explicit QueueSource(IncomingQueue& q) : q_(q) {}

    std::optional<TimedMessage> take_if_at_or_before(SimTime bound) override
    {
        return q_.take_if_at_or_before(bound);
    }

    std::optional<TimedMessage> take_any() override { return q_.take_any(); }

private:
    IncomingQueue& q_;
};

struct SelectionStats {
    std::size_t examined = 0;       // messages taken this call, any origin
    std::size_t queue_consumed = 0; // messages taken from the source this call
};

// Output selection for both semantics. The V1 path keeps the historical
// processing buffer for future-stamped messages it has pulled off the
// queue; V2 never pulls a future-stamped message in the first place, so
// that buffer stays empty by construction.
class OutputSelector {
public:
    explicit OutputSelector(BrokerConfig cfg);

    StepStatus select(MessageSource& src, OutputState& state, SimTime now);
    StepStatus select(IncomingQueue& q, OutputState& state, SimTime now);

    const SelectionStats& last() const { return last_; }

    // Messages held outside the incoming queue awaiting their timestamp.
    // Nonzero only under V1.
    std::size_t retained_future_count() const { return holdover_.size(); }

private:
    StepStatus select_v1_(MessageSource& src, OutputState& state, SimTime now);
    StepStatus select_v2_(MessageSource& src, OutputState& state, SimTime now);

    BrokerConfig cfg_;
    std::deque<TimedMessage> holdover_;
    SelectionStats last_{};
};

struct StepConsumption {
    SimTime step{};
    std::size_t consumed = 0;
};

// True iff no step in the trace consumed more than `lookahead` messages.
bool lookahead_bound_check(std::span<const StepConsumption> trace, std::size_t lookahead);

} // namespace timebroker
