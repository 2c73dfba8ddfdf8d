#pragma once

#include "timebroker/errors.hpp"
#include "timebroker/message.hpp"

#include <cstddef>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>

namespace timebroker {

enum class EnqueueOutcome { Stored, StoredWithEviction };

// Bounded FIFO of incoming messages. One producer (consumer thread or the
// step call itself) and one consumer (the step call); enqueue may run
// concurrently with the take operations. Overflow drops the oldest entry
// and counts it, keeping the newest data.
class IncomingQueue {
public:
    explicit IncomingQueue(std::size_t capacity);

    // Appends a message. Sequence numbers must strictly increase across
    // the life of the queue; a regression is rejected with ProtocolError
    // and the queue is left untouched.
    EnqueueOutcome enqueue(TimedMessage msg);

    // Takes the oldest message, if any.
    std::optional<TimedMessage> take_any();

    // Takes the oldest message only if its timestamp is <= bound; a
    // future-stamped front stays queued untouched. Atomic with respect to
    // a concurrent enqueue/eviction.
    std::optional<TimedMessage> take_if_at_or_before(SimTime bound);

    std::size_t size() const;
    std::size_t capacity() const { return capacity_; }
    std::uint64_t dropped_count() const;

    // Reads and clears the eviction flag set by any overflow since the
    // previous call.
    bool overflowed_since_last_check();

private:
    mutable std::mutex mu_;
    std::deque<TimedMessage> buf_;
    std::size_t capacity_;
    std::uint64_t dropped_ = 0;
    bool overflow_flag_ = false;
    std::optional<std::uint64_t> last_seqno_;
};

// The currently held output. Once set, it is only ever replaced by a
// message with a strictly greater sequence number.
struct OutputState {
    std::optional<TimedMessage> current;
    SimTime last_change_step{};

    void adopt(TimedMessage msg, SimTime step_time)
    {
        if (current && msg.seqno <= current->seqno) {
            throw ProtocolError("output seqno must strictly increase (held "
                                + std::to_string(current->seqno) + ", got "
                                + std::to_string(msg.seqno) + ")");
        }
        current = std::move(msg);
        last_change_step = step_time;
    }
};

} // namespace timebroker
