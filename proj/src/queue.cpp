#include "timebroker/queue.hpp"

namespace timebroker {

IncomingQueue::IncomingQueue(std::size_t capacity) : capacity_(capacity)
{
    if (capacity_ < 1) {
        throw ConfigError("queue capacity must be >= 1");
    }
}

EnqueueOutcome IncomingQueue::enqueue(TimedMessage msg)
{
    std::lock_guard lock(mu_);
    if (last_seqno_ && msg.seqno <= *last_seqno_) {
        throw ProtocolError("out-of-order seqno " + std::to_string(msg.seqno)
                            + " after " + std::to_string(*last_seqno_));
    }
    last_seqno_ = msg.seqno;

    bool evicted = false;
    if (buf_.size() == capacity_) {
        buf_.pop_front();
        ++dropped_;
        overflow_flag_ = true;
        evicted = true;
    }
    buf_.push_back(std::move(msg));
    return evicted ? EnqueueOutcome::StoredWithEviction : EnqueueOutcome::Stored;
}

std::optional<TimedMessage> IncomingQueue::take_any()
{
    std::lock_guard lock(mu_);
    if (buf_.empty()) {
        return std::nullopt;
    }
    TimedMessage msg = std::move(buf_.front());
    buf_.pop_front();
    return msg;
}

std::optional<TimedMessage> IncomingQueue::take_if_at_or_before(SimTime bound)
{
    std::lock_guard lock(mu_);
    if (buf_.empty() || buf_.front().timestamp > bound) {
        return std::nullopt;
    }
    TimedMessage msg = std::move(buf_.front());
    buf_.pop_front();
    return msg;
}

std::size_t IncomingQueue::size() const
{
    std::lock_guard lock(mu_);
    return buf_.size();
}

std::uint64_t IncomingQueue::dropped_count() const
{
    std::lock_guard lock(mu_);
    return dropped_;
}

bool IncomingQueue::overflowed_since_last_check()
{
    std::lock_guard lock(mu_);
    bool flag = overflow_flag_;
    overflow_flag_ = false;
    return flag;
}

} // namespace timebroker
