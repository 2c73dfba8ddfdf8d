#pragma once

// Drives the library's queue + selector over an arrival schedule, step by
// step, producing the same record shape as the reference interpreter.

#include "reference.hpp"

#include "timebroker/queue.hpp"
#include "timebroker/select.hpp"

#include <vector>

namespace testdrive {

struct StepOutcome {
    std::int64_t now_us = 0;
    std::int64_t out_seqno = -1;
    std::size_t consumed_from_queue = 0;
    timebroker::StepStatus status = timebroker::StepStatus::NoValidData;
    std::size_t queue_size = 0;
    std::size_t retained_future = 0;
};

class SelectorDriver {
public:
    SelectorDriver(std::vector<reference::Msg> stream, timebroker::BrokerConfig cfg)
        : stream_(std::move(stream)), queue_(cfg.queue_capacity), selector_(cfg)
    {
    }

    StepOutcome step(std::int64_t now_us)
    {
        while (next_ < stream_.size() && stream_[next_].arrival_us <= now_us) {
            timebroker::TimedMessage msg;
            msg.timestamp = timebroker::SimTime{stream_[next_].ts_us};
            msg.seqno = stream_[next_].seqno;
            msg.values.emplace("v", timebroker::Value(static_cast<std::int64_t>(msg.seqno)));
            queue_.enqueue(std::move(msg));
            ++next_;
        }

        StepOutcome out;
        out.now_us = now_us;
        out.status = selector_.select(queue_, state_, timebroker::SimTime{now_us});
        out.out_seqno =
            state_.current ? static_cast<std::int64_t>(state_.current->seqno) : -1;
        out.consumed_from_queue = selector_.last().queue_consumed;
        out.queue_size = queue_.size();
        out.retained_future = selector_.retained_future_count();
        return out;
    }

    std::vector<StepOutcome> run(const std::vector<std::int64_t>& step_times)
    {
        std::vector<StepOutcome> out;
        out.reserve(step_times.size());
        for (std::int64_t now : step_times) {
            out.push_back(step(now));
        }
        return out;
    }

    const timebroker::IncomingQueue& queue() const { return queue_; }

private:
    std::vector<reference::Msg> stream_;
    std::size_t next_ = 0;
    timebroker::IncomingQueue queue_;
    timebroker::OutputSelector selector_;
    timebroker::OutputState state_;
};

} // namespace testdrive
