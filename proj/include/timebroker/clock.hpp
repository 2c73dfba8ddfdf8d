#pragma once

#include "timebroker/errors.hpp"
#include "timebroker/time.hpp"

#include <atomic>
#include <chrono>

namespace timebroker {

// Time source for transports and the harness. The virtual clock makes
// behavioral runs deterministic: it only moves when the schedule advances
// it. The wall clock is for performance experiments.
class Clock {
public:
    virtual ~Clock() = default;
    virtual SimTime now() const = 0;
    virtual bool is_virtual() const = 0;
};

class VirtualClock final : public Clock {
public:
    SimTime now() const override { return SimTime{now_.load(std::memory_order_acquire)}; }
    bool is_virtual() const override { return true; }

    void advance_to(SimTime t)
    {
        if (t.micros < now_.load(std::memory_order_relaxed)) {
            throw LifecycleError("virtual clock cannot move backwards");
        }
        now_.store(t.micros, std::memory_order_release);
    }

private:
    std::atomic<std::int64_t> now_{0};
};

class WallClock final : public Clock {
public:
    using steady = std::chrono::steady_clock;

    WallClock() : epoch_(steady::now()) {}

    SimTime now() const override
    {
        auto us = std::chrono::duration_cast<std::chrono::microseconds>(steady::now() - epoch_);
        return SimTime{us.count()};
    }

    bool is_virtual() const override { return false; }

    steady::time_point to_steady(SimTime t) const
    {
        return epoch_ + std::chrono::microseconds(t.micros);
    }

private:
    steady::time_point epoch_;
};

} // namespace timebroker
