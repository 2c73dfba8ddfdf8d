#pragma once

#include "timebroker/errors.hpp"
#include "timebroker/time.hpp"

#include <cstddef>
#include <cstdint>

namespace timebroker {

// V1: hold the current output whenever it is within maxage, even if newer
//     data is queued.
// V2: always advance to the newest queued message with timestamp <= step
//     time; maxage matters only when there is no new input.
enum class Semantics { V1, V2 };

enum class Threading { On, Off };

enum class StepStatus {
    Ok,          // a new message was adopted as output
    StaleHold,   // held the current output within maxage
    NoValidData, // nothing valid to output this step
    Timeout,     // initialization gave up waiting
    Overflowed,  // the incoming queue evicted data since the last report
};

struct BrokerConfig {
    Duration maxage{};
    std::uint32_t lookahead = 1;
    Semantics semantics = Semantics::V2;
    Threading threading = Threading::Off;
    std::size_t queue_capacity = 10000;
    Duration init_timeout = sec(5);

    void validate() const
    {
        if (lookahead < 1) {
            throw ConfigError("lookahead must be >= 1");
        }
        if (queue_capacity < lookahead) {
            throw ConfigError("queue_capacity must be >= lookahead");
        }
        if (init_timeout.micros <= 0) {
            throw ConfigError("init_timeout must be > 0");
        }
        if (maxage.micros < 0) {
            throw ConfigError("maxage must be non-negative");
        }
    }
};

inline const char* to_string(StepStatus s)
{
    switch (s) {
    case StepStatus::Ok: return "ok";
    case StepStatus::StaleHold: return "stale_hold";
    case StepStatus::NoValidData: return "no_valid_data";
    case StepStatus::Timeout: return "timeout";
    case StepStatus::Overflowed: return "overflowed";
    }
    return "?";
}

} // namespace timebroker
