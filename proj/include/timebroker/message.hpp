#pragma once

#include "timebroker/time.hpp"
#include "timebroker/value.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace timebroker {

// A broker message. `timestamp` is the payload time (when the value was
// produced at the source); arrival time at the broker is a transport
// concern and never decides validity. Within one stream, seqno is unique
// and strictly increasing with timestamp.
struct TimedMessage {
    SimTime timestamp{};
    std::uint64_t seqno = 0;
    std::map<std::string, Value> values;

    bool operator==(const TimedMessage& other) const = default;
};

} // namespace timebroker
