#pragma once

#include "timebroker/time.hpp"

namespace timebroker {

// A message is valid at `now` iff it is not from the future and not older
// than maxage. Both ends closed: a message is still valid at exactly
// timestamp + maxage, and a message stamped exactly at `now` counts.
constexpr bool is_valid(SimTime msg_ts, SimTime now, Duration maxage)
{
    return msg_ts <= now && msg_ts + maxage >= now;
}

} // namespace timebroker
