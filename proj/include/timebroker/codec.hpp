#pragma once

#include "timebroker/message.hpp"

#include <string>

namespace timebroker {

// Wire body: UTF-8 JSON object
//   {"seqno": <int>, "time_us": <int>, "values": {<name>: <value>, ...}}
// with keys emitted in sorted order, so encoding is deterministic down to
// the byte. decode tolerates unknown extra keys.

std::string encode(const TimedMessage& msg);
TimedMessage decode(const std::string& body);

} // namespace timebroker
