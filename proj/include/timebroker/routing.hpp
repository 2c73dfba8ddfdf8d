#pragma once

#include "timebroker/errors.hpp"

#include <string>

namespace timebroker {

// Dot-separated routing key, e.g. "fmu.ur5e.data". Every segment must be
// non-empty.
class RoutingKey {
public:
    RoutingKey() = default;

    explicit RoutingKey(std::string text) : text_(std::move(text))
    {
        if (text_.empty()) {
            throw ConfigError("routing key must be non-empty");
        }
        std::size_t seg_len = 0;
        for (char c : text_) {
            if (c == '.') {
                if (seg_len == 0) {
                    throw ConfigError("routing key has an empty segment: " + text_);
                }
                seg_len = 0;
            } else {
                ++seg_len;
            }
        }
        if (seg_len == 0) {
            throw ConfigError("routing key has an empty segment: " + text_);
        }
    }

    const std::string& str() const { return text_; }

    bool operator==(const RoutingKey&) const = default;
    auto operator<=>(const RoutingKey&) const = default;

private:
    std::string text_;
};

} // namespace timebroker
