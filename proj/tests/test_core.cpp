#include "timebroker/config.hpp"
#include "timebroker/message.hpp"
#include "timebroker/time.hpp"
#include "timebroker/validity.hpp"

#include <doctest.h>

#include <random>

using namespace timebroker;

TEST_CASE("time arithmetic is exact integer microseconds")
{
    CHECK(msec(1).micros == 1000);
    CHECK(sec(2).micros == 2000000);
    CHECK((at_msec(100) + msec(50)).micros == 150000);
    CHECK((at_msec(100) - at_msec(40)).micros == 60000);
    CHECK(at_msec(1) < at_msec(2));
    CHECK_THROWS_AS(usec(-1), std::invalid_argument);
    CHECK_THROWS_AS(at_msec(1) - at_msec(2), std::invalid_argument);
}

TEST_CASE("is_valid: initial value stays valid through the whole maxage window")
{
    // output held at ts=0 with maxage 300ms covers the first 300ms
    CHECK(is_valid(at_msec(0), at_msec(200), msec(300)));
    CHECK(is_valid(at_msec(0), at_msec(300), msec(300)));
    CHECK_FALSE(is_valid(at_msec(0), SimTime{300001}, msec(300)));
}

TEST_CASE("is_valid: zero-age boundary, message exactly at now")
{
    CHECK(is_valid(at_msec(0), at_msec(0), usec(0)));
    CHECK(is_valid(at_msec(5), at_msec(5), usec(0)));
    CHECK_FALSE(is_valid(at_msec(5), at_msec(6), usec(0)));
}

TEST_CASE("is_valid: future-stamped messages are never valid now")
{
    CHECK_FALSE(is_valid(at_msec(101), at_msec(100), sec(10)));
    CHECK_FALSE(is_valid(SimTime{100001}, at_msec(100), sec(10)));
}

TEST_CASE("is_valid matches an independent re-evaluation on random triples")
{
    // Oracle written as raw integer inequalities, no SimTime machinery.
    const auto oracle = [](std::int64_t ts, std::int64_t now, std::int64_t maxage) {
        if (ts > now) {
            return false;
        }
        return now - ts <= maxage;
    };

    std::mt19937_64 rng(42);
    std::uniform_int_distribution<std::int64_t> time_dist(0, 2'000'000);
    std::uniform_int_distribution<std::int64_t> age_dist(0, 500'000);
    for (int i = 0; i < 1000; ++i) {
        const std::int64_t ts = time_dist(rng);
        const std::int64_t now = time_dist(rng);
        const std::int64_t maxage = age_dist(rng);
        CAPTURE(ts);
        CAPTURE(now);
        CAPTURE(maxage);
        CHECK(is_valid(SimTime{ts}, SimTime{now}, Duration{maxage})
              == oracle(ts, now, maxage));
    }
}

TEST_CASE("is_valid is monotone in maxage")
{
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::int64_t> time_dist(0, 1'000'000);
    std::uniform_int_distribution<std::int64_t> age_dist(0, 300'000);
    for (int i = 0; i < 500; ++i) {
        const SimTime ts{time_dist(rng)};
        const SimTime now{time_dist(rng)};
        const std::int64_t big = age_dist(rng);
        std::uniform_int_distribution<std::int64_t> smaller(0, big);
        const std::int64_t small = smaller(rng);
        // shrinking maxage never turns false into true
        if (is_valid(ts, now, Duration{small})) {
            CHECK(is_valid(ts, now, Duration{big}));
        }
    }
}

TEST_CASE("the valid window is the closed interval [ts, ts+maxage]")
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::int64_t> time_dist(1, 1'000'000);
    std::uniform_int_distribution<std::int64_t> age_dist(0, 300'000);
    for (int i = 0; i < 200; ++i) {
        const std::int64_t ts = time_dist(rng);
        const std::int64_t maxage = age_dist(rng);
        CHECK(is_valid(SimTime{ts}, SimTime{ts}, Duration{maxage}));
        CHECK(is_valid(SimTime{ts}, SimTime{ts + maxage}, Duration{maxage}));
        CHECK_FALSE(is_valid(SimTime{ts}, SimTime{ts - 1}, Duration{maxage}));
        CHECK_FALSE(is_valid(SimTime{ts}, SimTime{ts + maxage + 1}, Duration{maxage}));
    }
}

TEST_CASE("BrokerConfig validation")
{
    BrokerConfig cfg;
    cfg.maxage = msec(300);
    CHECK_NOTHROW(cfg.validate());

    BrokerConfig bad_la = cfg;
    bad_la.lookahead = 0;
    CHECK_THROWS_AS(bad_la.validate(), ConfigError);

    BrokerConfig bad_cap = cfg;
    bad_cap.lookahead = 50;
    bad_cap.queue_capacity = 10;
    CHECK_THROWS_AS(bad_cap.validate(), ConfigError);

    BrokerConfig bad_timeout = cfg;
    bad_timeout.init_timeout = usec(0);
    CHECK_THROWS_AS(bad_timeout.validate(), ConfigError);
}

TEST_CASE("Value keeps its type tag and compares by content")
{
    CHECK(Value(std::int64_t{3}).type() == ValueType::Integer);
    CHECK(Value(3.0).type() == ValueType::Real);
    CHECK(Value(true).type() == ValueType::Boolean);
    CHECK(Value("x").type() == ValueType::Text);
    CHECK(Value(3.0) == Value(3.0));
    CHECK_FALSE(Value(3.0) == Value(std::int64_t{3}));
}
