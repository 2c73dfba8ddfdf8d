#include "timebroker/replay.hpp"

#include "timebroker/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>

namespace timebroker {

namespace {

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

std::int64_t parse_int(const std::string& s, std::size_t row, const std::string& what)
{
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw TraceError("row " + std::to_string(row) + ": bad " + what + " '" + s + "'");
    }
    return v;
}

double parse_real(const std::string& s, std::size_t row)
{
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw TraceError("row " + std::to_string(row) + ": bad real '" + s + "'");
    }
}

std::string format_real(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

ReplaySource load_trace(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw TraceError("empty trace: missing header");
    }
    const auto header = split_csv(line);
    if (header.empty() || header[0] != "time_us") {
        throw TraceError("first header column must be 'time_us'");
    }

    struct Column {
        std::string name;
        ValueType type;
    };
    std::vector<Column> columns;
    for (std::size_t i = 1; i < header.size(); ++i) {
        const std::string& h = header[i];
        const auto colon = h.rfind(':');
        if (colon == std::string::npos || colon + 2 != h.size() || colon == 0) {
            throw TraceError("header column '" + h + "' lacks a :r/:i/:b/:s type suffix");
        }
        ValueType t;
        switch (h[colon + 1]) {
        case 'r': t = ValueType::Real; break;
        case 'i': t = ValueType::Integer; break;
        case 'b': t = ValueType::Boolean; break;
        case 's': t = ValueType::Text; break;
        default:
            throw TraceError("header column '" + h + "' has unknown type suffix");
        }
        columns.push_back(Column{h.substr(0, colon), t});
    }
    if (columns.empty()) {
        throw TraceError("trace has no value columns");
    }

    ReplaySource src;
    Duration min_delta{std::numeric_limits<std::int64_t>::max()};
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv(line);
        if (fields.size() != columns.size() + 1) {
            throw TraceError("row " + std::to_string(row_no) + ": has "
                             + std::to_string(fields.size()) + " fields, header names "
                             + std::to_string(columns.size() + 1));
        }
        TimedMessage msg;
        const std::int64_t t = parse_int(fields[0], row_no, "time_us");
        if (t < 0) {
            throw TraceError("row " + std::to_string(row_no) + ": negative time_us");
        }
        msg.timestamp = SimTime{t};
        msg.seqno = src.messages.size();
        for (std::size_t i = 0; i < columns.size(); ++i) {
            const std::string& f = fields[i + 1];
            switch (columns[i].type) {
            case ValueType::Integer:
                msg.values.emplace(columns[i].name, Value(parse_int(f, row_no, "integer")));
                break;
            case ValueType::Real:
                msg.values.emplace(columns[i].name, Value(parse_real(f, row_no)));
                break;
            case ValueType::Boolean:
                if (f == "true" || f == "1") {
                    msg.values.emplace(columns[i].name, Value(true));
                } else if (f == "false" || f == "0") {
                    msg.values.emplace(columns[i].name, Value(false));
                } else {
                    throw TraceError("row " + std::to_string(row_no) + ": bad boolean '" + f
                                     + "'");
                }
                break;
            case ValueType::Text:
                msg.values.emplace(columns[i].name, Value(f));
                break;
            }
        }
        if (!src.messages.empty()) {
            const SimTime prev = src.messages.back().timestamp;
            if (msg.timestamp <= prev) {
                throw TraceError("row " + std::to_string(row_no)
                                 + ": timestamps must be strictly increasing");
            }
            min_delta = std::min(min_delta, msg.timestamp - prev);
        }
        src.messages.push_back(std::move(msg));
    }
    src.wire_period =
        (src.messages.size() >= 2) ? min_delta : msec(2);
    return src;
}

ReplaySource load_trace(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw TraceError("cannot open trace file: " + path.string());
    }
    return load_trace(in);
}

void write_trace(std::ostream& out, const ReplaySource& src)
{
    if (src.messages.empty()) {
        throw TraceError("cannot write an empty trace");
    }
    out << "time_us";
    for (const auto& [name, v] : src.messages.front().values) {
        char tag = '?';
        switch (v.type()) {
        case ValueType::Real: tag = 'r'; break;
        case ValueType::Integer: tag = 'i'; break;
        case ValueType::Boolean: tag = 'b'; break;
        case ValueType::Text: tag = 's'; break;
        }
        out << ',' << name << ':' << tag;
    }
    out << '\n';
    for (const auto& msg : src.messages) {
        out << msg.timestamp.micros;
        for (const auto& [name, v] : msg.values) {
            out << ',';
            switch (v.type()) {
            case ValueType::Real: out << format_real(v.as_real()); break;
            case ValueType::Integer: out << v.as_integer(); break;
            case ValueType::Boolean: out << (v.as_boolean() ? "true" : "false"); break;
            case ValueType::Text: out << v.as_text(); break;
            }
        }
        out << '\n';
    }
}

void write_trace(const std::filesystem::path& path, const ReplaySource& src)
{
    std::ofstream out(path);
    if (!out) {
        throw TraceError("cannot write trace file: " + path.string());
    }
    write_trace(out, src);
}

ReplaySource clean_gaps(ReplaySource src, Duration period)
{
    if (period.micros <= 0) {
        throw ConfigError("clean_gaps period must be > 0");
    }
    for (std::size_t i = 0; i < src.messages.size(); ++i) {
        src.messages[i].timestamp = SimTime{static_cast<std::int64_t>(i) * period.micros};
    }
    src.wire_period = period;
    return src;
}

ReplaySource synth_ur(std::size_t n, std::size_t n_real, std::size_t n_int, Duration period,
                      GapSpec gaps, std::uint64_t seed)
{
    if (n == 0 || n_real == 0 || n_int == 0) {
        throw ConfigError("synth_ur counts must be > 0");
    }
    if (period.micros <= 0) {
        throw ConfigError("synth_ur period must be > 0");
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> real_dist(-3.2, 3.2);
    std::uniform_int_distribution<std::int64_t> int_dist(0, 1000);

    ReplaySource src;
    src.wire_period = period;
    src.messages.reserve(n);
    SimTime t{};
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            const bool gap_here = gaps.every > 0 && (i % gaps.every) == 0;
            t = t + (gap_here ? gaps.gap : period);
        }
        TimedMessage msg;
        msg.timestamp = t;
        msg.seqno = i;
        for (std::size_t r = 0; r < n_real; ++r) {
            char name[24];
            std::snprintf(name, sizeof name, "f%03zu", r);
            // The first real carries the payload time in seconds, like the
            // recorded robot data.
            const double v = (r == 0) ? static_cast<double>(t.micros) / 1e6 : real_dist(rng);
            msg.values.emplace(name, Value(v));
        }
        for (std::size_t k = 0; k < n_int; ++k) {
            char name[24];
            std::snprintf(name, sizeof name, "i%03zu", k);
            msg.values.emplace(name, Value(int_dist(rng)));
        }
        src.messages.push_back(std::move(msg));
    }
    return src;
}

ReplaySource synth_approach(std::size_t n, Duration period, double start_distance_m,
                            double speed_m_per_s)
{
    if (n == 0 || period.micros <= 0) {
        throw ConfigError("synth_approach needs n > 0 and period > 0");
    }
    ReplaySource src;
    src.wire_period = period;
    src.messages.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        TimedMessage msg;
        msg.timestamp = SimTime{static_cast<std::int64_t>(i) * period.micros};
        msg.seqno = i;
        const double t_s = static_cast<double>(msg.timestamp.micros) / 1e6;
        msg.values.emplace("robot_x", Value(start_distance_m - speed_m_per_s * t_s));
        msg.values.emplace("robot_y", Value(0.0));
        msg.values.emplace("obstacle_x", Value(0.0));
        msg.values.emplace("obstacle_y", Value(0.0));
        src.messages.push_back(std::move(msg));
    }
    return src;
}

} // namespace timebroker
