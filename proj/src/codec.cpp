#include "timebroker/codec.hpp"

#include "timebroker/errors.hpp"

#include <json.hpp>

namespace timebroker {

using nlohmann::json;

std::string encode(const TimedMessage& msg)
{
    json values = json::object();
    for (const auto& [name, v] : msg.values) {
        switch (v.type()) {
        case ValueType::Integer: values[name] = v.as_integer(); break;
        case ValueType::Real: values[name] = v.as_real(); break;
        case ValueType::Boolean: values[name] = v.as_boolean(); break;
        case ValueType::Text: values[name] = v.as_text(); break;
        }
    }
    json body = {
        {"time_us", msg.timestamp.micros},
        {"seqno", msg.seqno},
        {"values", std::move(values)},
    };
    // nlohmann::json keeps object keys sorted, so dump() is canonical.
    return body.dump();
}

TimedMessage decode(const std::string& body)
{
    json j = json::parse(body, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
        throw CodecError("body is not a JSON object");
    }

    auto time_it = j.find("time_us");
    if (time_it == j.end()) {
        throw CodecError("body missing field 'time_us'");
    }
    if (!time_it->is_number_integer() && !time_it->is_number_unsigned()) {
        throw CodecError("field 'time_us' must be an integer");
    }
    auto seq_it = j.find("seqno");
    if (seq_it == j.end()) {
        throw CodecError("body missing field 'seqno'");
    }
    if (!seq_it->is_number_integer() && !seq_it->is_number_unsigned()) {
        throw CodecError("field 'seqno' must be an integer");
    }
    auto val_it = j.find("values");
    if (val_it == j.end()) {
        throw CodecError("body missing field 'values'");
    }
    if (!val_it->is_object()) {
        throw CodecError("field 'values' must be an object");
    }

    TimedMessage msg;
    const std::int64_t t = time_it->get<std::int64_t>();
    if (t < 0) {
        throw CodecError("field 'time_us' must be non-negative");
    }
    msg.timestamp = SimTime{t};
    if (seq_it->is_number_integer() && seq_it->get<std::int64_t>() < 0) {
        throw CodecError("field 'seqno' must be non-negative");
    }
    msg.seqno = seq_it->get<std::uint64_t>();

    for (const auto& [name, v] : val_it->items()) {
        if (v.is_boolean()) {
            msg.values.emplace(name, Value(v.get<bool>()));
        } else if (v.is_number_integer() || v.is_number_unsigned()) {
            msg.values.emplace(name, Value(v.get<std::int64_t>()));
        } else if (v.is_number_float()) {
            msg.values.emplace(name, Value(v.get<double>()));
        } else if (v.is_string()) {
            msg.values.emplace(name, Value(v.get<std::string>()));
        } else {
            throw CodecError("value '" + name + "' has an unsupported type");
        }
    }
    if (msg.values.empty()) {
        throw CodecError("field 'values' must be non-empty");
    }
    return msg;
}

} // namespace timebroker
