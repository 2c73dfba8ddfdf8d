#pragma once

#include <cstdint>
#include <string>
#include <variant>

namespace timebroker {

enum class ValueType { Integer, Real, Boolean, Text };

// One signal sample. The type tag of a named signal is stable for its
// whole life; mixing tags on the same name is rejected at the boundaries
// (codec, set_input).
class Value {
public:
    Value() : v_(std::int64_t{0}) {}
    Value(std::int64_t i) : v_(i) {}
    Value(int i) : v_(static_cast<std::int64_t>(i)) {}
    Value(double r) : v_(r) {}
    Value(bool b) : v_(b) {}
    Value(std::string s) : v_(std::move(s)) {}
    Value(const char* s) : v_(std::string(s)) {}

    ValueType type() const { return static_cast<ValueType>(v_.index()); }

    std::int64_t as_integer() const { return std::get<std::int64_t>(v_); }
    double as_real() const { return std::get<double>(v_); }
    bool as_boolean() const { return std::get<bool>(v_); }
    const std::string& as_text() const { return std::get<std::string>(v_); }

    bool operator==(const Value& other) const = default;

private:
    std::variant<std::int64_t, double, bool, std::string> v_;
};

inline const char* to_string(ValueType t)
{
    switch (t) {
    case ValueType::Integer: return "integer";
    case ValueType::Real: return "real";
    case ValueType::Boolean: return "boolean";
    case ValueType::Text: return "text";
    }
    return "?";
}

} // namespace timebroker
