#pragma once

#include <stdexcept>
#include <string>

namespace timebroker {

// Out-of-order sequence numbers, duplicate adoption, and similar stream
// contract violations.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed wire bodies and unsupported value encodings.
class CodecError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid broker or experiment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Transport-level failures. Subclasses distinguish the phase that failed.
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConnectError : public TransportError {
public:
    using TransportError::TransportError;
};

class AuthError : public TransportError {
public:
    using TransportError::TransportError;
};

class DeclareError : public TransportError {
public:
    using TransportError::TransportError;
};

// Lifecycle misuse (stepping before initialization, non-contiguous step times).
class LifecycleError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Trace file problems: unsorted timestamps, arity mismatches, bad headers.
class TraceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace timebroker
