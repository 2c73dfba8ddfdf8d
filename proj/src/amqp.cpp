#include "timebroker/amqp.hpp"

#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstring>
#include <thread>

namespace timebroker::amqp {

AmqpUri parse_uri(const std::string& uri)
{
    constexpr const char* kScheme = "amqp://";
    if (uri.rfind(kScheme, 0) != 0) {
        throw ConfigError("AMQP URI must start with amqp://");
    }
    AmqpUri out;
    std::string rest = uri.substr(std::strlen(kScheme));

    const auto slash = rest.find('/');
    if (slash != std::string::npos) {
        out.vhost = rest.substr(slash + 1);
        if (out.vhost.empty()) {
            out.vhost = "/";
        }
        rest.erase(slash);
    }

    const auto at = rest.find('@');
    if (at != std::string::npos) {
        std::string creds = rest.substr(0, at);
        rest.erase(0, at + 1);
        const auto colon = creds.find(':');
        if (colon == std::string::npos) {
            out.user = creds;
        } else {
            out.user = creds.substr(0, colon);
            out.password = creds.substr(colon + 1);
        }
    }

    const auto colon = rest.find(':');
    if (colon != std::string::npos) {
        const std::string port_s = rest.substr(colon + 1);
        std::uint16_t port = 0;
        auto [ptr, ec] = std::from_chars(port_s.data(), port_s.data() + port_s.size(), port);
        if (ec != std::errc{} || ptr != port_s.data() + port_s.size()) {
            throw ConfigError("bad AMQP port '" + port_s + "'");
        }
        out.port = port;
        rest.erase(colon);
    }
    if (!rest.empty()) {
        out.host = rest;
    }
    return out;
}

void ByteWriter::u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }

void ByteWriter::u16(std::uint16_t v)
{
    u8(static_cast<std::uint8_t>(v >> 8));
    u8(static_cast<std::uint8_t>(v));
}

void ByteWriter::u32(std::uint32_t v)
{
    u16(static_cast<std::uint16_t>(v >> 16));
    u16(static_cast<std::uint16_t>(v));
}

void ByteWriter::u64(std::uint64_t v)
{
    u32(static_cast<std::uint32_t>(v >> 32));
    u32(static_cast<std::uint32_t>(v));
}

void ByteWriter::shortstr(const std::string& s)
{
    if (s.size() > 255) {
        throw ConfigError("AMQP shortstr longer than 255 bytes");
    }
    u8(static_cast<std::uint8_t>(s.size()));
    buf_ += s;
}

void ByteWriter::longstr(const std::string& s)
{
    u32(static_cast<std::uint32_t>(s.size()));
    buf_ += s;
}

void ByteWriter::empty_table() { u32(0); }

void ByteReader::need_(std::size_t n) const
{
    if (pos_ + n > data_.size()) {
        throw TransportError("truncated AMQP payload");
    }
}

std::uint8_t ByteReader::u8()
{
    need_(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
}

std::uint16_t ByteReader::u16()
{
    std::uint16_t hi = u8();
    return static_cast<std::uint16_t>((hi << 8) | u8());
}

std::uint32_t ByteReader::u32()
{
    std::uint32_t hi = u16();
    return (hi << 16) | u16();
}

std::uint64_t ByteReader::u64()
{
    std::uint64_t hi = u32();
    return (hi << 32) | u32();
}

std::string ByteReader::shortstr()
{
    const std::size_t n = u8();
    need_(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
}

std::string ByteReader::longstr()
{
    const std::size_t n = u32();
    need_(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
}

void ByteReader::skip_table()
{
    const std::size_t n = u32();
    need_(n);
    pos_ += n;
}

std::string encode_frame(const Frame& frame)
{
    ByteWriter w;
    w.u8(frame.type);
    w.u16(frame.channel);
    w.u32(static_cast<std::uint32_t>(frame.payload.size()));
    std::string out = w.take();
    out += frame.payload;
    out.push_back(static_cast<char>(kFrameEnd));
    return out;
}

namespace {

// connection / channel / exchange / queue / basic class and method ids
constexpr std::uint16_t kClassConnection = 10;
constexpr std::uint16_t kClassChannel = 20;
constexpr std::uint16_t kClassExchange = 40;
constexpr std::uint16_t kClassQueue = 50;
constexpr std::uint16_t kClassBasic = 60;

constexpr std::uint16_t kConnStart = 10, kConnStartOk = 11, kConnTune = 30, kConnTuneOk = 31,
                        kConnOpen = 40, kConnOpenOk = 41, kConnClose = 50, kConnCloseOk = 51;
constexpr std::uint16_t kChanOpen = 10, kChanOpenOk = 11, kChanClose = 40, kChanCloseOk = 41;
constexpr std::uint16_t kExchDeclare = 10, kExchDeclareOk = 11;
constexpr std::uint16_t kQueueDeclare = 10, kQueueDeclareOk = 11, kQueueBind = 20,
                        kQueueBindOk = 21;
constexpr std::uint16_t kBasicConsume = 20, kBasicConsumeOk = 21, kBasicPublish = 40,
                        kBasicDeliver = 60, kBasicAck = 80;

class TcpSocket {
public:
    TcpSocket() = default;
    ~TcpSocket() { close_fd(); }

    TcpSocket(const TcpSocket&) = delete;
    TcpSocket& operator=(const TcpSocket&) = delete;

    void connect_to(const std::string& host, std::uint16_t port)
    {
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        const std::string port_s = std::to_string(port);
        if (::getaddrinfo(host.c_str(), port_s.c_str(), &hints, &res) != 0) {
            throw ConnectError("cannot resolve host '" + host + "'");
        }
        int fd = -1;
        for (addrinfo* ai = res; ai; ai = ai->ai_next) {
            fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
            if (fd < 0) {
                continue;
            }
            if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
                break;
            }
            ::close(fd);
            fd = -1;
        }
        ::freeaddrinfo(res);
        if (fd < 0) {
            throw ConnectError("cannot connect to " + host + ":" + port_s);
        }
        fd_ = fd;
    }

    void send_all(const std::string& data)
    {
        std::size_t off = 0;
        while (off < data.size()) {
            const ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
            if (n <= 0) {
                throw TransportError("AMQP send failed");
            }
            off += static_cast<std::size_t>(n);
        }
    }

    // Reads exactly n bytes, waiting up to deadline_ms per chunk. Returns
    // false only when nothing at all arrived before the deadline and
    // partial==false.
    bool recv_exact(std::string& out, std::size_t n, int deadline_ms)
    {
        out.clear();
        out.reserve(n);
        while (out.size() < n) {
            pollfd pfd{fd_, POLLIN, 0};
            const int pr = ::poll(&pfd, 1, deadline_ms);
            if (pr == 0) {
                if (out.empty()) {
                    return false;
                }
                throw TransportError("AMQP read timed out mid-frame");
            }
            if (pr < 0) {
                throw TransportError("AMQP poll failed");
            }
            char buf[4096];
            const std::size_t want = std::min(sizeof buf, n - out.size());
            const ssize_t got = ::recv(fd_, buf, want, 0);
            if (got <= 0) {
                throw TransportError("AMQP connection closed by peer");
            }
            out.append(buf, static_cast<std::size_t>(got));
        }
        return true;
    }

    void close_fd()
    {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

    bool open() const { return fd_ >= 0; }

private:
    int fd_ = -1;
};

Frame method_frame(std::uint16_t channel, std::uint16_t class_id, std::uint16_t method_id,
                   std::string args)
{
    ByteWriter w;
    w.u16(class_id);
    w.u16(method_id);
    std::string payload = w.take() + std::move(args);
    return Frame{kFrameMethod, channel, std::move(payload)};
}

struct Method {
    std::uint16_t channel = 0;
    std::uint16_t class_id = 0;
    std::uint16_t method_id = 0;
    std::string args; // payload minus the two id words
};

// One AMQP connection with a single open channel (1). The endpoint uses
// one instance for publishing and a separate instance per subscription.
class Connection {
public:
    Connection(const AmqpUri& uri, int handshake_timeout_ms = 5000)
    {
        // single bounded retry; no retry storm on a dead server
        try {
            sock_.connect_to(uri.host, uri.port);
        } catch (const ConnectError&) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
            sock_.connect_to(uri.host, uri.port);
        }
        handshake_(uri, handshake_timeout_ms);
        open_channel_(handshake_timeout_ms);
    }

    ~Connection()
    {
        try {
            if (sock_.open() && !broken_) {
                ByteWriter w;
                w.u16(200);
                w.shortstr("bye");
                w.u16(0);
                w.u16(0);
                send_frame_(method_frame(0, kClassConnection, kConnClose, w.take()));
                wait_method_(kClassConnection, kConnCloseOk, 1000);
            }
        } catch (...) {
            // best effort
        }
        sock_.close_fd();
    }

    void declare_topic_exchange(const std::string& exchange)
    {
        ByteWriter w;
        w.u16(0);
        w.shortstr(exchange);
        w.shortstr("topic");
        w.u8(0); // passive/durable/auto-delete/internal/no-wait all clear
        w.empty_table();
        send_frame_(method_frame(1, kClassExchange, kExchDeclare, w.take()));
        expect_declare_ok_(kClassExchange, kExchDeclareOk, "exchange.declare");
    }

    // Declares a server-named exclusive auto-delete queue bound to `key`
    // and starts a consumer with explicit acks. Returns the queue name.
    std::string bind_and_consume(const std::string& exchange, const std::string& key)
    {
        ByteWriter d;
        d.u16(0);
        d.shortstr(""); // server-named
        d.u8(0x0C);     // exclusive | auto-delete
        d.empty_table();
        send_frame_(method_frame(1, kClassQueue, kQueueDeclare, d.take()));
        Method ok = expect_declare_ok_(kClassQueue, kQueueDeclareOk, "queue.declare");
        ByteReader r(ok.args);
        const std::string queue = r.shortstr();

        ByteWriter b;
        b.u16(0);
        b.shortstr(queue);
        b.shortstr(exchange);
        b.shortstr(key);
        b.u8(0);
        b.empty_table();
        send_frame_(method_frame(1, kClassQueue, kQueueBind, b.take()));
        expect_declare_ok_(kClassQueue, kQueueBindOk, "queue.bind");

        ByteWriter c;
        c.u16(0);
        c.shortstr(queue);
        c.shortstr(""); // server-named consumer tag
        c.u8(0);        // explicit acks
        c.empty_table();
        send_frame_(method_frame(1, kClassBasic, kBasicConsume, c.take()));
        expect_declare_ok_(kClassBasic, kBasicConsumeOk, "basic.consume");
        return queue;
    }

    void publish(const std::string& exchange, const std::string& key, const std::string& body)
    {
        ByteWriter m;
        m.u16(0);
        m.shortstr(exchange);
        m.shortstr(key);
        m.u8(0);
        send_frame_(method_frame(1, kClassBasic, kBasicPublish, m.take()));

        ByteWriter h;
        h.u16(kClassBasic);
        h.u16(0); // weight
        h.u64(body.size());
        h.u16(0); // no properties
        send_frame_(Frame{kFrameHeader, 1, h.take()});

        const std::size_t chunk = frame_max_ - 8;
        for (std::size_t off = 0; off < body.size() || off == 0; off += chunk) {
            const std::size_t n = std::min(chunk, body.size() - off);
            send_frame_(Frame{kFrameBody, 1, body.substr(off, n)});
            if (body.empty()) {
                break;
            }
        }
    }

    // Waits up to wait_ms for a delivery; acks it before returning.
    std::optional<WireMessage> next_delivery(int wait_ms)
    {
        const auto deadline = std::chrono::steady_clock::now()
                              + std::chrono::milliseconds(std::max(wait_ms, 0));
        for (;;) {
            const auto now = std::chrono::steady_clock::now();
            const int remaining = static_cast<int>(
                std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count());
            auto frame = read_frame_(std::max(remaining, 0));
            if (!frame) {
                return std::nullopt;
            }
            if (frame->type != kFrameMethod) {
                continue; // stray heartbeat or content out of context
            }
            Method m = parse_method_(*frame);
            handle_close_(m);
            if (m.class_id != kClassBasic || m.method_id != kBasicDeliver) {
                continue;
            }
            ByteReader r(m.args);
            (void)r.shortstr(); // consumer tag
            const std::uint64_t delivery_tag = r.u64();
            (void)r.u8(); // redelivered
            (void)r.shortstr();
            const std::string key = r.shortstr();

            const std::string body = read_content_(5000);

            ByteWriter a;
            a.u64(delivery_tag);
            a.u8(0);
            send_frame_(method_frame(1, kClassBasic, kBasicAck, a.take()));

            return WireMessage{RoutingKey(key), body};
        }
    }

private:
    void handshake_(const AmqpUri& uri, int timeout_ms)
    {
        static const char header[8] = {'A', 'M', 'Q', 'P', 0, 0, 9, 1};
        sock_.send_all(std::string(header, sizeof header));

        Method start = wait_method_(kClassConnection, kConnStart, timeout_ms, AuthPhase::Yes);
        ByteReader r(start.args);
        (void)r.u8();
        (void)r.u8();
        r.skip_table();
        const std::string mechanisms = r.longstr();
        if (mechanisms.find("PLAIN") == std::string::npos) {
            throw AuthError("server offers no PLAIN authentication");
        }

        ByteWriter ok;
        ok.empty_table(); // client properties
        ok.shortstr("PLAIN");
        std::string response;
        response.push_back('\0');
        response += uri.user;
        response.push_back('\0');
        response += uri.password;
        ok.longstr(response);
        ok.shortstr("en_US");
        send_frame_(method_frame(0, kClassConnection, kConnStartOk, ok.take()));

        Method tune = wait_method_(kClassConnection, kConnTune, timeout_ms, AuthPhase::Yes);
        ByteReader tr(tune.args);
        const std::uint16_t channel_max = tr.u16();
        const std::uint32_t frame_max = tr.u32();
        (void)channel_max;
        if (frame_max != 0) {
            frame_max_ = std::min<std::uint32_t>(frame_max, 131072);
        }

        ByteWriter tok;
        tok.u16(1); // one channel is all we use
        tok.u32(frame_max_);
        tok.u16(0); // heartbeats disabled
        send_frame_(method_frame(0, kClassConnection, kConnTuneOk, tok.take()));

        ByteWriter open;
        open.shortstr(uri.vhost);
        open.shortstr("");
        open.u8(0);
        send_frame_(method_frame(0, kClassConnection, kConnOpen, open.take()));
        wait_method_(kClassConnection, kConnOpenOk, timeout_ms, AuthPhase::Yes);
    }

    void open_channel_(int timeout_ms)
    {
        ByteWriter w;
        w.shortstr("");
        send_frame_(method_frame(1, kClassChannel, kChanOpen, w.take()));
        wait_method_(kClassChannel, kChanOpenOk, timeout_ms);
    }

    void send_frame_(const Frame& f) { sock_.send_all(encode_frame(f)); }

    std::optional<Frame> read_frame_(int deadline_ms)
    {
        std::string head;
        if (!sock_.recv_exact(head, 7, deadline_ms)) {
            return std::nullopt;
        }
        ByteReader r(head);
        Frame f;
        f.type = r.u8();
        f.channel = r.u16();
        const std::uint32_t size = r.u32();
        std::string rest;
        sock_.recv_exact(rest, size + 1, 5000);
        if (static_cast<std::uint8_t>(rest.back()) != kFrameEnd) {
            broken_ = true;
            throw TransportError("AMQP frame missing end octet");
        }
        rest.pop_back();
        f.payload = std::move(rest);
        return f;
    }

    static Method parse_method_(const Frame& f)
    {
        ByteReader r(f.payload);
        Method m;
        m.channel = f.channel;
        m.class_id = r.u16();
        m.method_id = r.u16();
        m.args = f.payload.substr(4);
        return m;
    }

    enum class AuthPhase { No, Yes };

    [[noreturn]] void throw_close_(const Method& m, AuthPhase auth)
    {
        broken_ = true;
        ByteReader r(m.args);
        const std::uint16_t code = r.u16();
        const std::string text = r.shortstr();
        const std::string what = "AMQP close " + std::to_string(code) + ": " + text;
        if (m.class_id == kClassChannel) {
            throw DeclareError(what);
        }
        if (auth == AuthPhase::Yes || code == 403 /*access-refused*/) {
            throw AuthError(what);
        }
        throw TransportError(what);
    }

    void handle_close_(const Method& m, AuthPhase auth = AuthPhase::No)
    {
        if ((m.class_id == kClassConnection && m.method_id == kConnClose)
            || (m.class_id == kClassChannel && m.method_id == kChanClose)) {
            throw_close_(m, auth);
        }
    }

    Method wait_method_(std::uint16_t class_id, std::uint16_t method_id, int timeout_ms,
                        AuthPhase auth = AuthPhase::No)
    {
        for (;;) {
            auto f = read_frame_(timeout_ms);
            if (!f) {
                broken_ = true;
                throw TransportError("AMQP timed out waiting for method "
                                     + std::to_string(class_id) + "."
                                     + std::to_string(method_id));
            }
            if (f->type != kFrameMethod) {
                continue;
            }
            Method m = parse_method_(*f);
            handle_close_(m, auth);
            if (m.class_id == class_id && m.method_id == method_id) {
                return m;
            }
        }
    }

    Method expect_declare_ok_(std::uint16_t class_id, std::uint16_t method_id,
                              const std::string& what)
    {
        try {
            return wait_method_(class_id, method_id, 5000);
        } catch (const DeclareError&) {
            throw;
        } catch (const TransportError& e) {
            throw DeclareError(what + " failed: " + e.what());
        }
    }

    std::string read_content_(int timeout_ms)
    {
        auto header = read_frame_(timeout_ms);
        if (!header || header->type != kFrameHeader) {
            broken_ = true;
            throw TransportError("AMQP delivery missing content header");
        }
        ByteReader r(header->payload);
        (void)r.u16(); // class
        (void)r.u16(); // weight
        const std::uint64_t size = r.u64();

        std::string body;
        body.reserve(size);
        while (body.size() < size) {
            auto part = read_frame_(timeout_ms);
            if (!part || part->type != kFrameBody) {
                broken_ = true;
                throw TransportError("AMQP delivery missing body frame");
            }
            body += part->payload;
        }
        return body;
    }

    TcpSocket sock_;
    std::uint32_t frame_max_ = 131072;
    bool broken_ = false;
};

class AmqpSubscription final : public Subscription {
public:
    AmqpSubscription(const AmqpUri& uri, const std::string& exchange, const RoutingKey& key)
        : conn_(uri)
    {
        conn_.declare_topic_exchange(exchange);
        conn_.bind_and_consume(exchange, key.str());
    }

    std::optional<WireMessage> poll(Duration wait) override
    {
        return conn_.next_delivery(static_cast<int>(wait.micros / 1000));
    }

    void close() override {}

private:
    Connection conn_;
};

class AmqpEndpoint final : public BrokerEndpoint {
public:
    AmqpEndpoint(AmqpUri uri, std::string exchange)
        : uri_(std::move(uri)), exchange_(std::move(exchange))
    {
        // fail fast on unreachable/unauthorized servers
        publisher_ = std::make_unique<Connection>(uri_);
        publisher_->declare_topic_exchange(exchange_);
    }

    void publish(const RoutingKey& key, std::string body) override
    {
        if (!publisher_) {
            throw TransportError("publish after close");
        }
        publisher_->publish(exchange_, key.str(), body);
    }

    std::unique_ptr<Subscription> subscribe(const RoutingKey& key) override
    {
        return std::make_unique<AmqpSubscription>(uri_, exchange_, key);
    }

    void close() override { publisher_.reset(); }

private:
    AmqpUri uri_;
    std::string exchange_;
    std::unique_ptr<Connection> publisher_;
};

} // namespace

} // namespace timebroker::amqp

namespace timebroker {

std::shared_ptr<BrokerEndpoint> amqp_endpoint(const std::string& uri,
                                              const std::string& exchange)
{
    return std::make_shared<amqp::AmqpEndpoint>(amqp::parse_uri(uri), exchange);
}

} // namespace timebroker
