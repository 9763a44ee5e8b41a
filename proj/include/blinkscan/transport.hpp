#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

#include "blinkscan/messages.hpp"

namespace blinkscan::sessiond {

class TransportClosed : public std::runtime_error {
public:
    TransportClosed() : std::runtime_error("transport closed") {}
};

/// FIFO of messages shared between producer threads and the session loop.
class MessageQueue {
public:
    void push(Message m);
    /// Waits up to `timeout` (forever when unset). Nullopt on timeout.
    /// Throws TransportClosed once closed and drained.
    std::optional<Message> pop(std::optional<std::chrono::milliseconds> timeout);
    void close();
    bool closed() const;

private:
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Message> items_;
    bool closed_ = false;
};

class Transport {
public:
    virtual ~Transport() = default;
    /// Next inbound message in arrival order; nullopt on timeout. Throws
    /// TransportClosed when the peer has gone and nothing is left to read.
    virtual std::optional<Message> receive(std::optional<std::chrono::milliseconds> timeout) = 0;
    /// Throws TransportClosed when the peer has gone.
    virtual void send(const Message& m) = 0;
    virtual void close() = 0;
};

/// One end of an in-process pipe.
class MemoryTransport : public Transport {
public:
    MemoryTransport(std::shared_ptr<MessageQueue> in, std::shared_ptr<MessageQueue> out)
        : in_(std::move(in)), out_(std::move(out)) {}
    std::optional<Message> receive(std::optional<std::chrono::milliseconds> timeout) override;
    void send(const Message& m) override;
    void close() override;

private:
    std::shared_ptr<MessageQueue> in_;
    std::shared_ptr<MessageQueue> out_;
};

/// Two connected ends; what one sends the other receives.
std::pair<std::unique_ptr<MemoryTransport>, std::unique_ptr<MemoryTransport>> memory_pipe();

/// JSON lines over a pair of streams. Lines that fail to decode arrive as a
/// SessionControl {"action":"malformed","error":...} message.
class StreamTransport : public Transport {
public:
    StreamTransport(std::istream& in, std::ostream& out) : in_(in), out_(out) {}
    std::optional<Message> receive(std::optional<std::chrono::milliseconds> timeout) override;
    void send(const Message& m) override;
    void close() override { closed_ = true; }

private:
    std::istream& in_;
    std::ostream& out_;
    bool closed_ = false;
};

/// JSON lines over a connected TCP socket. A reader thread feeds inbound
/// lines into an ordered queue; malformed lines are reported as for
/// StreamTransport.
class TcpTransport : public Transport {
public:
    explicit TcpTransport(int fd);
    ~TcpTransport() override;
    TcpTransport(const TcpTransport&) = delete;
    TcpTransport& operator=(const TcpTransport&) = delete;

    std::optional<Message> receive(std::optional<std::chrono::milliseconds> timeout) override;
    void send(const Message& m) override;
    void close() override;

private:
    void read_loop();

    int fd_;
    MessageQueue inbound_;
    std::mutex write_mu_;
    bool closed_ = false;
    std::thread reader_;
};

/// Listening socket on 127.0.0.1.
class TcpListener {
public:
    /// Port 0 picks a free port.
    explicit TcpListener(std::uint16_t port = 0);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    std::uint16_t port() const { return port_; }
    std::unique_ptr<TcpTransport> accept();

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

std::unique_ptr<TcpTransport> tcp_connect(const std::string& host, std::uint16_t port);

/// SessionControl message reporting an undecodable inbound line.
Message malformed_notice(const std::string& error);

}  // namespace blinkscan::sessiond
