#include "blinkscan/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>

namespace blinkscan::sessiond {

void MessageQueue::push(Message m) {
    {
        std::lock_guard lock(mu_);
        if (closed_) throw TransportClosed();
        items_.push_back(std::move(m));
    }
    cv_.notify_one();
}

std::optional<Message> MessageQueue::pop(std::optional<std::chrono::milliseconds> timeout) {
    std::unique_lock lock(mu_);
    auto ready = [&] { return !items_.empty() || closed_; };
    if (timeout) {
        if (!cv_.wait_for(lock, *timeout, ready)) return std::nullopt;
    } else {
        cv_.wait(lock, ready);
    }
    if (items_.empty()) throw TransportClosed();
    Message m = std::move(items_.front());
    items_.pop_front();
    return m;
}

void MessageQueue::close() {
    {
        std::lock_guard lock(mu_);
        closed_ = true;
    }
    cv_.notify_all();
}

bool MessageQueue::closed() const {
    std::lock_guard lock(mu_);
    return closed_;
}

std::optional<Message> MemoryTransport::receive(std::optional<std::chrono::milliseconds> timeout) {
    return in_->pop(timeout);
}

void MemoryTransport::send(const Message& m) {
    // Round-trip through the wire form so both ends see exactly what a
    // socket peer would.
    out_->push(decode(encode(m)));
}

void MemoryTransport::close() {
    in_->close();
    out_->close();
}

std::pair<std::unique_ptr<MemoryTransport>, std::unique_ptr<MemoryTransport>> memory_pipe() {
    auto a = std::make_shared<MessageQueue>();
    auto b = std::make_shared<MessageQueue>();
    return {std::make_unique<MemoryTransport>(a, b), std::make_unique<MemoryTransport>(b, a)};
}

Message malformed_notice(const std::string& error) {
    Message m;
    m.dir = Direction::ClientToEngine;
    m.kind = Kind::SessionControl;
    m.payload = {{"action", "malformed"}, {"error", error}};
    return m;
}

std::optional<Message> StreamTransport::receive(std::optional<std::chrono::milliseconds>) {
    std::string line;
    while (!closed_ && std::getline(in_, line)) {
        if (line.empty() || line == "\r") continue;
        try {
            return decode(line);
        } catch (const MalformedMessage& e) {
            return malformed_notice(e.what());
        }
    }
    throw TransportClosed();
}

void StreamTransport::send(const Message& m) {
    if (closed_) throw TransportClosed();
    out_ << encode(m) << '\n';
    out_.flush();
    if (!out_) throw TransportClosed();
}

TcpTransport::TcpTransport(int fd) : fd_(fd), reader_([this] { read_loop(); }) {}

TcpTransport::~TcpTransport() {
    close();
    if (reader_.joinable()) reader_.join();
    if (fd_ >= 0) ::close(fd_);
}

void TcpTransport::read_loop() {
    std::string buf;
    char chunk[4096];
    for (;;) {
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n <= 0) break;
        buf.append(chunk, static_cast<std::size_t>(n));
        std::size_t nl;
        while ((nl = buf.find('\n')) != std::string::npos) {
            std::string line = buf.substr(0, nl);
            buf.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            try {
                inbound_.push(decode(line));
            } catch (const MalformedMessage& e) {
                inbound_.push(malformed_notice(e.what()));
            } catch (const TransportClosed&) {
                return;
            }
        }
    }
    inbound_.close();
}

std::optional<Message> TcpTransport::receive(std::optional<std::chrono::milliseconds> timeout) {
    return inbound_.pop(timeout);
}

void TcpTransport::send(const Message& m) {
    const std::string line = encode(m) + "\n";
    std::lock_guard lock(write_mu_);
    if (closed_) throw TransportClosed();
    std::size_t off = 0;
    while (off < line.size()) {
        const ssize_t n = ::send(fd_, line.data() + off, line.size() - off, MSG_NOSIGNAL);
        if (n <= 0) {
            if (n < 0 && errno == EINTR) continue;
            throw TransportClosed();
        }
        off += static_cast<std::size_t>(n);
    }
}

void TcpTransport::close() {
    {
        std::lock_guard lock(write_mu_);
        if (closed_) return;
        closed_ = true;
    }
    ::shutdown(fd_, SHUT_RDWR);
    inbound_.close();
}

TcpListener::TcpListener(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
    const int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 1) != 0) {
        const std::string err = std::strerror(errno);
        ::close(fd_);
        throw std::runtime_error("bind/listen: " + err);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<TcpTransport> TcpListener::accept() {
    for (;;) {
        const int c = ::accept(fd_, nullptr, nullptr);
        if (c >= 0) return std::make_unique<TcpTransport>(c);
        if (errno != EINTR) throw std::runtime_error(std::string("accept: ") + std::strerror(errno));
    }
}

std::unique_ptr<TcpTransport> tcp_connect(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res) {
        throw std::runtime_error("cannot resolve " + host);
    }
    const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0 || ::connect(fd, res->ai_addr, res->ai_addrlen) != 0) {
        const std::string err = std::strerror(errno);
        if (fd >= 0) ::close(fd);
        ::freeaddrinfo(res);
        throw std::runtime_error("connect: " + err);
    }
    ::freeaddrinfo(res);
    return std::make_unique<TcpTransport>(fd);
}

}  // namespace blinkscan::sessiond
