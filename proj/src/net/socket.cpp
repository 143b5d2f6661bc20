#include "vpnprobe/net/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <csignal>
#include <mutex>

namespace vpnprobe::net {

namespace {

// TLS writes to half-closed sockets would otherwise kill the process; every
// disconnect a probe provokes on purpose is an expected event here.
void ensure_sigpipe_ignored() {
    static std::once_flag once;
    std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

sockaddr_in make_addr(const std::string& ip, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (inet_pton(AF_INET, ip.c_str(), &addr.sin_addr) != 1)
        throw std::invalid_argument("bad IPv4 address: " + ip);
    return addr;
}

bool wait_fd(int fd, short events, Millis timeout) {
    pollfd p{fd, events, 0};
    int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    return rc > 0 && (p.revents & (events | POLLHUP | POLLERR));
}

void set_nonblock(int fd, bool on) {
    int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, on ? flags | O_NONBLOCK : flags & ~O_NONBLOCK);
}

}  // namespace

TcpStream& TcpStream::operator=(TcpStream&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
}

TcpConnectResult TcpStream::connect(const std::string& ip, std::uint16_t port,
                                            Millis timeout) {
    ensure_sigpipe_ignored();
    TcpConnectResult result;
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) return result;
    sockaddr_in addr = make_addr(ip, port);
    set_nonblock(fd, true);
    int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    if (rc != 0 && errno == EINPROGRESS) {
        if (!wait_fd(fd, POLLOUT, timeout)) {
            ::close(fd);
            result.error = ConnectError::TimedOut;
            return result;
        }
        int err = 0;
        socklen_t len = sizeof err;
        getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        rc = err == 0 ? 0 : -1;
        errno = err;
    }
    if (rc != 0) {
        ::close(fd);
        result.error = errno == ECONNREFUSED ? ConnectError::Refused : ConnectError::Other;
        return result;
    }
    set_nonblock(fd, false);
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    result.stream = TcpStream(fd);
    return result;
}

std::optional<std::size_t> TcpStream::read_some(std::span<std::uint8_t> out, Millis timeout) {
    if (fd_ < 0 || out.empty()) return std::nullopt;
    if (!wait_fd(fd_, POLLIN, timeout)) return std::nullopt;
    ssize_t n = ::recv(fd_, out.data(), out.size(), 0);
    if (n < 0) return std::nullopt;
    return static_cast<std::size_t>(n);
}

bool TcpStream::read_exact(std::span<std::uint8_t> out, Millis timeout) {
    std::size_t got = 0;
    auto deadline = std::chrono::steady_clock::now() + timeout;
    while (got < out.size()) {
        auto left = std::chrono::duration_cast<Millis>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) return false;
        auto n = read_some(out.subspan(got), left);
        if (!n || *n == 0) return false;
        got += *n;
    }
    return true;
}

bool TcpStream::write_all(ByteView data, Millis timeout) {
    if (fd_ < 0) return false;
    std::size_t sent = 0;
    auto deadline = std::chrono::steady_clock::now() + timeout;
    while (sent < data.size()) {
        auto left = std::chrono::duration_cast<Millis>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) return false;
        if (!wait_fd(fd_, POLLOUT, left)) return false;
        ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) return false;
        sent += static_cast<std::size_t>(n);
    }
    return true;
}

void TcpStream::shutdown_both() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void TcpStream::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

TcpListener& TcpListener::operator=(TcpListener&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = std::exchange(other.fd_, -1);
        port_ = other.port_;
    }
    return *this;
}

TcpListener TcpListener::bind(const std::string& ip, std::uint16_t port) {
    ensure_sigpipe_ignored();
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("socket() failed");
    int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr = make_addr(ip, port);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        int err = errno;
        ::close(fd);
        throw std::runtime_error("bind(" + ip + ":" + std::to_string(port) +
                                 ") failed: " + std::strerror(err));
    }
    if (::listen(fd, 16) != 0) {
        ::close(fd);
        throw std::runtime_error("listen() failed");
    }
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
    TcpListener l;
    l.fd_ = fd;
    l.port_ = ntohs(bound.sin_port);
    return l;
}

std::optional<TcpStream> TcpListener::accept(Millis timeout) {
    if (fd_ < 0) return std::nullopt;
    if (!wait_fd(fd_, POLLIN, timeout)) return std::nullopt;
    int cfd = ::accept(fd_, nullptr, nullptr);
    if (cfd < 0) return std::nullopt;
    int one = 1;
    setsockopt(cfd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return TcpStream(cfd);
}

void TcpListener::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

UdpSocket& UdpSocket::operator=(UdpSocket&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = std::exchange(other.fd_, -1);
        port_ = other.port_;
    }
    return *this;
}

UdpSocket UdpSocket::bind(const std::string& ip, std::uint16_t port) {
    ensure_sigpipe_ignored();
    int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd < 0) throw std::runtime_error("socket() failed");
    sockaddr_in addr = make_addr(ip, port);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        int err = errno;
        ::close(fd);
        throw std::runtime_error("udp bind(" + ip + ":" + std::to_string(port) +
                                 ") failed: " + std::strerror(err));
    }
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
    UdpSocket s;
    s.fd_ = fd;
    s.port_ = ntohs(bound.sin_port);
    return s;
}

bool UdpSocket::send_to(const std::string& ip, std::uint16_t port, ByteView payload) {
    if (fd_ < 0) return false;
    sockaddr_in addr = make_addr(ip, port);
    ssize_t n = ::sendto(fd_, payload.data(), payload.size(), MSG_NOSIGNAL,
                         reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    return n == static_cast<ssize_t>(payload.size());
}

std::optional<UdpSocket::Datagram> UdpSocket::recv_from(Millis timeout) {
    if (fd_ < 0) return std::nullopt;
    if (!wait_fd(fd_, POLLIN, timeout)) return std::nullopt;
    Bytes buf(65536);
    sockaddr_in from{};
    socklen_t len = sizeof from;
    ssize_t n = ::recvfrom(fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&from),
                           &len);
    if (n < 0) return std::nullopt;
    buf.resize(static_cast<std::size_t>(n));
    char ip[INET_ADDRSTRLEN] = {};
    inet_ntop(AF_INET, &from.sin_addr, ip, sizeof ip);
    return Datagram{ip, ntohs(from.sin_port), std::move(buf)};
}

void UdpSocket::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

std::vector<std::size_t> wait_readable(const std::vector<int>& fds, Millis timeout) {
    std::vector<pollfd> pfds;
    pfds.reserve(fds.size());
    for (int fd : fds) {
        pfds.push_back({fd, POLLIN, 0});
    }
    std::vector<std::size_t> ready;
    int rc = ::poll(pfds.data(), pfds.size(), static_cast<int>(timeout.count()));
    if (rc <= 0) {
        return ready;
    }
    for (std::size_t i = 0; i < pfds.size(); ++i) {
        if (pfds[i].revents & (POLLIN | POLLHUP | POLLERR)) {
            ready.push_back(i);
        }
    }
    return ready;
}

}  // namespace vpnprobe::net
