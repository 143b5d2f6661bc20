#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <utility>

#include "vpnprobe/core/bytes.hpp"

namespace vpnprobe::net {

using Millis = std::chrono::milliseconds;

// Thin RAII socket wrappers.  Everything binds the loopback interface by
// default: the harness talks to clients it spawned itself, never to the
// outside world, unless the operator explicitly overrides the bind address.

enum class ConnectError { Refused, TimedOut, Other };
struct TcpConnectResult;

class TcpStream {
public:
    TcpStream() = default;
    explicit TcpStream(int fd) : fd_(fd) {}
    TcpStream(TcpStream&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    TcpStream& operator=(TcpStream&& other) noexcept;
    TcpStream(const TcpStream&) = delete;
    TcpStream& operator=(const TcpStream&) = delete;
    ~TcpStream() { close(); }

    static TcpConnectResult connect(const std::string& ip, std::uint16_t port,
                                    Millis timeout = Millis(2000));

    bool valid() const { return fd_ >= 0; }
    int fd() const { return fd_; }
    int release() { return std::exchange(fd_, -1); }

    // Returns bytes read (0 on orderly EOF), or nullopt on timeout/error.
    std::optional<std::size_t> read_some(std::span<std::uint8_t> out,
                                         Millis timeout = Millis(2000));
    bool read_exact(std::span<std::uint8_t> out, Millis timeout = Millis(2000));
    bool write_all(ByteView data, Millis timeout = Millis(2000));

    void shutdown_both();
    void close();

private:
    int fd_ = -1;
};

struct TcpConnectResult {
    std::optional<TcpStream> stream;
    ConnectError error = ConnectError::Other;
};

class TcpListener {
public:
    TcpListener() = default;
    TcpListener(TcpListener&& other) noexcept
        : fd_(std::exchange(other.fd_, -1)), port_(other.port_) {}
    TcpListener& operator=(TcpListener&& other) noexcept;
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;
    ~TcpListener() { close(); }

    // port 0 picks an ephemeral port; port() reports the actual one.
    static TcpListener bind(const std::string& ip, std::uint16_t port);
    static TcpListener bind_loopback(std::uint16_t port = 0) { return bind("127.0.0.1", port); }

    std::uint16_t port() const { return port_; }
    bool valid() const { return fd_ >= 0; }
    std::optional<TcpStream> accept(Millis timeout = Millis(2000));
    void close();

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

class UdpSocket {
public:
    UdpSocket() = default;
    UdpSocket(UdpSocket&& other) noexcept : fd_(std::exchange(other.fd_, -1)), port_(other.port_) {}
    UdpSocket& operator=(UdpSocket&& other) noexcept;
    UdpSocket(const UdpSocket&) = delete;
    UdpSocket& operator=(const UdpSocket&) = delete;
    ~UdpSocket() { close(); }

    static UdpSocket bind(const std::string& ip, std::uint16_t port);
    static UdpSocket bind_loopback(std::uint16_t port = 0) { return bind("127.0.0.1", port); }

    std::uint16_t port() const { return port_; }
    bool valid() const { return fd_ >= 0; }
    int fd() const { return fd_; }

    struct Datagram {
        std::string ip;
        std::uint16_t port = 0;
        Bytes payload;
    };
    bool send_to(const std::string& ip, std::uint16_t port, ByteView payload);
    std::optional<Datagram> recv_from(Millis timeout = Millis(2000));
    void close();

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

// Waits until at least one of the fds is readable (or the timeout passes);
// returns the indices of the readable ones.
std::vector<std::size_t> wait_readable(const std::vector<int>& fds, Millis timeout);

}  // namespace vpnprobe::net
