#include "qkdcoex/netlink.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

#include "qkdcoex/errors.hpp"

namespace qkdcoex::net {

namespace {

std::int64_t monotonic_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// --- in-process pipe --------------------------------------------------------

// One direction of a pipe: a chunk queue guarded by a mutex. "closed"
// means no more writes will arrive; readers drain what is buffered and
// then see end of stream. "broken" models an abnormal termination
// (connection reset): buffered bytes are forfeit and every read fails.
struct PipeChannel {
    std::mutex mutex;
    std::condition_variable readable;
    std::deque<std::vector<std::uint8_t>> chunks;
    std::size_t front_off = 0;
    bool closed = false;
    bool broken = false;
};

class PipeEnd : public Transport {
  public:
    PipeEnd(std::shared_ptr<PipeChannel> out, std::shared_ptr<PipeChannel> in,
            double recv_timeout_s)
        : out_(std::move(out)), in_(std::move(in)) {
        if (std::isfinite(recv_timeout_s) && recv_timeout_s > 0)
            recv_timeout_ = std::chrono::duration_cast<
                std::chrono::steady_clock::duration>(
                std::chrono::duration<double>(recv_timeout_s));
    }

    ~PipeEnd() override { close(); }

    void send(const std::uint8_t* data, std::size_t len) override {
        if (len == 0) return;
        std::lock_guard<std::mutex> lock(out_->mutex);
        // Writing into a closed or reset direction mirrors a half-closed
        // socket: the bytes go nowhere.
        if (out_->closed || out_->broken) return;
        out_->chunks.emplace_back(data, data + len);
        out_->readable.notify_one();
    }

    std::size_t recv_some(std::uint8_t* buf, std::size_t max_len) override {
        if (max_len == 0) return 0;
        std::unique_lock<std::mutex> lock(in_->mutex);
        const auto ready = [this] {
            return !in_->chunks.empty() || in_->closed || in_->broken;
        };
        if (recv_timeout_) {
            if (!in_->readable.wait_for(lock, *recv_timeout_, ready))
                throw TransportError("pipe recv: timed out");
        } else {
            in_->readable.wait(lock, ready);
        }
        if (in_->broken) throw TransportError("pipe recv: connection reset");
        if (in_->chunks.empty()) return 0;  // drained and closed
        const std::vector<std::uint8_t>& front = in_->chunks.front();
        const std::size_t n =
            std::min(max_len, front.size() - in_->front_off);
        std::memcpy(buf, front.data() + in_->front_off, n);
        in_->front_off += n;
        if (in_->front_off == front.size()) {
            in_->chunks.pop_front();
            in_->front_off = 0;
        }
        return n;
    }

    void close() override {
        for (const auto& ch : {out_, in_}) {
            std::lock_guard<std::mutex> lock(ch->mutex);
            ch->closed = true;
            ch->readable.notify_all();
        }
    }

    void fail() {
        for (const auto& ch : {out_, in_}) {
            std::lock_guard<std::mutex> lock(ch->mutex);
            ch->broken = true;
            ch->readable.notify_all();
        }
    }

  private:
    std::shared_ptr<PipeChannel> out_;
    std::shared_ptr<PipeChannel> in_;
    std::optional<std::chrono::steady_clock::duration> recv_timeout_;
};

// --- TCP ---------------------------------------------------------------------

void set_recv_timeout(int fd, double seconds) {
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(seconds);
    tv.tv_usec = static_cast<suseconds_t>((seconds - std::floor(seconds)) *
                                          1e6);
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
}

class TcpTransport : public Transport {
  public:
    TcpTransport(int fd, double recv_timeout_s) : fd_(fd) {
        if (recv_timeout_s > 0) set_recv_timeout(fd_, recv_timeout_s);
        const int one = 1;
        ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    }

    ~TcpTransport() override { close(); }

    void send(const std::uint8_t* data, std::size_t len) override {
        std::size_t off = 0;
        while (off < len) {
            const ssize_t n =
                ::send(fd_, data + off, len - off, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw TransportError(std::string("tcp send: ") +
                                     std::strerror(errno));
            }
            off += static_cast<std::size_t>(n);
        }
    }

    std::size_t recv_some(std::uint8_t* buf, std::size_t max_len) override {
        for (;;) {
            const ssize_t n = ::recv(fd_, buf, max_len, 0);
            if (n > 0) return static_cast<std::size_t>(n);
            if (n == 0) return 0;
            if (errno == EINTR) continue;
            if (errno == EAGAIN || errno == EWOULDBLOCK)
                throw TransportError("tcp recv: timed out");
            throw TransportError(std::string("tcp recv: ") +
                                 std::strerror(errno));
        }
    }

    void close() override {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

  private:
    int fd_;
};

addrinfo* resolve(const std::string& host, std::uint16_t port, int flags) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = flags;
    addrinfo* res = nullptr;
    const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(),
                                 std::to_string(port).c_str(), &hints, &res);
    if (rc != 0)
        throw TransportError(std::string("resolve ") + host + ": " +
                             ::gai_strerror(rc));
    return res;
}

} // namespace

std::pair<std::shared_ptr<Transport>, std::shared_ptr<Transport>>
make_pipe(double recv_timeout_s) {
    auto ab = std::make_shared<PipeChannel>();
    auto ba = std::make_shared<PipeChannel>();
    return {std::make_shared<PipeEnd>(ab, ba, recv_timeout_s),
            std::make_shared<PipeEnd>(ba, ab, recv_timeout_s)};
}

void pipe_fail(Transport& end) {
    auto* pipe = dynamic_cast<PipeEnd*>(&end);
    if (pipe == nullptr)
        throw ValidationError("pipe_fail: not an in-process pipe end");
    pipe->fail();
}

std::unique_ptr<Transport> tcp_connect(const std::string& host,
                                       std::uint16_t port,
                                       double connect_timeout_s,
                                       double recv_timeout_s) {
    const std::int64_t deadline =
        monotonic_ns() + static_cast<std::int64_t>(connect_timeout_s * 1e9);
    int last_errno = ECONNREFUSED;
    for (;;) {
        addrinfo* res = resolve(host, port, 0);
        for (addrinfo* ai = res; ai; ai = ai->ai_next) {
            const int fd =
                ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
            if (fd < 0) continue;
            if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
                ::freeaddrinfo(res);
                return std::make_unique<TcpTransport>(fd, recv_timeout_s);
            }
            last_errno = errno;
            ::close(fd);
        }
        ::freeaddrinfo(res);
        // Refusals are retried so the two endpoints may start in either
        // order; anything else is a hard failure.
        if (last_errno != ECONNREFUSED || monotonic_ns() >= deadline)
            throw TransportError(std::string("connect ") + host + ": " +
                                 std::strerror(last_errno));
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
}

TcpListener::TcpListener(std::uint16_t port) {
    addrinfo* res = resolve("", port, AI_PASSIVE);
    int last_errno = 0;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        const int fd =
            ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) {
            last_errno = errno;
            continue;
        }
        const int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 &&
            ::listen(fd, 8) == 0) {
            fd_ = fd;
            break;
        }
        last_errno = errno;
        ::close(fd);
    }
    ::freeaddrinfo(res);
    if (fd_ < 0)
        throw TransportError(std::string("listen: ") +
                             std::strerror(last_errno));
    sockaddr_storage addr{};
    socklen_t alen = sizeof addr;
    if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &alen) == 0) {
        if (addr.ss_family == AF_INET)
            port_ = ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
        else if (addr.ss_family == AF_INET6)
            port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
    }
}

TcpListener::~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Transport> TcpListener::accept(double timeout_s,
                                               double recv_timeout_s) {
    pollfd pfd{fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(timeout_s * 1e3));
    if (rc == 0) throw TransportError("accept: timed out");
    if (rc < 0)
        throw TransportError(std::string("accept: ") + std::strerror(errno));
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0)
        throw TransportError(std::string("accept: ") + std::strerror(errno));
    return std::make_unique<TcpTransport>(fd, recv_timeout_s);
}

// --- token-bucket shaper -----------------------------------------------------

void validate(const ShaperConfig& c) {
    if (!(c.rate_bit_s > 0.0))
        throw ValidationError("shaper: rate must be positive");
    if (!(c.burst_bits >= 0.0) || !std::isfinite(c.burst_bits))
        throw ValidationError("shaper: burst must be finite and nonnegative");
}

ShapedTransport::ShapedTransport(std::shared_ptr<Transport> inner,
                                 ShaperConfig config)
    : inner_(std::move(inner)), config_(config) {
    validate(config_);
}

void ShapedTransport::send(const std::uint8_t* data, std::size_t len) {
    if (std::isinf(config_.rate_bit_s)) {
        inner_->send(data, len);
        return;
    }
    const std::int64_t now = monotonic_ns();
    // Idle time never earns credit beyond the standing burst allowance
    // below, so the outstanding debt floor is "now".
    if (next_free_ns_ < now) next_free_ns_ = now;
    next_free_ns_ += static_cast<std::int64_t>(
        8.0 * static_cast<double>(len) / config_.rate_bit_s * 1e9);
    // Release once the debt beyond one burst has drained. A send larger
    // than the bucket therefore waits for its own deficit rather than
    // borrowing it, and the deadline being absolute means an oversleep
    // here is repaid on the next send.
    const auto burst_ns = static_cast<std::int64_t>(
        config_.burst_bits / config_.rate_bit_s * 1e9);
    const std::int64_t deadline = next_free_ns_ - burst_ns;
    if (deadline > now)
        std::this_thread::sleep_for(std::chrono::nanoseconds(deadline - now));
    inner_->send(data, len);
}

std::size_t ShapedTransport::recv_some(std::uint8_t* buf,
                                       std::size_t max_len) {
    return inner_->recv_some(buf, max_len);
}

void ShapedTransport::close() { inner_->close(); }

} // namespace qkdcoex::net
