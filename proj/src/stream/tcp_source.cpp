#include "cardiocep/stream.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace cardiocep {

namespace {

std::string sys_error(const char* what)
{
    return std::string(what) + ": " + std::strerror(errno);
}

void close_fd(int& fd)
{
    if (fd >= 0) {
        ::close(fd);
        fd = -1;
    }
}

} // namespace

TcpSource::TcpSource(std::uint16_t port, std::size_t max_connections) : max_connections_(max_connections)
{
    if (::pipe(wake_fd_) != 0) {
        throw IoError(sys_error("pipe"));
    }
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) {
        close_fd(wake_fd_[0]);
        close_fd(wake_fd_[1]);
        throw IoError(sys_error("socket"));
    }
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 4) != 0) {
        const std::string msg = sys_error(("bind/listen on port " + std::to_string(port)).c_str());
        close_fd(listen_fd_);
        close_fd(wake_fd_[0]);
        close_fd(wake_fd_[1]);
        throw IoError(msg);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpSource::~TcpSource()
{
    close_fd(conn_fd_);
    close_fd(listen_fd_);
    close_fd(wake_fd_[0]);
    close_fd(wake_fd_[1]);
}

void TcpSource::stop()
{
    if (!stopped_.exchange(true)) {
        const char byte = 1;
        [[maybe_unused]] auto n = ::write(wake_fd_[1], &byte, 1);
    }
}

std::vector<std::string> TcpSource::reject_reasons() const
{
    std::lock_guard lock(reasons_mutex_);
    return reasons_;
}

// Reads until `line` holds a complete line or the stream is over.
bool TcpSource::fill_line(std::string& line)
{
    for (;;) {
        if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
            line = buffer_.substr(0, pos);
            buffer_.erase(0, pos + 1);
            return true;
        }
        if (stopped_.load()) {
            return false;
        }
        if (conn_fd_ < 0) {
            if (served_ >= max_connections_) {
                return false;
            }
            pollfd fds[2] = {{listen_fd_, POLLIN, 0}, {wake_fd_[0], POLLIN, 0}};
            if (::poll(fds, 2, -1) < 0) {
                if (errno == EINTR) continue;
                throw IoError(sys_error("poll"));
            }
            if (fds[1].revents != 0) {
                return false;
            }
            conn_fd_ = ::accept(listen_fd_, nullptr, nullptr);
            if (conn_fd_ < 0 && errno != EINTR) {
                throw IoError(sys_error("accept"));
            }
            continue;
        }
        pollfd fds[2] = {{conn_fd_, POLLIN, 0}, {wake_fd_[0], POLLIN, 0}};
        if (::poll(fds, 2, -1) < 0) {
            if (errno == EINTR) continue;
            throw IoError(sys_error("poll"));
        }
        if (fds[1].revents != 0) {
            return false;
        }
        char chunk[4096];
        const ssize_t n = ::read(conn_fd_, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw IoError(sys_error("read"));
        }
        if (n == 0) {
            close_fd(conn_fd_);
            ++served_;
            if (!buffer_.empty()) {
                line = std::move(buffer_);
                buffer_.clear();
                return true;
            }
            continue;
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

std::optional<PatientEvent> TcpSource::next()
{
    std::string line;
    while (fill_line(line)) {
        auto event = decoder_.decode(line);
        if (decoder_.rejected() != rejected_.load()) {
            rejected_.store(decoder_.rejected());
            std::lock_guard lock(reasons_mutex_);
            reasons_ = decoder_.reasons();
        }
        if (event) {
            return event;
        }
    }
    return std::nullopt;
}

} // namespace cardiocep
