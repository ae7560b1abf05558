#include <arpa/inet.h>
#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <istream>
#include <netdb.h>
#include <netinet/in.h>
#include <optional>
#include <ostream>
#include <poll.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include "iva/error.hpp"
#include "iva/policy.hpp"

extern char** environ;

namespace iva {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kMaxLineBytes = 4 * 1024 * 1024;

void ignore_sigpipe() {
    static const bool done = [] {
        std::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)done;
}

void write_all(int fd, std::string_view data) {
    while (!data.empty()) {
        ssize_t n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("write to policy failed: ") + std::strerror(errno));
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

/// Buffered line reader over a file descriptor with a deadline per line.
class LineReader {
public:
    explicit LineReader(int fd) : fd_(fd) {}

    /// Throws PolicyTimeout when the deadline passes and TransportError on EOF.
    std::string read_line(Clock::time_point deadline) {
        for (;;) {
            auto nl = buf_.find('\n');
            if (nl != std::string::npos) {
                std::string line = buf_.substr(0, nl);
                buf_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            if (buf_.size() > kMaxLineBytes) throw TransportError("policy line exceeds the size limit");
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
            if (left <= 0) throw PolicyTimeout("policy did not answer before the deadline");
            pollfd p{fd_, POLLIN, 0};
            int rc = ::poll(&p, 1, static_cast<int>(std::min<long long>(left, 1 << 30)));
            if (rc < 0) {
                if (errno == EINTR) continue;
                throw TransportError(std::string("poll failed: ") + std::strerror(errno));
            }
            if (rc == 0) continue;
            char chunk[8192];
            ssize_t n = ::read(fd_, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN) continue;
                throw TransportError(std::string("read from policy failed: ") + std::strerror(errno));
            }
            if (n == 0) throw TransportError("policy closed the connection");
            buf_.append(chunk, static_cast<std::size_t>(n));
        }
    }

private:
    int fd_;
    std::string buf_;
};

/// Shared line-protocol logic for subprocess and TCP handles.
class LineConnection : public PolicyConnection {
public:
    std::string query(const PolicyRequest& request) override {
        if (state_ != HandleState::Ready) throw TransportError("policy handle is not ready");
        send(encode_request(request));
        std::string line;
        try {
            line = receive(Clock::now() + std::chrono::milliseconds(std::max(1, request.deadline_ms)));
        } catch (const TransportError&) {
            abort_connection();
            throw;
        }
        try {
            auto m = decode_message(line);
            if (m.type == MessageType::Response || m.type == MessageType::Error) return m.text;
        } catch (const ProtocolError&) {
        }
        // Anything that is not a response envelope is graded as raw text.
        return line;
    }

protected:
    void handshake(const ConnectOptions& options) {
        recorder_ = options.recorder;
        if (recorder_) connection_id_ = recorder_->open_connection();
        send(encode_hello());
        auto line = receive(Clock::now() + std::chrono::milliseconds(options.handshake_timeout_ms));
        Message m;
        try {
            m = decode_message(line);
        } catch (const ProtocolError& e) {
            throw TransportError(std::string("bad handshake from policy: ") + e.what());
        }
        if (m.type != MessageType::Hello) throw TransportError("policy did not answer the hello");
        if (m.version != kProtocolVersion) {
            throw VersionMismatch("policy speaks " + m.version + ", harness speaks " + kProtocolVersion);
        }
        state_ = HandleState::Ready;
    }

    void send(const std::string& line) {
        if (recorder_) recorder_->record(connection_id_, Direction::HostToPolicy, line);
        try {
            write_all(write_fd(), line + "\n");
        } catch (const TransportError&) {
            abort_connection();
            throw;
        }
    }

    std::string receive(Clock::time_point deadline) {
        auto line = reader().read_line(deadline);
        if (recorder_) recorder_->record(connection_id_, Direction::PolicyToHost, line);
        return line;
    }

    virtual int write_fd() const = 0;
    virtual LineReader& reader() = 0;
    /// Tears the connection down without a goodbye.
    virtual void abort_connection() = 0;

    std::shared_ptr<SessionRecorder> recorder_;
    std::size_t connection_id_ = 0;
};

class SubprocessConnection final : public LineConnection {
public:
    SubprocessConnection(const std::string& command, const ConnectOptions& options) {
        ignore_sigpipe();
        int to_child[2];
        int from_child[2];
        if (::pipe2(to_child, O_CLOEXEC) != 0 || ::pipe2(from_child, O_CLOEXEC) != 0) {
            throw TransportError(std::string("pipe failed: ") + std::strerror(errno));
        }
        posix_spawn_file_actions_t actions;
        posix_spawn_file_actions_init(&actions);
        posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
        posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
        posix_spawnattr_t attr;
        posix_spawnattr_init(&attr);
        posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
        posix_spawnattr_setpgroup(&attr, 0);
        const char* argv[] = {"sh", "-c", command.c_str(), nullptr};
        int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, &attr, const_cast<char* const*>(argv), environ);
        posix_spawnattr_destroy(&attr);
        posix_spawn_file_actions_destroy(&actions);
        ::close(to_child[0]);
        ::close(from_child[1]);
        in_ = to_child[1];
        out_ = from_child[0];
        reader_.emplace(out_);
        if (rc != 0) {
            pid_ = -1;
            abort_connection();
            throw TransportError("cannot start policy '" + command + "': " + std::strerror(rc));
        }
        try {
            handshake(options);
        } catch (...) {
            abort_connection();
            throw;
        }
    }

    ~SubprocessConnection() override { close(); }

    void close() override {
        if (state_ == HandleState::Closed) return;
        if (state_ == HandleState::Ready) {
            try {
                send(encode_bye());
            } catch (const TransportError&) {
            }
        }
        if (in_ >= 0) ::close(in_);
        in_ = -1;
        // Give the child a moment to exit on its own before killing it.
        for (int i = 0; i < 50 && pid_ > 0; ++i) {
            if (::waitpid(pid_, nullptr, WNOHANG) == pid_) pid_ = -1;
            else std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        abort_connection();
    }

protected:
    int write_fd() const override { return in_; }
    LineReader& reader() override { return *reader_; }

    void abort_connection() override {
        if (pid_ > 0) {
            ::kill(-pid_, SIGKILL);
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, nullptr, 0);
            pid_ = -1;
        }
        if (in_ >= 0) ::close(in_);
        if (out_ >= 0) ::close(out_);
        in_ = out_ = -1;
        state_ = HandleState::Closed;
    }

private:
    pid_t pid_ = -1;
    int in_ = -1;
    int out_ = -1;
    std::optional<LineReader> reader_;
};

class TcpConnection final : public LineConnection {
public:
    TcpConnection(const std::string& host, int port, const ConnectOptions& options) {
        ignore_sigpipe();
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        auto port_text = std::to_string(port);
        int rc = ::getaddrinfo(host.c_str(), port_text.c_str(), &hints, &res);
        if (rc != 0) throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
        std::string last_error = "no addresses";
        for (auto* ai = res; ai; ai = ai->ai_next) {
            int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
            if (fd < 0) continue;
            if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
                fd_ = fd;
                break;
            }
            last_error = std::strerror(errno);
            ::close(fd);
        }
        ::freeaddrinfo(res);
        if (fd_ < 0) throw TransportError("cannot connect to " + host + ":" + port_text + ": " + last_error);
        reader_.emplace(fd_);
        try {
            handshake(options);
        } catch (...) {
            abort_connection();
            throw;
        }
    }

    ~TcpConnection() override { close(); }

    void close() override {
        if (state_ == HandleState::Closed) return;
        if (state_ == HandleState::Ready) {
            try {
                send(encode_bye());
            } catch (const TransportError&) {
            }
        }
        abort_connection();
    }

protected:
    int write_fd() const override { return fd_; }
    LineReader& reader() override { return *reader_; }
    void abort_connection() override {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
        state_ = HandleState::Closed;
    }

private:
    int fd_ = -1;
    std::optional<LineReader> reader_;
};

class InProcessConnection final : public PolicyConnection {
public:
    explicit InProcessConnection(PolicyFn fn) : fn_(std::move(fn)) { state_ = HandleState::Ready; }

    std::string query(const PolicyRequest& request) override {
        if (state_ != HandleState::Ready) throw TransportError("policy handle is not ready");
        try {
            return fn_(request);
        } catch (const Error& e) {
            // Mirrors the error message a served policy would send back.
            return std::string("error: ") + e.what();
        }
    }
    void close() override { state_ = HandleState::Closed; }

private:
    PolicyFn fn_;
};

/// Reply for one inbound line on the policy side, or nothing for bye.
std::optional<std::string> answer(const std::string& line, const PolicyFn& fn) {
    Message m;
    try {
        m = decode_message(line);
    } catch (const ProtocolError& e) {
        return encode_error(e.what());
    }
    if (m.type == MessageType::Bye) return std::nullopt;
    if (m.type != MessageType::Request) return encode_error("expected a request");
    try {
        return encode_response(fn(m.request));
    } catch (const std::exception& e) {
        return encode_error(e.what());
    }
}

}  // namespace

void SessionRecorder::record(std::size_t connection, Direction direction, std::string_view line) {
    std::lock_guard lock(mu_);
    out_ << format_session_entry({connection, direction, std::string(line)}) << '\n';
    out_.flush();
}

PolicyHandle make_in_process(PolicyFn fn) { return std::make_unique<InProcessConnection>(std::move(fn)); }

PolicyHandle connect(const TransportDescriptor& d, std::shared_ptr<const GroundTruth> truth,
                     const ConnectOptions& options) {
    switch (d.kind) {
        case TransportDescriptor::Kind::Subprocess:
            return std::make_unique<SubprocessConnection>(d.command, options);
        case TransportDescriptor::Kind::Tcp:
            return std::make_unique<TcpConnection>(d.host, d.port, options);
        default:
            return make_in_process(make_builtin_policy(d, std::move(truth)));
    }
}

int serve_stream(std::istream& in, std::ostream& out, const PolicyFn& fn, std::string_view advertised_version) {
    std::string line;
    if (!std::getline(in, line)) return 0;
    Message hello;
    try {
        hello = decode_message(line);
    } catch (const ProtocolError& e) {
        out << encode_error(e.what()) << '\n' << std::flush;
        return 2;
    }
    out << encode_hello(advertised_version) << '\n' << std::flush;
    if (hello.type != MessageType::Hello || hello.version != advertised_version) return 2;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto reply = answer(line, fn);
        if (!reply) break;
        out << *reply << '\n' << std::flush;
    }
    return 0;
}

// ---------------------------------------------------------------------------

TcpPolicyServer::TcpPolicyServer(PolicyFn fn, const std::string& host, int port) : fn_(std::move(fn)) {
    ignore_sigpipe();
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (listen_fd_ < 0) throw TransportError(std::string("socket failed: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        throw ConfigError("listen address must be an IPv4 literal: " + host);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
        std::string err = std::strerror(errno);
        ::close(listen_fd_);
        throw TransportError("cannot listen on " + host + ":" + std::to_string(port) + ": " + err);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpPolicyServer::~TcpPolicyServer() {
    stop();
    if (listen_fd_ >= 0) ::close(listen_fd_);
}

void TcpPolicyServer::stop() { stop_ = true; }

void TcpPolicyServer::run() {
    std::vector<std::thread> workers;
    while (!stop_) {
        pollfd p{listen_fd_, POLLIN, 0};
        if (::poll(&p, 1, 100) <= 0) continue;
        int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
        if (fd < 0) continue;
        workers.emplace_back([this, fd] {
            LineReader reader(fd);
            bool greeted = false;
            try {
                while (!stop_) {
                    std::string line;
                    try {
                        line = reader.read_line(Clock::now() + std::chrono::milliseconds(200));
                    } catch (const PolicyTimeout&) {
                        continue;
                    }
                    if (!greeted) {
                        Message m = decode_message(line);
                        write_all(fd, encode_hello() + "\n");
                        if (m.type != MessageType::Hello || m.version != kProtocolVersion) break;
                        greeted = true;
                        continue;
                    }
                    auto reply = answer(line, fn_);
                    if (!reply) break;
                    write_all(fd, *reply + "\n");
                }
            } catch (const Error&) {
            }
            ::close(fd);
        });
    }
    for (auto& w : workers) w.join();
}

}  // namespace iva
