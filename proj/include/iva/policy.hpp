#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "iva/episode.hpp"
#include "iva/protocol.hpp"

namespace iva {

/// Dataset ground truth the reference policies answer from.
class GroundTruth {
public:
    GroundTruth(const std::vector<EpisodeRecord>& episodes, DistractorPools pools, TaskLexicon lexicon);

    struct StepTruth {
        Action action{};
        std::vector<TracePoint> trace;
    };

    /// Throws UnknownEpisode.
    const StepTruth& step(const std::string& episode_id, std::size_t index) const;
    /// True-premise target of the episode. Throws UnknownEpisode.
    const std::string& target(const std::string& episode_id) const;

    const DistractorPools& pools() const noexcept { return pools_; }
    const TaskLexicon& lexicon() const noexcept { return lexicon_; }

private:
    struct EpisodeTruth {
        std::string target;
        std::vector<StepTruth> steps;
    };
    std::map<std::string, EpisodeTruth, std::less<>> episodes_;
    DistractorPools pools_;
    TaskLexicon lexicon_;
};

/// Maps a request to the raw response text.
using PolicyFn = std::function<std::string(const PolicyRequest&)>;

/// Accepts present targets with the ground-truth action, clarifies absent
/// in-domain objects and refuses everything else.
std::string oracle_policy(const PolicyRequest& request, const GroundTruth& truth);

/// Always accepts and replays the ground-truth action.
std::string naive_policy(const PolicyRequest& request, const GroundTruth& truth);

/// On false-premise requests answers like the oracle with probability `p`
/// (a deterministic function of seed, episode and step), like the naive
/// policy otherwise. True-premise requests get the oracle answer.
std::string bernoulli_policy(const PolicyRequest& request, const GroundTruth& truth, double p, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Transport

/// `builtin:oracle`, `builtin:naive`, `builtin:bernoulli:P[:SEED]`,
/// `exec:COMMAND` (run through /bin/sh -c) or `tcp:HOST:PORT`.
struct TransportDescriptor {
    enum class Kind { Builtin, Subprocess, Tcp };
    Kind kind = Kind::Builtin;
    std::string builtin;  // oracle | naive | bernoulli
    double p = 0.5;
    std::uint64_t seed = 0;
    std::string command;
    std::string host;
    int port = 0;

    /// Throws ConfigError.
    static TransportDescriptor parse(std::string_view text);
    std::string to_string() const;
};

/// Shared sink for session recording; safe to use from several connections.
class SessionRecorder {
public:
    explicit SessionRecorder(std::ostream& out) : out_(out) {}
    std::size_t open_connection() { return next_++; }
    void record(std::size_t connection, Direction direction, std::string_view line);

private:
    std::ostream& out_;
    std::mutex mu_;
    std::atomic<std::size_t> next_{0};
};

enum class HandleState { Connecting, Ready, Closed };

/// One policy connection. Exactly one request is in flight at a time; a handle
/// is never shared between concurrently running episodes.
class PolicyConnection {
public:
    virtual ~PolicyConnection() = default;
    PolicyConnection() = default;
    PolicyConnection(const PolicyConnection&) = delete;
    PolicyConnection& operator=(const PolicyConnection&) = delete;

    /// Returns the response text. A policy-side error message comes back as
    /// that text so the grammar classifies it as malformed.
    /// Throws TransportError or PolicyTimeout (which also closes the handle).
    virtual std::string query(const PolicyRequest& request) = 0;
    virtual void close() {}
    HandleState state() const noexcept { return state_; }

protected:
    HandleState state_ = HandleState::Connecting;
};

using PolicyHandle = std::unique_ptr<PolicyConnection>;

struct ConnectOptions {
    int handshake_timeout_ms = 10000;
    std::shared_ptr<SessionRecorder> recorder;  // optional
};

/// Opens a handle. Builtin descriptors need `truth`.
/// Throws TransportError, VersionMismatch or ConfigError.
PolicyHandle connect(const TransportDescriptor& descriptor, std::shared_ptr<const GroundTruth> truth,
                     const ConnectOptions& options = {});

/// In-process handle around a policy function.
PolicyHandle make_in_process(PolicyFn fn);

PolicyFn make_builtin_policy(const TransportDescriptor& descriptor, std::shared_ptr<const GroundTruth> truth);

// ---------------------------------------------------------------------------
// Serving

/// Policy side of the protocol over a pair of streams: answers the hello, then
/// one response line per request line until EOF or bye. Undecodable lines and
/// policy exceptions are answered with an error message. Returns 0 on a clean
/// finish and 2 on a handshake version mismatch.
int serve_stream(std::istream& in, std::ostream& out, const PolicyFn& fn,
                 std::string_view advertised_version = kProtocolVersion);

/// Line-delimited TCP server; each accepted connection is served on its own thread.
class TcpPolicyServer {
public:
    TcpPolicyServer(PolicyFn fn, const std::string& host, int port);
    ~TcpPolicyServer();
    TcpPolicyServer(const TcpPolicyServer&) = delete;
    TcpPolicyServer& operator=(const TcpPolicyServer&) = delete;

    int port() const noexcept { return port_; }
    /// Blocks until stop() is called.
    void run();
    void stop();

private:
    PolicyFn fn_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> stop_{false};
};

}  // namespace iva
