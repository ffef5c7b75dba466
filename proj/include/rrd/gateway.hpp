#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rrd::gateway {

struct ChatRequest {
    std::string model;
    std::optional<std::string> system;
    std::string user;
    double temperature = 0.0;
    int max_tokens = 2048;
    std::optional<long> seed;
};

/// Stable serialization of the fields that define a request's identity.
/// Equal requests (field-wise) produce equal strings.
std::string canonical_request(const ChatRequest& req);

/// Content digest of canonical_request, used as cache key and mock match target.
std::string request_digest(const ChatRequest& req);

struct TokenUsage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct ChatResult {
    std::string text;
    bool cached = false;
    int attempts = 1;
    std::optional<TokenUsage> usage;
};

struct ProviderError : std::runtime_error {
    ProviderError(int status_, std::string body_)
        : std::runtime_error("provider error " + std::to_string(status_) + ": " + body_),
          status(status_), body(std::move(body_)) {}
    int status;
    std::string body;
};

struct AuthError : std::runtime_error {
    explicit AuthError(const std::string& body) : std::runtime_error("auth error: " + body) {}
};

struct TimeoutError : std::runtime_error {
    TimeoutError() : std::runtime_error("request timed out") {}
};

struct TransportReply {
    int status = 200;
    std::string text; // assistant message body on success, error body otherwise
    std::optional<TokenUsage> usage;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual TransportReply send(const ChatRequest& req) = 0;
    /// Number of send() calls made so far (the "network call" count).
    virtual long calls() const = 0;
};

/// Deterministic scripted transport. The script is JSONL, one record per
/// line: {"match": <digest-or-substring or array of substrings>,
///        "response": <text>} with optional "responses": [texts] consumed in
/// order on repeated hits (last repeats), "fail_times": n to fail with a
/// transient 503 that many times before answering, and "status": code to
/// always fail with that status. Substrings are matched against
/// canonical_request(req); first matching record wins.
class MockTransport : public Transport {
public:
    static std::shared_ptr<MockTransport> from_file(const std::string& path);
    static std::shared_ptr<MockTransport> from_script(const std::string& jsonl);

    TransportReply send(const ChatRequest& req) override;
    long calls() const override { return calls_.load(); }

private:
    struct Entry {
        std::vector<std::string> needles; // all must appear (or one equals the digest)
        std::vector<std::string> responses;
        int fail_times = 0;
        int hits = 0;
        std::optional<int> status;
    };
    void load(const std::string& jsonl);
    std::vector<Entry> entries_;
    std::mutex mu_;
    std::atomic<long> calls_{0};
};

/// OpenAI-compatible chat-completions transport over HTTP(S).
class HttpTransport : public Transport {
public:
    HttpTransport(std::string endpoint, std::string api_key, int timeout_seconds = 120);
    TransportReply send(const ChatRequest& req) override;
    long calls() const override { return calls_.load(); }

private:
    std::string endpoint_;
    std::string api_key_;
    int timeout_seconds_;
    std::atomic<long> calls_{0};
};

struct GatewayConfig {
    int attempt_cap = 3;
    double backoff_base_ms = 250.0;
    double backoff_factor = 2.0;
    std::string cache_dir; // empty: in-memory cache only
};

struct CompletionOutcome {
    std::optional<ChatResult> result;
    std::string error; // nonempty iff result is absent
    bool ok() const { return result.has_value(); }
};

/// Provider-agnostic chat-completion client with retries and response
/// caching. Safe for concurrent calls; the cache serializes writes.
class Gateway {
public:
    Gateway(std::shared_ptr<Transport> transport, GatewayConfig config);

    /// Returns cached text when the request digest is known; otherwise calls
    /// the transport, retrying transient failures with exponential backoff up
    /// to the attempt cap, and caches the response before returning.
    ChatResult complete(const ChatRequest& req);

    /// Positionally aligned results with at most `parallelism` in-flight
    /// calls. Per-slot failures are reported in the outcome, never thrown.
    std::vector<CompletionOutcome> complete_many(std::span<const ChatRequest> requests,
                                                 int parallelism);

    long transport_calls() const { return transport_->calls(); }
    const GatewayConfig& config() const { return config_; }

    /// Backoff delay before retrying `attempt` (1-based); monotone
    /// nondecreasing in the attempt number.
    double backoff_ms(int attempt) const;

private:
    std::optional<std::string> cache_lookup(const std::string& digest);
    void cache_store(const std::string& digest, const ChatRequest& req, const std::string& text);

    std::shared_ptr<Transport> transport_;
    GatewayConfig config_;
    std::mutex cache_mu_;
    std::map<std::string, std::string> memory_cache_;
};

/// Runs fn(i) for i in [0, n) with at most `parallelism` worker threads.
void parallel_for(std::size_t n, int parallelism, const std::function<void(std::size_t)>& fn);

} // namespace rrd::gateway
