#include "rrd/gateway.hpp"

#include "rrd/digest.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

namespace rrd::gateway {

using nlohmann::json;

std::string canonical_request(const ChatRequest& req) {
    json j;
    j["model"] = req.model;
    j["system"] = req.system ? json(*req.system) : json(nullptr);
    j["user"] = req.user;
    j["temperature"] = req.temperature;
    j["max_tokens"] = req.max_tokens;
    j["seed"] = req.seed ? json(*req.seed) : json(nullptr);
    return j.dump();
}

std::string request_digest(const ChatRequest& req) {
    return sha256_hex(canonical_request(req));
}

// ---------------------------------------------------------------------------
// MockTransport

std::shared_ptr<MockTransport> MockTransport::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read mock script: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_script(buf.str());
}

std::shared_ptr<MockTransport> MockTransport::from_script(const std::string& jsonl) {
    auto t = std::make_shared<MockTransport>();
    t->load(jsonl);
    return t;
}

void MockTransport::load(const std::string& jsonl) {
    std::istringstream in(jsonl);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json j = json::parse(line, nullptr, true);
        Entry e;
        const json& m = j.at("match");
        if (m.is_array()) {
            for (const auto& s : m) e.needles.push_back(s.get<std::string>());
        } else {
            e.needles.push_back(m.get<std::string>());
        }
        if (j.contains("responses")) {
            for (const auto& r : j["responses"]) e.responses.push_back(r.get<std::string>());
        } else if (j.contains("response")) {
            e.responses.push_back(j["response"].get<std::string>());
        }
        e.fail_times = j.value("fail_times", 0);
        if (j.contains("status")) e.status = j["status"].get<int>();
        if (e.responses.empty() && !e.status && e.fail_times == 0) {
            throw std::runtime_error("mock script line " + std::to_string(line_no) +
                                     ": record has no response");
        }
        entries_.push_back(std::move(e));
    }
}

TransportReply MockTransport::send(const ChatRequest& req) {
    calls_.fetch_add(1);
    std::string canon = canonical_request(req);
    std::string digest = sha256_hex(canon);
    std::lock_guard<std::mutex> lock(mu_);
    for (auto& e : entries_) {
        bool matched = true;
        for (const auto& needle : e.needles) {
            if (needle == digest) continue;
            if (canon.find(needle) == std::string::npos) {
                matched = false;
                break;
            }
        }
        if (!matched) continue;
        if (e.fail_times > 0) {
            --e.fail_times;
            return {503, "scripted transient failure", std::nullopt};
        }
        if (e.status) return {*e.status, "scripted failure", std::nullopt};
        std::size_t idx = std::min<std::size_t>(e.hits, e.responses.size() - 1);
        ++e.hits;
        return {200, e.responses[idx], std::nullopt};
    }
    return {404, "no mock entry matches request: " + canon, std::nullopt};
}

// ---------------------------------------------------------------------------
// HttpTransport

HttpTransport::HttpTransport(std::string endpoint, std::string api_key, int timeout_seconds)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)),
      timeout_seconds_(timeout_seconds) {}

TransportReply HttpTransport::send(const ChatRequest& req) {
    calls_.fetch_add(1);
    json messages = json::array();
    if (req.system) messages.push_back({{"role", "system"}, {"content", *req.system}});
    messages.push_back({{"role", "user"}, {"content", req.user}});
    json payload = {
        {"model", req.model},
        {"messages", messages},
        {"temperature", req.temperature},
        {"max_tokens", req.max_tokens},
    };
    if (req.seed) payload["seed"] = *req.seed;

    httplib::Client client(endpoint_);
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = client.Post("/v1/chat/completions", headers, payload.dump(), "application/json");
    if (!res) {
        if (res.error() == httplib::Error::ConnectionTimeout ||
            res.error() == httplib::Error::Read) {
            return {408, "timeout", std::nullopt};
        }
        return {0, httplib::to_string(res.error()), std::nullopt};
    }
    if (res->status != 200) return {res->status, res->body, std::nullopt};
    json body = json::parse(res->body, nullptr, false);
    if (body.is_discarded() || !body.contains("choices") || body["choices"].empty() ||
        !body["choices"][0].contains("message")) {
        return {502, "malformed provider response: " + res->body, std::nullopt};
    }
    TransportReply reply;
    reply.status = 200;
    reply.text = body["choices"][0]["message"].value("content", "");
    if (body.contains("usage")) {
        TokenUsage u;
        u.prompt_tokens = body["usage"].value("prompt_tokens", 0);
        u.completion_tokens = body["usage"].value("completion_tokens", 0);
        reply.usage = u;
    }
    return reply;
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::shared_ptr<Transport> transport, GatewayConfig config)
    : transport_(std::move(transport)), config_(std::move(config)) {
    if (!config_.cache_dir.empty()) {
        std::filesystem::create_directories(config_.cache_dir);
    }
}

double Gateway::backoff_ms(int attempt) const {
    double d = config_.backoff_base_ms;
    for (int i = 1; i < attempt; ++i) d *= config_.backoff_factor;
    return d;
}

std::optional<std::string> Gateway::cache_lookup(const std::string& digest) {
    {
        std::lock_guard<std::mutex> lock(cache_mu_);
        auto it = memory_cache_.find(digest);
        if (it != memory_cache_.end()) return it->second;
    }
    if (config_.cache_dir.empty()) return std::nullopt;
    auto path = std::filesystem::path(config_.cache_dir) / (digest + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("text")) return std::nullopt;
    std::string text = j["text"].get<std::string>();
    std::lock_guard<std::mutex> lock(cache_mu_);
    memory_cache_[digest] = text;
    return text;
}

void Gateway::cache_store(const std::string& digest, const ChatRequest& req,
                          const std::string& text) {
    {
        std::lock_guard<std::mutex> lock(cache_mu_);
        memory_cache_[digest] = text;
    }
    if (config_.cache_dir.empty()) return;
    json record = {{"digest", digest}, {"model", req.model}, {"text", text}};
    auto dir = std::filesystem::path(config_.cache_dir);
    auto tmp = dir / (digest + ".tmp");
    auto final = dir / (digest + ".json");
    std::lock_guard<std::mutex> lock(cache_mu_);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << record.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, final);
}

ChatResult Gateway::complete(const ChatRequest& req) {
    if (req.user.empty()) throw std::invalid_argument("ChatRequest.user must be nonempty");
    if (!std::isfinite(req.temperature) || req.temperature < 0) {
        throw std::invalid_argument("ChatRequest.temperature must be finite and >= 0");
    }
    std::string digest = request_digest(req);
    if (auto hit = cache_lookup(digest)) {
        return {*hit, /*cached=*/true, /*attempts=*/1, std::nullopt};
    }
    int attempt = 0;
    TransportReply reply;
    while (true) {
        ++attempt;
        reply = transport_->send(req);
        if (reply.status == 200) break;
        if (reply.status == 401 || reply.status == 403) throw AuthError(reply.text);
        bool transient = reply.status == 408 || reply.status == 429 || reply.status >= 500 ||
                         reply.status == 0;
        if (!transient || attempt >= config_.attempt_cap) {
            if (reply.status == 408) throw TimeoutError();
            throw ProviderError(reply.status, reply.text);
        }
        auto delay = backoff_ms(attempt);
        if (delay > 0) {
            std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay));
        }
    }
    cache_store(digest, req, reply.text);
    ChatResult result;
    result.text = reply.text;
    result.cached = false;
    result.attempts = attempt;
    result.usage = reply.usage;
    return result;
}

void parallel_for(std::size_t n, int parallelism, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
    std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(parallelism), n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (auto& t : threads) t.join();
}

std::vector<CompletionOutcome> Gateway::complete_many(std::span<const ChatRequest> requests,
                                                      int parallelism) {
    std::vector<CompletionOutcome> outcomes(requests.size());
    parallel_for(requests.size(), parallelism, [&](std::size_t i) {
        try {
            outcomes[i].result = complete(requests[i]);
        } catch (const std::exception& e) {
            outcomes[i].error = e.what();
        }
    });
    return outcomes;
}

} // namespace rrd::gateway
