#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "tabprobe/llm.hpp"

namespace tabprobe {

struct EndpointConfig {
    std::string base_url;   // e.g. "https://api.example.com" or "http://127.0.0.1:8080"
    std::string path = "/v1/chat/completions";
    std::string model;      // model id sent on the wire
    std::string api_key;    // resolved from an environment variable, never a flag
    double requests_per_minute = 0.0;  // 0: unlimited
    int max_in_flight = 4;
};

// OpenAI-compatible chat-completions client. Retries with exponential
// backoff on 429 and 5xx; honors a token-bucket rate limit and a bound on
// concurrent requests. Thread-safe.
class OpenAiClient : public ChatModel {
public:
    explicit OpenAiClient(EndpointConfig config);
    ~OpenAiClient() override;

    std::string complete(const ChatTranscript& transcript,
                         const CompletionConfig& config) const override;
    std::string id() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Wraps any model with an on-disk response cache. Keys are
// sha256(model id, transcript digest, completion config); hits never touch
// the inner model. Files are JSON, one per response. Thread-safe.
class CachingModel : public ChatModel {
public:
    CachingModel(std::shared_ptr<const ChatModel> inner, std::string cache_dir);

    std::string complete(const ChatTranscript& transcript,
                         const CompletionConfig& config) const override;
    std::string id() const override { return inner_->id(); }

    int hits() const;
    int misses() const;

private:
    std::shared_ptr<const ChatModel> inner_;
    std::string cache_dir_;
    mutable std::mutex mutex_;
    mutable int hits_ = 0;
    mutable int misses_ = 0;
};

}  // namespace tabprobe
