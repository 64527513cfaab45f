#include "tabprobe/openai_client.hpp"

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "tabprobe/errors.hpp"
#include "tabprobe/util.hpp"

#include <httplib.h>

namespace tabprobe {

namespace {

// requests/minute token bucket + in-flight bound, shared by all threads
// using one client.
class Throttle {
public:
    Throttle(double requests_per_minute, int max_in_flight)
        : rate_(requests_per_minute), max_in_flight_(max_in_flight),
          tokens_(requests_per_minute > 0 ? requests_per_minute / 60.0 : 0.0),
          last_(std::chrono::steady_clock::now()) {}

    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
        ++in_flight_;
        if (rate_ <= 0) return;
        const double per_second = rate_ / 60.0;
        for (;;) {
            auto now = std::chrono::steady_clock::now();
            tokens_ = std::min(rate_ / 60.0,
                               tokens_ + std::chrono::duration<double>(now - last_).count() *
                                             per_second);
            last_ = now;
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            double wait_s = (1.0 - tokens_) / per_second;
            lock.unlock();
            std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
            lock.lock();
        }
    }

    void release() {
        {
            std::lock_guard lock(mutex_);
            --in_flight_;
        }
        cv_.notify_one();
    }

private:
    double rate_;
    int max_in_flight_;
    int in_flight_ = 0;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
    std::condition_variable cv_;
};

}  // namespace

struct OpenAiClient::Impl {
    EndpointConfig config;
    mutable Throttle throttle;

    explicit Impl(EndpointConfig cfg)
        : config(std::move(cfg)),
          throttle(config.requests_per_minute, std::max(1, config.max_in_flight)) {}

    std::string post_once(const std::string& body, const CompletionConfig& completion,
                          int& status) const {
        httplib::Client client(config.base_url);
        client.set_connection_timeout(std::chrono::duration<double>(completion.timeout_seconds));
        client.set_read_timeout(std::chrono::duration<double>(completion.timeout_seconds));
        client.set_write_timeout(std::chrono::duration<double>(completion.timeout_seconds));
        httplib::Headers headers;
        if (!config.api_key.empty())
            headers.emplace("Authorization", "Bearer " + config.api_key);
        auto result = client.Post(config.path, headers, body, "application/json");
        if (!result) {
            status = 0;
            return {};
        }
        status = result->status;
        return result->body;
    }
};

OpenAiClient::OpenAiClient(EndpointConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
    if (impl_->config.base_url.empty()) throw ConfigInvalid("endpoint base URL is empty");
}

OpenAiClient::~OpenAiClient() = default;

std::string OpenAiClient::id() const {
    return impl_->config.base_url + "#" + impl_->config.model;
}

std::string OpenAiClient::complete(const ChatTranscript& transcript,
                                   const CompletionConfig& config) const {
    nlohmann::json body;
    body["model"] = impl_->config.model;
    body["temperature"] = config.temperature;
    // characters are a conservative upper bound on tokens
    body["max_tokens"] = config.max_output_chars;
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& message : transcript)
        messages.push_back({{"role", role_name(message.role)}, {"content", message.content}});
    body["messages"] = std::move(messages);
    const std::string payload = body.dump();

    double backoff_s = 0.25;
    int status = 0;
    std::string response_body;
    for (int attempt = 0; attempt <= config.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff_s));
            backoff_s *= 2.0;
        }
        impl_->throttle.acquire();
        try {
            response_body = impl_->post_once(payload, config, status);
        } catch (...) {
            impl_->throttle.release();
            throw;
        }
        impl_->throttle.release();

        if (status == 401 || status == 403) throw AuthFailure("endpoint rejected the API key");
        if (status == 429 || status >= 500 || status == 0) continue;  // transient
        break;
    }
    if (status == 0) throw Timeout("endpoint unreachable after " +
                                   std::to_string(config.retries + 1) + " attempts");
    if (status == 429) throw RateLimited("still rate-limited after retries");
    if (status != 200)
        throw MalformedResponse("HTTP " + std::to_string(status) + ": " + response_body);

    try {
        auto parsed = nlohmann::json::parse(response_body);
        return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw MalformedResponse(std::string("bad completion payload: ") + e.what());
    }
}

// --- cache -------------------------------------------------------------------

CachingModel::CachingModel(std::shared_ptr<const ChatModel> inner, std::string cache_dir)
    : inner_(std::move(inner)), cache_dir_(std::move(cache_dir)) {
    std::filesystem::create_directories(cache_dir_);
}

int CachingModel::hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
}

int CachingModel::misses() const {
    std::lock_guard lock(mutex_);
    return misses_;
}

std::string CachingModel::complete(const ChatTranscript& transcript,
                                   const CompletionConfig& config) const {
    std::ostringstream key_material;
    key_material << inner_->id() << '\x1e' << transcript_digest(transcript) << '\x1e'
                 << config.temperature << '\x1f' << config.max_output_chars << '\x1f'
                 << join(config.stop_sequences, "\x1f");
    const std::string key = sha256_hex(key_material.str());
    const std::filesystem::path file = std::filesystem::path(cache_dir_) / (key + ".json");

    {
        std::lock_guard lock(mutex_);
        std::ifstream in(file);
        if (in) {
            nlohmann::json entry = nlohmann::json::parse(in);
            ++hits_;
            return entry.at("response").get<std::string>();
        }
    }
    std::string response = inner_->complete(transcript, config);
    {
        std::lock_guard lock(mutex_);
        std::ifstream check(file);
        if (!check) {  // first writer wins
            nlohmann::json entry{{"model", inner_->id()},
                                 {"digest", transcript_digest(transcript)},
                                 {"response", response}};
            std::ofstream out(file);
            if (!out) throw IoFailure("cannot write cache entry " + file.string());
            out << entry.dump(2) << "\n";
        }
        ++misses_;
    }
    return response;
}

}  // namespace tabprobe
