#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "tabprobe/errors.hpp"
#include "tabprobe/llm.hpp"
#include "tabprobe/openai_client.hpp"
#include "tabprobe/scoring.hpp"
#include "tabprobe/util.hpp"

using namespace tabprobe;

TEST_CASE("chat validates transcripts and applies stops and length caps") {
    // the last occurrence of the prompt suffix is the one that gets continued
    VerbatimMemorizer model("abcdefghijklmnopqrstuvwxyzabcdefghijklmnopqrstuvwxyz0123456789");
    ChatTranscript ok = {{ChatMessage::System, "s"},
                         {ChatMessage::User, "abcdefghijklmnopqrstuvwxyz"}};
    CompletionConfig config;
    config.max_output_chars = 4;
    CHECK(chat(model, ok, config) == "0123");

    config.max_output_chars = 10;
    config.stop_sequences = {"34"};
    CHECK(chat(model, ok, config) == "012");

    CHECK_THROWS_AS(chat(model, {}, config), ConfigInvalid);
    ChatTranscript ends_assistant = {{ChatMessage::User, "x"}, {ChatMessage::Assistant, "y"}};
    CHECK_THROWS_AS(chat(model, ends_assistant, config), ConfigInvalid);
    ChatTranscript double_user = {{ChatMessage::User, "x"}, {ChatMessage::User, "y"}};
    CHECK_THROWS_AS(chat(model, double_user, config), ConfigInvalid);
}

TEST_CASE("verbatim continuation picks the longest suffix and refuses short matches") {
    std::string corpus = "header\nrow-one-123456789012345\nrow-two-123456789012345\nrow-three\n";
    CHECK(verbatim_continue(corpus, "prefix unrelated " + corpus.substr(0, 30), 10) ==
          corpus.substr(30, 10));
    CHECK(verbatim_continue(corpus, "completely different text of some length", 10) ==
          kRefusalString);
    CHECK(verbatim_continue(corpus, "short", 10) == kRefusalString);
}

TEST_CASE("noisy memorizer corruption rate is near nominal") {
    std::string corpus;
    auto rng = make_rng(3, "noise-corpus");
    std::uniform_int_distribution<int> digit(0, 9);
    for (int i = 0; i < 12000; ++i) corpus += static_cast<char>('0' + digit(rng));
    NoisyMemorizer model(corpus, 0.05, 7);
    ChatTranscript t = {{ChatMessage::User, corpus.substr(0, 100)}};
    CompletionConfig config;
    config.max_output_chars = 10000;
    std::string out = chat(model, t, config);
    std::string truth = corpus.substr(100, out.size());
    double rate = static_cast<double>(levenshtein(truth, out)) / out.size();
    CHECK(rate == doctest::Approx(0.05).epsilon(0.4));
    // determinism: same transcript, same corruption
    CHECK(chat(model, t, config) == out);
}

TEST_CASE("scripted model replays digests and label oracle answers the true target") {
    ChatTranscript t = {{ChatMessage::User, "question"}};
    ScriptedModel scripted({{transcript_digest(t), "1"}});
    CHECK(chat(scripted, t) == "1");
    ChatTranscript other = {{ChatMessage::User, "unknown"}};
    CHECK_THROWS_AS(chat(scripted, other), MalformedResponse);

    auto ds = testutil::make_classification(20, 1);
    LabelOracle oracle(ds);
    ChatTranscript q = {{ChatMessage::User, render_row_kv(ds, 4, ds.target_feature)}};
    CHECK(chat(oracle, q) == ds.rows[4].back().raw);
}

TEST_CASE("mode predictor answers the most frequent entry") {
    ModePredictor model({"x", "y", "x", "z"});
    ChatTranscript t = {{ChatMessage::User, "anything"}};
    CHECK(chat(model, t) == "x");
}

TEST_CASE("parse_kv_pairs handles scaffolds and values with commas") {
    auto pairs = parse_kv_pairs("IF a = 1, b = Doe, John THEN y =");
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0] == std::pair<std::string, std::string>{"a", "1"});
    CHECK(pairs[1] == std::pair<std::string, std::string>{"b", "Doe, John"});
}

namespace {

struct StubServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;
    std::atomic<int> requests{0};
    std::atomic<int> rejected{0};
    int reject_first = 0;  // respond 429 to this many requests

    explicit StubServer(std::string reply = "stub-reply") {
        server.Post("/v1/chat/completions", [this, reply](const httplib::Request& req,
                                                           httplib::Response& res) {
            int count = ++requests;
            if (count <= reject_first) {
                ++rejected;
                res.status = 429;
                return;
            }
            auto body = nlohmann::json::parse(req.body);
            nlohmann::json out = {
                {"choices",
                 {{{"message", {{"role", "assistant"}, {"content", reply}}}}}}};
            res.set_content(out.dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~StubServer() {
        server.stop();
        thread.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

}  // namespace

TEST_CASE("openai client retries through 429s and surfaces auth failures") {
    StubServer stub;
    stub.reject_first = 3;
    EndpointConfig endpoint;
    endpoint.base_url = stub.url();
    endpoint.model = "test-model";
    OpenAiClient client(endpoint);
    ChatTranscript t = {{ChatMessage::User, "hello"}};
    CompletionConfig config;
    config.retries = 3;
    CHECK(chat(client, t, config) == "stub-reply");
    CHECK(stub.requests.load() == 4);  // 3 rejections + 1 success

    SUBCASE("gives up when retries are exhausted") {
        stub.requests = 0;
        stub.reject_first = 100;
        CompletionConfig two;
        two.retries = 2;
        CHECK_THROWS_AS(chat(client, t, two), RateLimited);
        CHECK(stub.requests.load() == 3);
    }
}

TEST_CASE("openai client rejects bad status and malformed payloads") {
    httplib::Server server;
    server.Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        res.status = 401;
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    EndpointConfig endpoint;
    endpoint.base_url = "http://127.0.0.1:" + std::to_string(port);
    endpoint.model = "m";
    OpenAiClient client(endpoint);
    ChatTranscript t = {{ChatMessage::User, "x"}};
    CHECK_THROWS_AS(chat(client, t), AuthFailure);
    server.stop();
    thread.join();
}

TEST_CASE("response cache: second run never touches the network") {
    auto dir = std::filesystem::temp_directory_path() / "tabprobe-cache-test";
    std::filesystem::remove_all(dir);
    StubServer stub;
    EndpointConfig endpoint;
    endpoint.base_url = stub.url();
    endpoint.model = "m";
    auto client = std::make_shared<OpenAiClient>(endpoint);
    CachingModel cached(client, dir.string());

    ChatTranscript t = {{ChatMessage::User, "cached question"}};
    std::string first = chat(cached, t);
    CHECK(stub.requests.load() == 1);
    CHECK(chat(cached, t) == first);
    CHECK(stub.requests.load() == 1);  // served from disk
    CHECK(cached.hits() == 1);
    CHECK(cached.misses() == 1);

    // a different completion config is a different cache key
    CompletionConfig warm;
    warm.temperature = 0.7;
    chat(cached, t, warm);
    CHECK(stub.requests.load() == 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("concurrent dispatch returns the same multiset as serial dispatch") {
    auto ds = testutil::make_synthetic(50, 12);
    auto model = VerbatimMemorizer::for_dataset(ds);
    std::vector<ChatTranscript> prompts;
    for (size_t r = 0; r + 1 < 20; ++r)
        prompts.push_back({{ChatMessage::User, serialize_csv(ds).substr(0, 60 + 7 * r)}});

    std::vector<std::string> serial(prompts.size()), parallel(prompts.size());
    for (size_t i = 0; i < prompts.size(); ++i) serial[i] = chat(model, prompts[i]);
    parallel_for(prompts.size(), 8, [&](size_t i) { parallel[i] = chat(model, prompts[i]); });
    auto a = serial, b = parallel;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
    CHECK(serial == parallel);  // index-addressed, so even order matches
}
