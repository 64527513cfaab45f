#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tabprobe/dataset.hpp"

namespace tabprobe {

struct ChatMessage {
    enum Role { System, User, Assistant };
    Role role;
    std::string content;
};

using ChatTranscript = std::vector<ChatMessage>;

const char* role_name(ChatMessage::Role role);

struct CompletionConfig {
    double temperature = 0.0;
    int max_output_chars = 2000;
    std::vector<std::string> stop_sequences;
    int retries = 3;
    double timeout_seconds = 30.0;
};

// Canonical transcript digest (SHA-256 hex). Used for the Scripted model
// and as the response-cache key.
std::string transcript_digest(const ChatTranscript& transcript);

class ChatModel {
public:
    virtual ~ChatModel() = default;
    // Raw completion. Implementations must be safe to call concurrently.
    virtual std::string complete(const ChatTranscript& transcript,
                                 const CompletionConfig& config) const = 0;
    virtual std::string id() const = 0;
};

// Uniform entry point: validates the transcript, applies stop sequences and
// the output-length cap on top of the raw completion.
std::string chat(const ChatModel& model, const ChatTranscript& transcript,
                 const CompletionConfig& config = {});

// --- simulated models ------------------------------------------------------

// Continues `prefix` with the next characters of `corpus` after the last
// occurrence of the longest matching suffix of the prefix. If no suffix of
// at least `min_match` characters occurs in the corpus, returns the fixed
// refusal string.
extern const char* kRefusalString;
std::string verbatim_continue(const std::string& corpus, const std::string& prefix, int n_chars,
                              int min_match = 20);

// Emits its training corpus verbatim; the canonical stand-in for a model
// that has memorized the dataset.
class VerbatimMemorizer : public ChatModel {
public:
    explicit VerbatimMemorizer(std::string corpus) : corpus_(std::move(corpus)) {}
    std::string complete(const ChatTranscript& transcript, const CompletionConfig& config) const override;
    std::string id() const override { return "sim:verbatim"; }
    const std::string& corpus() const { return corpus_; }

    // Corpus covering both the CSV serialization and the "Feature = Value"
    // rendering with `kv_feature` asked for last, so one memorizer serves
    // every memorization test.
    static VerbatimMemorizer for_dataset(const TabularDataset& dataset,
                                         const std::optional<std::string>& kv_feature = std::nullopt);

private:
    std::string corpus_;
};

// Verbatim continuation with independent per-character corruption.
class NoisyMemorizer : public ChatModel {
public:
    NoisyMemorizer(std::string corpus, double corruption, uint64_t seed = 0);
    std::string complete(const ChatTranscript& transcript, const CompletionConfig& config) const override;
    std::string id() const override;

private:
    std::string corpus_;
    std::string alphabet_;
    double corruption_;
    uint64_t seed_;
};

// Always answers the most frequent entry of its token table.
class ModePredictor : public ChatModel {
public:
    explicit ModePredictor(const std::vector<std::string>& table);
    std::string complete(const ChatTranscript&, const CompletionConfig&) const override { return mode_; }
    std::string id() const override { return "sim:mode"; }

private:
    std::string mode_;
};

// Replays responses recorded against transcript digests.
class ScriptedModel : public ChatModel {
public:
    explicit ScriptedModel(std::map<std::string, std::string> responses,
                           std::optional<std::string> fallback = std::nullopt)
        : responses_(std::move(responses)), fallback_(std::move(fallback)) {}
    void add(const ChatTranscript& transcript, std::string response);
    std::string complete(const ChatTranscript& transcript, const CompletionConfig& config) const override;
    std::string id() const override { return "sim:scripted"; }

private:
    std::map<std::string, std::string> responses_;
    std::optional<std::string> fallback_;
};

// Looks up the query row of a classification prompt in the dataset and
// answers the true target value. Perfect-predictor stand-in.
class LabelOracle : public ChatModel {
public:
    explicit LabelOracle(TabularDataset dataset);
    std::string complete(const ChatTranscript& transcript, const CompletionConfig& config) const override;
    std::string id() const override { return "sim:label-oracle"; }

private:
    TabularDataset dataset_;
};

class MajorityClass : public ChatModel {
public:
    explicit MajorityClass(std::string label) : label_(std::move(label)) {}
    std::string complete(const ChatTranscript&, const CompletionConfig&) const override { return label_; }
    std::string id() const override { return "sim:majority:" + label_; }

private:
    std::string label_;
};

// Parses "name = value" pairs out of a prompt line ("IF ... THEN y =" or a
// plain comma-joined list). Shared by LabelOracle and the sampling parser.
std::vector<std::pair<std::string, std::string>> parse_kv_pairs(const std::string& text);

}  // namespace tabprobe
