#include "tabprobe/llm.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "tabprobe/errors.hpp"
#include "tabprobe/scoring.hpp"
#include "tabprobe/util.hpp"

namespace tabprobe {

const char* kRefusalString = "I cannot complete this text.";

const char* role_name(ChatMessage::Role role) {
    switch (role) {
        case ChatMessage::System: return "system";
        case ChatMessage::User: return "user";
        case ChatMessage::Assistant: return "assistant";
    }
    return "user";
}

std::string transcript_digest(const ChatTranscript& transcript) {
    std::string canonical;
    for (const auto& msg : transcript) {
        canonical += role_name(msg.role);
        canonical.push_back('\x1f');
        canonical += msg.content;
        canonical.push_back('\x1e');
    }
    return sha256_hex(canonical);
}

static void validate_transcript(const ChatTranscript& transcript) {
    if (transcript.empty()) throw ConfigInvalid("empty transcript");
    size_t start = transcript[0].role == ChatMessage::System ? 1 : 0;
    if (start == transcript.size()) throw ConfigInvalid("transcript has only a system message");
    ChatMessage::Role expected = ChatMessage::User;
    for (size_t i = start; i < transcript.size(); ++i) {
        if (transcript[i].role == ChatMessage::System)
            throw ConfigInvalid("system message not at transcript start");
        if (transcript[i].role != expected)
            throw ConfigInvalid("transcript roles must alternate user/assistant");
        expected = expected == ChatMessage::User ? ChatMessage::Assistant : ChatMessage::User;
    }
    if (transcript.back().role != ChatMessage::User)
        throw ConfigInvalid("transcript must end with a user message");
}

std::string chat(const ChatModel& model, const ChatTranscript& transcript,
                 const CompletionConfig& config) {
    validate_transcript(transcript);
    std::string out = model.complete(transcript, config);
    size_t cut = std::string::npos;
    for (const auto& stop : config.stop_sequences) {
        if (stop.empty()) continue;
        size_t pos = out.find(stop);
        if (pos != std::string::npos) cut = std::min(cut, pos);
    }
    if (cut != std::string::npos) out.resize(cut);
    auto cps = utf8_decode(out);
    if (static_cast<int>(cps.size()) > config.max_output_chars) {
        cps.resize(static_cast<size_t>(config.max_output_chars));
        out = utf8_encode(cps);
    }
    return out;
}

std::string verbatim_continue(const std::string& corpus, const std::string& prefix, int n_chars,
                              int min_match) {
    size_t max_len = std::min(prefix.size(), corpus.size());
    if (max_len < static_cast<size_t>(min_match)) return kRefusalString;
    auto occurs = [&](size_t len) {
        return corpus.find(prefix.substr(prefix.size() - len)) != std::string::npos;
    };
    if (!occurs(static_cast<size_t>(min_match))) return kRefusalString;
    // Longest matching suffix, by binary search (occurrence is monotone in length).
    size_t lo = static_cast<size_t>(min_match), hi = max_len;
    while (lo < hi) {
        size_t mid = (lo + hi + 1) / 2;
        if (occurs(mid))
            lo = mid;
        else
            hi = mid - 1;
    }
    std::string suffix = prefix.substr(prefix.size() - lo);
    size_t pos = corpus.rfind(suffix);
    size_t start = pos + suffix.size();
    if (start >= corpus.size()) return "";
    return corpus.substr(start, static_cast<size_t>(n_chars));
}

std::string VerbatimMemorizer::complete(const ChatTranscript& transcript,
                                        const CompletionConfig& config) const {
    const std::string& prefix = transcript.back().content;
    return verbatim_continue(corpus_, prefix, config.max_output_chars);
}

VerbatimMemorizer VerbatimMemorizer::for_dataset(const TabularDataset& dataset,
                                                 const std::optional<std::string>& kv_feature) {
    std::string corpus = serialize_csv(dataset);
    if (kv_feature) {
        size_t idx = dataset.feature_index(*kv_feature);
        corpus += "\n";
        for (size_t r = 0; r < dataset.n_rows(); ++r) {
            corpus += render_row_kv(dataset, r, kv_feature);
            corpus += ", " + *kv_feature + " = " + dataset.rows[r][idx].raw + "\n";
        }
    }
    return VerbatimMemorizer(std::move(corpus));
}

NoisyMemorizer::NoisyMemorizer(std::string corpus, double corruption, uint64_t seed)
    : corpus_(std::move(corpus)), corruption_(corruption), seed_(seed) {
    std::set<char> chars(corpus_.begin(), corpus_.end());
    chars.erase('\n');
    alphabet_.assign(chars.begin(), chars.end());
    if (alphabet_.size() < 2) alphabet_ = "0123456789";
}

std::string NoisyMemorizer::id() const {
    return "sim:noisy:" + format_fixed(corruption_, 3);
}

std::string NoisyMemorizer::complete(const ChatTranscript& transcript,
                                     const CompletionConfig& config) const {
    std::string out = verbatim_continue(corpus_, transcript.back().content, config.max_output_chars);
    if (out == kRefusalString || corruption_ <= 0.0) return out;
    auto rng = make_rng(seed_, transcript_digest(transcript));
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<size_t> pick(0, alphabet_.size() - 1);
    for (char& c : out) {
        if (c == '\n') continue;  // keep line structure so per-row scoring stays meaningful
        if (coin(rng) < corruption_) {
            char repl = c;
            while (repl == c) repl = alphabet_[pick(rng)];
            c = repl;
        }
    }
    return out;
}

ModePredictor::ModePredictor(const std::vector<std::string>& table) {
    mode_ = mode_and_accuracy(table).first;
}

void ScriptedModel::add(const ChatTranscript& transcript, std::string response) {
    responses_[transcript_digest(transcript)] = std::move(response);
}

std::string ScriptedModel::complete(const ChatTranscript& transcript,
                                    const CompletionConfig&) const {
    auto it = responses_.find(transcript_digest(transcript));
    if (it != responses_.end()) return it->second;
    if (fallback_) return *fallback_;
    throw MalformedResponse("scripted model has no response for this transcript");
}

std::vector<std::pair<std::string, std::string>> parse_kv_pairs(const std::string& text) {
    std::string body = text;
    if (body.rfind("IF ", 0) == 0) body = body.substr(3);
    if (size_t then_pos = body.find(" THEN "); then_pos != std::string::npos)
        body = body.substr(0, then_pos);

    // Names contain no commas, so each " = " is preceded by a name that
    // reaches back to the previous ", "; values may themselves contain ", ".
    std::vector<size_t> eq_positions;
    for (size_t pos = body.find(" = "); pos != std::string::npos; pos = body.find(" = ", pos + 1))
        eq_positions.push_back(pos);
    std::vector<std::pair<std::string, std::string>> pairs;
    for (size_t k = 0; k < eq_positions.size(); ++k) {
        size_t eq = eq_positions[k];
        size_t name_start = 0;
        if (size_t comma = body.rfind(", ", eq); comma != std::string::npos && (k > 0)) {
            // the comma that introduces this name is the last one before it
            size_t prev_value_start = eq_positions[k - 1] + 3;
            comma = body.rfind(", ", eq);
            if (comma != std::string::npos && comma >= prev_value_start) name_start = comma + 2;
        }
        size_t value_start = eq + 3;
        size_t value_end = body.size();
        if (k + 1 < eq_positions.size()) {
            size_t next_eq = eq_positions[k + 1];
            size_t comma = body.rfind(", ", next_eq);
            if (comma != std::string::npos && comma >= value_start) value_end = comma;
        }
        std::string name = trim(body.substr(name_start, eq - name_start));
        std::string value = body.substr(value_start, value_end - value_start);
        if (!name.empty()) pairs.emplace_back(name, value);
    }
    return pairs;
}

LabelOracle::LabelOracle(TabularDataset dataset) : dataset_(std::move(dataset)) {
    if (!dataset_.target_feature) throw ConfigInvalid("LabelOracle needs a dataset with a target");
}

std::string LabelOracle::complete(const ChatTranscript& transcript, const CompletionConfig&) const {
    auto pairs = parse_kv_pairs(first_line(transcript.back().content));
    size_t target = *dataset_.target_index();
    for (size_t r = 0; r < dataset_.n_rows(); ++r) {
        bool match = !pairs.empty();
        for (const auto& [name, value] : pairs) {
            size_t c;
            try {
                c = dataset_.feature_index(name);
            } catch (const UnknownFeature&) {
                match = false;
                break;
            }
            if (dataset_.rows[r][c].raw != value) {
                match = false;
                break;
            }
        }
        if (match) return dataset_.rows[r][target].raw;
    }
    return "";
}

}  // namespace tabprobe
