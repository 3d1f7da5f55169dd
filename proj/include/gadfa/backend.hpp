#ifndef GADFA_BACKEND_HPP
#define GADFA_BACKEND_HPP

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "gadfa/metrics.hpp"
#include "gadfa/tokenize.hpp"
#include "gadfa/util.hpp"

namespace gadfa {

enum class GenTask { opinion, risk, summary };

inline std::string to_string(GenTask t) {
    switch (t) {
        case GenTask::opinion: return "opinion";
        case GenTask::risk: return "risk";
        default: return "summary";
    }
}

inline GenTask gen_task_from_string(const std::string& s) {
    if (s == "opinion") return GenTask::opinion;
    if (s == "risk") return GenTask::risk;
    if (s == "summary") return GenTask::summary;
    throw ValidationError("unknown generation task: '" + s + "'");
}

// A text-generation backend: a batch of inputs maps to a batch of outputs
// of the same length and order.
class GeneratorBackend {
public:
    virtual ~GeneratorBackend() = default;
    virtual const std::string& name() const = 0;
    virtual std::vector<std::string> generate(GenTask task, const std::vector<std::string>& inputs) = 0;
};

// Order/length-checked invocation; every backend call goes through here.
inline std::vector<std::string> call_backend(GeneratorBackend& backend, GenTask task,
                                             const std::vector<std::string>& inputs) {
    auto outputs = backend.generate(task, inputs);
    if (outputs.size() != inputs.size())
        throw TransportError("backend '" + backend.name() + "' returned " + std::to_string(outputs.size()) +
                             " outputs for " + std::to_string(inputs.size()) + " inputs");
    return outputs;
}

namespace textgen {

// Sentence segmentation shared by the lead-sentence baselines. Splits on
// terminal punctuation (ASCII and fullwidth), keeping the delimiter.
inline std::vector<std::string> split_sentences(const std::string& text) {
    static const std::vector<std::string> terminals = {"。", "！", "？", ".", "!", "?", "\n"};
    std::vector<std::string> sentences;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
        bool matched = false;
        for (const auto& t : terminals) {
            if (text.compare(i, t.size(), t) == 0) {
                if (t != "\n") current += t;
                if (!current.empty() && current.find_first_not_of(" \t\r") != std::string::npos)
                    sentences.push_back(current);
                current.clear();
                i += t.size();
                matched = true;
                break;
            }
        }
        if (!matched) {
            current.push_back(text[i]);
            ++i;
        }
    }
    if (!current.empty() && current.find_first_not_of(" \t\r") != std::string::npos)
        sentences.push_back(current);
    return sentences;
}

inline std::string lead_sentences(const std::string& text, std::size_t k) {
    const auto sentences = split_sentences(text);
    std::string out;
    for (std::size_t i = 0; i < sentences.size() && i < k; ++i) {
        if (!out.empty()) out += " ";
        std::string s = sentences[i];
        const auto start = s.find_first_not_of(" \t\r");
        out += start == std::string::npos ? s : s.substr(start);
    }
    return out;
}

inline constexpr const char* kPositiveClause = "We hold a positive view and see further upside.";
inline constexpr const char* kNegativeClause = "We hold a negative view and see downside ahead.";
inline constexpr const char* kNeutralClause = "We hold a neutral view pending further signals.";

// Lead-k extract of the most recent article plus a templated stance clause
// whose polarity follows the lexicon sentiment of the full news window.
// news_texts must be in chronological order.
inline std::string baseline_opinion(const std::vector<std::string>& news_texts, std::size_t k,
                                    const SentimentLexicon& lexicon, const TokenizerConfig& cfg = {}) {
    if (news_texts.empty()) throw ValidationError("baseline_opinion: no news texts");
    std::string all;
    for (const auto& t : news_texts) {
        if (!all.empty()) all += " ";
        all += t;
    }
    const double score = lexicon.score_tokens(tokenize(all, cfg));
    const char* clause = score > 0.0 ? kPositiveClause : (score < 0.0 ? kNegativeClause : kNeutralClause);
    std::string lead = lead_sentences(news_texts.back(), k);
    if (!lead.empty()) lead += " ";
    return lead + clause;
}

inline constexpr const char* kRiskPrefix = "Key downside risks include ";
inline constexpr const char* kRiskSuffix = " reversal.";
inline constexpr const char* kRiskGeneric = "Key downside risks include unexpected market reversal.";

// Template risk reminder around the opinion's most frequent content bigram.
// Tokens already in the template scaffold are excluded from candidates.
inline std::string baseline_risk(const std::string& opinion, const TokenizerConfig& cfg = {}) {
    if (opinion.empty()) throw ValidationError("baseline_risk: empty opinion");
    static const std::unordered_set<std::string> scaffold = {"key", "downside", "risks", "include", "reversal",
                                                             "Key",  "Downside", "Risks", "Include", "Reversal"};
    const auto tokens = tokenize(opinion, cfg);
    std::map<std::string, std::size_t> bigram_freq;
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        if (scaffold.count(tokens[i]) || scaffold.count(tokens[i + 1])) continue;
        ++bigram_freq[tokens[i] + " " + tokens[i + 1]];
    }
    std::string best;
    std::size_t best_count = 0;
    for (const auto& [bg, c] : bigram_freq) {
        if (c > best_count) {  // ties resolved lexicographically by map order
            best = bg;
            best_count = c;
        }
    }
    if (best.empty()) return kRiskGeneric;
    return kRiskPrefix + best + kRiskSuffix;
}

}  // namespace textgen

// Deterministic in-process generator used as the desk-scale stand-in for
// fine-tuned language models.
class BaselineBackend : public GeneratorBackend {
public:
    BaselineBackend(std::string name, SentimentLexicon lexicon, std::size_t lead_k = 2,
                    TokenizerConfig cfg = {})
        : name_(std::move(name)), lexicon_(std::move(lexicon)), lead_k_(lead_k), tok_(cfg) {}

    const std::string& name() const override { return name_; }

    std::vector<std::string> generate(GenTask task, const std::vector<std::string>& inputs) override {
        std::vector<std::string> out;
        out.reserve(inputs.size());
        for (const auto& input : inputs) {
            switch (task) {
                case GenTask::opinion:
                    out.push_back(textgen::baseline_opinion({input}, lead_k_, lexicon_, tok_));
                    break;
                case GenTask::risk:
                    out.push_back(textgen::baseline_risk(input, tok_));
                    break;
                case GenTask::summary:
                    out.push_back(textgen::lead_sentences(input, lead_k_));
                    break;
            }
        }
        return out;
    }

private:
    std::string name_;
    SentimentLexicon lexicon_;
    std::size_t lead_k_;
    TokenizerConfig tok_;
};

// Test backend: emits one marker token depending on whether the input
// contains a trigger pattern. Used to show that a generated channel can
// carry decision-relevant information absent from the other channels.
class InjectBackend : public GeneratorBackend {
public:
    InjectBackend(std::string name, std::string pattern, std::string on_match, std::string on_miss)
        : name_(std::move(name)), pattern_(std::move(pattern)),
          on_match_(std::move(on_match)), on_miss_(std::move(on_miss)) {}

    const std::string& name() const override { return name_; }

    std::vector<std::string> generate(GenTask, const std::vector<std::string>& inputs) override {
        std::vector<std::string> out;
        out.reserve(inputs.size());
        for (const auto& input : inputs)
            out.push_back(input.find(pattern_) != std::string::npos ? on_match_ : on_miss_);
        return out;
    }

private:
    std::string name_;
    std::string pattern_;
    std::string on_match_;
    std::string on_miss_;
};

// Transcript cache: (task, input-hash) -> output, persisted as JSONL.
// Replaying a recorded transcript performs zero backend calls.
class TranscriptCache {
public:
    static std::string key_of(GenTask task, const std::string& input) {
        return hex64(fnv1a(to_string(task) + "\x1f" + input));
    }

    static TranscriptCache load(const std::string& path) {
        TranscriptCache cache;
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open transcript: " + path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("task") || !j.contains("input_hash") || !j.contains("output"))
                throw ValidationError("malformed transcript line " + std::to_string(line_no));
            cache.entries_[j["task"].get<std::string>() + ":" + j["input_hash"].get<std::string>()] =
                j["output"].get<std::string>();
        }
        return cache;
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write transcript: " + path);
        for (const auto& [key, output] : entries_) {
            const auto colon = key.find(':');
            out << nlohmann::json{{"task", key.substr(0, colon)},
                                  {"input_hash", key.substr(colon + 1)},
                                  {"output", output}}
                       .dump()
                << '\n';
        }
    }

    void put(GenTask task, const std::string& input, const std::string& output) {
        entries_[to_string(task) + ":" + key_of(task, input)] = output;
    }

    std::optional<std::string> get(GenTask task, const std::string& input) const {
        auto it = entries_.find(to_string(task) + ":" + key_of(task, input));
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::string, std::string> entries_;  // ordered for stable files
};

enum class TranscriptMode { off, record, replay };

// Wraps another backend with a transcript cache. In replay mode the inner
// backend is never touched; a miss is an error rather than a silent call.
class TranscriptBackend : public GeneratorBackend {
public:
    TranscriptBackend(std::shared_ptr<GeneratorBackend> inner, TranscriptCache cache, TranscriptMode mode)
        : inner_(std::move(inner)), cache_(std::move(cache)), mode_(mode) {}

    const std::string& name() const override { return inner_->name(); }

    std::vector<std::string> generate(GenTask task, const std::vector<std::string>& inputs) override {
        std::lock_guard<std::mutex> lock(mu_);
        std::vector<std::string> outputs(inputs.size());
        std::vector<std::size_t> missing;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            if (auto hit = cache_.get(task, inputs[i])) {
                outputs[i] = *hit;
            } else {
                missing.push_back(i);
            }
        }
        if (!missing.empty()) {
            if (mode_ == TranscriptMode::replay)
                throw TransportError("transcript replay miss for backend '" + name() + "' (" +
                                     std::to_string(missing.size()) + " inputs)");
            std::vector<std::string> batch;
            batch.reserve(missing.size());
            for (std::size_t i : missing) batch.push_back(inputs[i]);
            auto generated = call_backend(*inner_, task, batch);
            for (std::size_t k = 0; k < missing.size(); ++k) {
                outputs[missing[k]] = generated[k];
                cache_.put(task, inputs[missing[k]], generated[k]);
            }
        }
        return outputs;
    }

    const TranscriptCache& cache() const { return cache_; }

private:
    std::shared_ptr<GeneratorBackend> inner_;
    TranscriptCache cache_;
    TranscriptMode mode_;
    std::mutex mu_;
};

}  // namespace gadfa

#endif
