#ifndef GADFA_METRICS_HPP
#define GADFA_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "gadfa/tokenize.hpp"
#include "gadfa/util.hpp"

namespace gadfa {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::string variant;
};

namespace detail {

inline double f_measure(double p, double r) {
    return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

inline std::unordered_map<std::string, int> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
    std::unordered_map<std::string, int> counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (std::size_t k = 1; k < n; ++k) {
            key.push_back('\x1f');
            key += tokens[i + k];
        }
        ++counts[key];
    }
    return counts;
}

}  // namespace detail

// Clipped n-gram overlap, balanced F. Empty-side cases score zero.
inline RougeScore rouge_n(const std::vector<std::string>& candidate,
                          const std::vector<std::string>& reference, std::size_t n) {
    if (n < 1) throw ValidationError("rouge_n requires n >= 1");
    RougeScore s;
    s.variant = "rouge-" + std::to_string(n);
    const auto cand = detail::ngram_counts(candidate, n);
    const auto ref = detail::ngram_counts(reference, n);
    long cand_total = 0, ref_total = 0, overlap = 0;
    for (const auto& [g, c] : cand) cand_total += c;
    for (const auto& [g, c] : ref) {
        ref_total += c;
        auto it = cand.find(g);
        if (it != cand.end()) overlap += std::min(c, it->second);
    }
    if (cand_total > 0) s.precision = static_cast<double>(overlap) / static_cast<double>(cand_total);
    if (ref_total > 0) s.recall = static_cast<double>(overlap) / static_cast<double>(ref_total);
    s.f1 = detail::f_measure(s.precision, s.recall);
    return s;
}

// Longest-common-subsequence variant, balanced F.
inline RougeScore rouge_l(const std::vector<std::string>& candidate,
                          const std::vector<std::string>& reference) {
    RougeScore s;
    s.variant = "rouge-l";
    const std::size_t m = candidate.size(), n = reference.size();
    if (m == 0 || n == 0) return s;
    // rolling-row LCS DP
    std::vector<std::size_t> prev(n + 1, 0), cur(n + 1, 0);
    for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            if (candidate[i - 1] == reference[j - 1])
                cur[j] = prev[j - 1] + 1;
            else
                cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    const double lcs = static_cast<double>(prev[n]);
    s.precision = lcs / static_cast<double>(m);
    s.recall = lcs / static_cast<double>(n);
    s.f1 = detail::f_measure(s.precision, s.recall);
    return s;
}

// Unweighted mean of per-class F1 over the binary classes; a class with
// zero precision+recall contributes 0.
inline double macro_f1(const std::vector<int>& predictions, const std::vector<int>& golds) {
    if (predictions.size() != golds.size())
        throw ValidationError("macro_f1: prediction/gold length mismatch");
    std::set<int> classes(golds.begin(), golds.end());
    if (classes.size() < 2) throw ValidationError("macro_f1: golds contain a single class");
    double sum = 0.0;
    for (int cls : classes) {
        long tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < golds.size(); ++i) {
            const bool p = predictions[i] == cls, g = golds[i] == cls;
            tp += p && g;
            fp += p && !g;
            fn += !p && g;
        }
        const double prec = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double rec = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        sum += detail::f_measure(prec, rec);
    }
    return sum / static_cast<double>(classes.size());
}

enum class Sentiment { positive, negative, neutral };

inline std::string to_string(Sentiment s) {
    switch (s) {
        case Sentiment::positive: return "positive";
        case Sentiment::negative: return "negative";
        default: return "neutral";
    }
}

struct SentimentLexicon {
    std::unordered_map<std::string, double> weights;

    static SentimentLexicon load(const std::string& path) {
        SentimentLexicon lex;
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open lexicon: " + path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("token") || !j.contains("weight"))
                throw ValidationError("malformed lexicon line " + std::to_string(line_no));
            const double w = j["weight"].get<double>();
            if (!std::isfinite(w))
                throw ValidationError("non-finite lexicon weight at line " + std::to_string(line_no));
            lex.weights[j["token"].get<std::string>()] = w;
        }
        return lex;
    }

    double score_tokens(const std::vector<std::string>& tokens) const {
        double total = 0.0;
        for (const auto& t : tokens) {
            auto it = weights.find(t);
            if (it != weights.end()) total += it->second;
        }
        return total;
    }
};

inline Sentiment sentiment_label(const std::string& text, const SentimentLexicon& lexicon,
                                 const TokenizerConfig& cfg = {}) {
    const double score = lexicon.score_tokens(tokenize(text, cfg));
    if (score > 0.0) return Sentiment::positive;
    if (score < 0.0) return Sentiment::negative;
    return Sentiment::neutral;
}

inline double sentiment_agreement(const std::vector<std::string>& generated,
                                  const std::vector<std::string>& references,
                                  const SentimentLexicon& lexicon, const TokenizerConfig& cfg = {}) {
    if (generated.size() != references.size())
        throw ValidationError("sentiment_agreement: list length mismatch");
    if (generated.empty()) throw ValidationError("sentiment_agreement: empty pair list");
    std::size_t agree = 0;
    for (std::size_t i = 0; i < generated.size(); ++i)
        agree += sentiment_label(generated[i], lexicon, cfg) == sentiment_label(references[i], lexicon, cfg);
    return static_cast<double>(agree) / static_cast<double>(generated.size());
}

struct EntityList {
    std::vector<std::string> entities;  // longest first, then lexicographic

    static EntityList from_strings(std::vector<std::string> items) {
        EntityList list;
        for (auto& e : items) {
            if (e.empty()) throw ValidationError("entity list contains an empty string");
            list.entities.push_back(std::move(e));
        }
        std::sort(list.entities.begin(), list.entities.end(), [](const std::string& a, const std::string& b) {
            if (a.size() != b.size()) return a.size() > b.size();
            return a < b;
        });
        return list;
    }

    // entities.txt: one surface form per line
    static EntityList load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open entity list: " + path);
        std::vector<std::string> items;
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) items.push_back(line);
        }
        return from_strings(std::move(items));
    }

    // Exact substring match, longest-match, non-overlapping: matched byte
    // spans are consumed so nested shorter entities do not double-count.
    std::set<std::string> extract(const std::string& text) const {
        std::set<std::string> found;
        std::vector<bool> consumed(text.size(), false);
        for (const auto& e : entities) {
            std::size_t pos = 0;
            while ((pos = text.find(e, pos)) != std::string::npos) {
                bool free_span = true;
                for (std::size_t k = pos; k < pos + e.size(); ++k)
                    if (consumed[k]) { free_span = false; break; }
                if (free_span) {
                    for (std::size_t k = pos; k < pos + e.size(); ++k) consumed[k] = true;
                    found.insert(e);
                    pos += e.size();
                } else {
                    ++pos;
                }
            }
        }
        return found;
    }
};

// Fraction of pairs whose extracted entity sets intersect.
inline double entity_overlap(const std::vector<std::string>& generated,
                             const std::vector<std::string>& references, const EntityList& entities) {
    if (generated.size() != references.size())
        throw ValidationError("entity_overlap: list length mismatch");
    if (generated.empty()) throw ValidationError("entity_overlap: empty pair list");
    std::size_t agree = 0;
    for (std::size_t i = 0; i < generated.size(); ++i) {
        const auto a = entities.extract(generated[i]);
        const auto b = entities.extract(references[i]);
        agree += std::any_of(a.begin(), a.end(), [&](const std::string& e) { return b.count(e) > 0; });
    }
    return static_cast<double>(agree) / static_cast<double>(generated.size());
}

inline std::pair<double, double> pairwise_generator_agreement(const std::vector<std::string>& texts_a,
                                                              const std::vector<std::string>& texts_b,
                                                              const SentimentLexicon& lexicon,
                                                              const EntityList& entities,
                                                              const TokenizerConfig& cfg = {}) {
    return {sentiment_agreement(texts_a, texts_b, lexicon, cfg), entity_overlap(texts_a, texts_b, entities)};
}

struct GenerationStats {
    double avg_words = 0.0;
    std::size_t unique_tokens = 0;
    double words_from_input = 0.0;
    double positive_fraction = 0.0;
    double negative_fraction = 0.0;
    double neutral_fraction = 0.0;
};

// Corpus-level statistics of generated outputs against their paired inputs.
inline GenerationStats generation_stats(const std::vector<std::string>& outputs,
                                        const std::vector<std::string>& inputs,
                                        const SentimentLexicon& lexicon, const TokenizerConfig& cfg = {}) {
    if (outputs.empty()) throw ValidationError("generation_stats: empty output list");
    if (outputs.size() != inputs.size())
        throw ValidationError("generation_stats: output/input length mismatch");
    GenerationStats stats;
    std::unordered_set<std::string> vocab;
    std::size_t total_tokens = 0, copied_tokens = 0;
    std::size_t sentiments[3] = {0, 0, 0};
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const auto out_tokens = tokenize(outputs[i], cfg);
        const auto in_tokens = tokenize(inputs[i], cfg);
        const std::unordered_set<std::string> in_types(in_tokens.begin(), in_tokens.end());
        total_tokens += out_tokens.size();
        for (const auto& t : out_tokens) {
            vocab.insert(t);
            copied_tokens += in_types.count(t);
        }
        ++sentiments[static_cast<int>(sentiment_label(outputs[i], lexicon, cfg))];
    }
    stats.avg_words = static_cast<double>(total_tokens) / static_cast<double>(outputs.size());
    stats.unique_tokens = vocab.size();
    stats.words_from_input = total_tokens > 0 ? static_cast<double>(copied_tokens) / static_cast<double>(total_tokens) : 0.0;
    const double n = static_cast<double>(outputs.size());
    stats.positive_fraction = static_cast<double>(sentiments[static_cast<int>(Sentiment::positive)]) / n;
    stats.negative_fraction = static_cast<double>(sentiments[static_cast<int>(Sentiment::negative)]) / n;
    stats.neutral_fraction = static_cast<double>(sentiments[static_cast<int>(Sentiment::neutral)]) / n;
    return stats;
}

// JSON report entry in the shared metric-report format.
inline nlohmann::json metric_report(const std::string& metric, const std::string& variant, double value,
                                    std::optional<double> precision = std::nullopt,
                                    std::optional<double> recall = std::nullopt) {
    nlohmann::json j{{"metric", metric}, {"variant", variant}, {"value", value}};
    if (precision) j["precision"] = *precision;
    if (recall) j["recall"] = *recall;
    return j;
}

}  // namespace gadfa

#endif
