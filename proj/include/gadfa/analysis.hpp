#ifndef GADFA_ANALYSIS_HPP
#define GADFA_ANALYSIS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "gadfa/corpus.hpp"
#include "gadfa/tokenize.hpp"
#include "gadfa/util.hpp"

namespace gadfa {

struct PmiConfig {
    double alpha = 1.0;         // add-alpha smoothing on all counts
    std::size_t min_doc_freq = 5;
    TokenizerConfig tokenizer{TokenMode::mixed, true};
    bool include_bigrams = true;
    // Sensitivity knob: weight a word by its occurrence count within each
    // document instead of binary presence.
    bool token_frequency = false;

    void validate() const {
        if (alpha < 0.0) throw ValidationError("PMI smoothing alpha must be >= 0");
        if (min_doc_freq < 1) throw ValidationError("min_doc_freq must be >= 1");
    }
};

// Document-level word-presence counts under a behavior condition and its
// complement. A word counts at most once per document.
struct ContingencyCounts {
    std::size_t n_docs_condition = 0;
    std::size_t n_docs_not_condition = 0;
    std::map<std::string, std::size_t> docs_with_word_condition;
    std::map<std::string, std::size_t> docs_with_word_not_condition;

    std::size_t total_docs() const { return n_docs_condition + n_docs_not_condition; }

    std::size_t word_count(const std::string& w, bool condition) const {
        const auto& m = condition ? docs_with_word_condition : docs_with_word_not_condition;
        auto it = m.find(w);
        return it == m.end() ? 0 : it->second;
    }

    bool has_word(const std::string& w) const {
        return docs_with_word_condition.count(w) || docs_with_word_not_condition.count(w);
    }
};

namespace detail {

inline std::map<std::string, std::size_t> doc_terms(const std::string& text, const PmiConfig& cfg) {
    const auto tokens = tokenize(text, cfg.tokenizer);
    std::map<std::string, std::size_t> terms;
    for (const auto& t : tokens) ++terms[t];
    if (cfg.include_bigrams) {
        for (std::size_t i = 0; i + 1 < tokens.size(); ++i)
            ++terms[tokens[i] + " " + tokens[i + 1]];
    }
    if (!cfg.token_frequency)
        for (auto& [term, c] : terms) c = 1;
    return terms;
}

}  // namespace detail

inline ContingencyCounts build_counts(const std::vector<std::string>& documents,
                                      const std::vector<bool>& condition_flags, const PmiConfig& cfg) {
    cfg.validate();
    if (documents.size() != condition_flags.size())
        throw ValidationError("build_counts: document/flag length mismatch");
    ContingencyCounts counts;
    std::map<std::string, std::size_t> cond, not_cond;
    for (std::size_t i = 0; i < documents.size(); ++i) {
        auto& target = condition_flags[i] ? cond : not_cond;
        (condition_flags[i] ? counts.n_docs_condition : counts.n_docs_not_condition) += 1;
        for (const auto& [term, weight] : detail::doc_terms(documents[i], cfg)) target[term] += weight;
    }
    if (counts.n_docs_condition == 0 || counts.n_docs_not_condition == 0)
        throw ValidationError("build_counts: all documents share one condition value");
    // min_doc_freq filter over the whole universe
    std::unordered_set<std::string> vocab;
    for (const auto& [w, c] : cond) vocab.insert(w);
    for (const auto& [w, c] : not_cond) vocab.insert(w);
    for (const auto& w : vocab) {
        const std::size_t total = (cond.count(w) ? cond[w] : 0) + (not_cond.count(w) ? not_cond[w] : 0);
        if (total < cfg.min_doc_freq) continue;
        counts.docs_with_word_condition[w] = cond.count(w) ? cond[w] : 0;
        counts.docs_with_word_not_condition[w] = not_cond.count(w) ? not_cond[w] : 0;
    }
    return counts;
}

// PMI contrast score: log2[p(w,c)/(p(w)p(c))] - log2[p(w,~c)/(p(w)p(~c))].
// Probabilities are add-alpha ratios over the document universe. With
// alpha=0 a zero joint count yields a signed-infinity sentinel that the
// ranking excludes.
inline double pmi_score(const ContingencyCounts& counts, const std::string& word, const PmiConfig& cfg) {
    cfg.validate();
    if (!counts.has_word(word)) throw ValidationError("pmi_score: unknown word '" + word + "'");
    const double a = cfg.alpha;
    const double n = static_cast<double>(counts.total_docs());
    const double n_c = static_cast<double>(counts.n_docs_condition);
    const double n_nc = static_cast<double>(counts.n_docs_not_condition);
    const double n_wc = static_cast<double>(counts.word_count(word, true));
    const double n_wnc = static_cast<double>(counts.word_count(word, false));

    const double denom = n + 2.0 * a;
    const double p_c = (n_c + a) / denom;
    const double p_nc = (n_nc + a) / denom;
    const double p_w = (n_wc + n_wnc + a) / denom;
    const double p_wc = (n_wc + a) / denom;
    const double p_wnc = (n_wnc + a) / denom;

    if (a == 0.0 && n_wc == 0.0) return -std::numeric_limits<double>::infinity();
    if (a == 0.0 && n_wnc == 0.0) return std::numeric_limits<double>::infinity();
    return std::log2(p_wc / (p_w * p_c)) - std::log2(p_wnc / (p_w * p_nc));
}

struct ScoredWord {
    std::string word;
    double score = 0.0;
    std::size_t n_condition = 0;
    std::size_t n_not_condition = 0;
};

// Descending score; ties by higher joint condition count, then word order.
// Infinite sentinels are excluded.
inline std::vector<ScoredWord> keyword_ranking(const ContingencyCounts& counts, const PmiConfig& cfg,
                                               std::size_t top_k = 0) {
    std::vector<ScoredWord> ranked;
    for (const auto& [word, c] : counts.docs_with_word_condition) {
        const double score = pmi_score(counts, word, cfg);
        if (!std::isfinite(score)) continue;
        ranked.push_back({word, score, c, counts.word_count(word, false)});
    }
    std::sort(ranked.begin(), ranked.end(), [](const ScoredWord& a, const ScoredWord& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.n_condition != b.n_condition) return a.n_condition > b.n_condition;
        return a.word < b.word;
    });
    if (top_k > 0 && ranked.size() > top_k) ranked.resize(top_k);
    return ranked;
}

inline nlohmann::json to_json(const ScoredWord& s) {
    return nlohmann::json{{"word", s.word},
                          {"score", s.score},
                          {"n_cond", s.n_condition},
                          {"n_not_cond", s.n_not_condition}};
}

struct DateDistribution {
    std::vector<std::string> buckets;
    std::vector<double> fractions;

    nlohmann::json to_json() const { return nlohmann::json{{"buckets", buckets}, {"fractions", fractions}}; }
};

inline DateDistribution month_distribution(const std::vector<AnalystReport>& reports) {
    if (reports.empty()) throw ValidationError("month_distribution: no reports");
    static const char* names[12] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    std::array<std::size_t, 12> counts{};
    for (const auto& r : reports) ++counts[static_cast<std::size_t>(r.date.month() - 1)];
    DateDistribution dist;
    for (int m = 0; m < 12; ++m) {
        dist.buckets.push_back(names[m]);
        dist.fractions.push_back(static_cast<double>(counts[static_cast<std::size_t>(m)]) /
                                 static_cast<double>(reports.size()));
    }
    return dist;
}

// Within-month buckets: beginning = day 1-10, middle = 11-20, end = 21-EOM.
inline DateDistribution period_distribution(const std::vector<AnalystReport>& reports) {
    if (reports.empty()) throw ValidationError("period_distribution: no reports");
    std::array<std::size_t, 3> counts{};
    for (const auto& r : reports) {
        const int d = r.date.day_of_month();
        ++counts[d <= 10 ? 0u : (d <= 20 ? 1u : 2u)];
    }
    DateDistribution dist;
    dist.buckets = {"beginning", "middle", "end"};
    for (auto c : counts) dist.fractions.push_back(static_cast<double>(c) / static_cast<double>(reports.size()));
    return dist;
}

}  // namespace gadfa

#endif
