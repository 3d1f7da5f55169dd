#ifndef GADFA_CORPUS_HPP
#define GADFA_CORPUS_HPP

#include <algorithm>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "gadfa/date.hpp"
#include "gadfa/tokenize.hpp"
#include "gadfa/util.hpp"

namespace gadfa {

struct NewsArticle {
    std::string id;
    std::string stock;
    Day date;
    std::string title;
    std::string body;
    std::optional<std::string> source;

    bool operator==(const NewsArticle&) const = default;
};

struct AnalystReport {
    std::string id;
    std::string stock;
    Day date;
    std::optional<std::string> opinion;
    std::optional<std::string> risk_reminder;

    bool operator==(const AnalystReport&) const = default;
};

enum class PairKind { news_to_opinion, opinion_to_risk };

inline std::string to_string(PairKind k) {
    return k == PairKind::news_to_opinion ? "news_to_opinion" : "opinion_to_risk";
}

struct TextPair {
    std::string input;
    std::string target;
    PairKind kind = PairKind::news_to_opinion;

    bool operator==(const TextPair&) const = default;
};

namespace detail {

inline nlohmann::json parse_jsonl_line(const std::string& line, std::size_t line_no) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ValidationError("malformed JSONL at line " + std::to_string(line_no));
    return j;
}

inline std::string require_string(const nlohmann::json& j, const char* key, std::size_t line_no) {
    if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty())
        throw ValidationError(std::string("missing or empty field '") + key + "' at line " + std::to_string(line_no));
    return j[key].get<std::string>();
}

inline std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
    if (j.contains(key) && j[key].is_string()) return j[key].get<std::string>();
    return std::nullopt;
}

template <typename Record, typename ParseLine>
std::vector<Record> load_jsonl(const std::string& path, ParseLine parse) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::vector<Record> records;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        require_valid_utf8(line, path + " line " + std::to_string(line_no));
        Record rec = parse(parse_jsonl_line(line, line_no), line_no);
        if constexpr (requires { rec.id; }) {
            if (!seen_ids.insert(rec.id).second)
                throw ValidationError("duplicate id '" + rec.id + "' at line " + std::to_string(line_no));
        }
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace detail

// Loads news.jsonl. Records are validated, duplicate ids rejected, and the
// result sorted by (date, id) so downstream output order never depends on
// file order.
inline std::vector<NewsArticle> load_news(const std::string& path) {
    auto news = detail::load_jsonl<NewsArticle>(path, [](const nlohmann::json& j, std::size_t ln) {
        NewsArticle a;
        a.id = detail::require_string(j, "id", ln);
        a.stock = detail::require_string(j, "stock", ln);
        a.date = Day::from_iso(detail::require_string(j, "date", ln));
        a.title = j.contains("title") && j["title"].is_string() ? j["title"].get<std::string>() : "";
        a.body = detail::require_string(j, "body", ln);
        a.source = detail::optional_string(j, "source");
        return a;
    });
    std::sort(news.begin(), news.end(), [](const NewsArticle& a, const NewsArticle& b) {
        return std::tie(a.date, a.id) < std::tie(b.date, b.id);
    });
    return news;
}

inline std::vector<AnalystReport> load_reports(const std::string& path) {
    auto reports = detail::load_jsonl<AnalystReport>(path, [](const nlohmann::json& j, std::size_t ln) {
        AnalystReport r;
        r.id = detail::require_string(j, "id", ln);
        r.stock = detail::require_string(j, "stock", ln);
        r.date = Day::from_iso(detail::require_string(j, "date", ln));
        r.opinion = detail::optional_string(j, "opinion");
        r.risk_reminder = detail::optional_string(j, "risk_reminder");
        return r;
    });
    std::sort(reports.begin(), reports.end(), [](const AnalystReport& a, const AnalystReport& b) {
        return std::tie(a.date, a.id) < std::tie(b.date, b.id);
    });
    return reports;
}

inline nlohmann::json to_json(const NewsArticle& a) {
    nlohmann::json j{{"id", a.id}, {"stock", a.stock}, {"date", a.date.to_iso()}, {"title", a.title}, {"body", a.body}};
    if (a.source) j["source"] = *a.source;
    return j;
}

inline nlohmann::json to_json(const AnalystReport& r) {
    nlohmann::json j{{"id", r.id}, {"stock", r.stock}, {"date", r.date.to_iso()}};
    if (r.opinion) j["opinion"] = *r.opinion;
    if (r.risk_reminder) j["risk_reminder"] = *r.risk_reminder;
    return j;
}

template <typename Record>
void export_jsonl(const std::vector<Record>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    for (const auto& r : records) out << to_json(r).dump() << '\n';
}

struct PairSplit {
    std::vector<TextPair> pairs;            // all pairs, file order
    std::vector<std::size_t> train_index;   // indices into pairs
    std::vector<std::size_t> eval_index;
};

// Loads {input, target} pairs and attaches the requested kind. An 80/20
// train/eval index is produced by a seeded shuffle: the first 80% of the
// shuffled order trains, the rest evaluates.
inline PairSplit load_pairs(const std::string& path, PairKind kind, std::uint64_t seed) {
    PairSplit split;
    split.pairs = detail::load_jsonl<TextPair>(path, [kind](const nlohmann::json& j, std::size_t ln) {
        TextPair p;
        p.input = detail::require_string(j, "input", ln);
        p.target = detail::require_string(j, "target", ln);
        p.kind = kind;
        return p;
    });
    std::vector<std::size_t> order(split.pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    const std::size_t n_train = split.pairs.size() * 8 / 10;
    split.train_index.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.eval_index.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return split;
}

}  // namespace gadfa

#endif
