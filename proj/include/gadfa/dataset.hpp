#ifndef GADFA_DATASET_HPP
#define GADFA_DATASET_HPP

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gadfa/corpus.hpp"
#include "gadfa/date.hpp"
#include "gadfa/util.hpp"

namespace gadfa {

enum class Split { train, dev, test, unassigned };

inline std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
        default: return "unassigned";
    }
}

inline Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "dev") return Split::dev;
    if (s == "test") return Split::test;
    if (s == "unassigned") return Split::unassigned;
    throw ValidationError("unknown split: '" + s + "'");
}

// One (stock, day t) decision point: did at least one analyst release a
// report on day t+1 given the news window [t-T, t]?
struct TimingInstance {
    std::string stock;
    Day day_t;
    int label = 0;  // 1 = release, 0 = no release
    std::vector<std::string> news_ids;
    int window_days = 0;  // the T of the window [t-T, t]
    Split split = Split::unassigned;

    bool operator==(const TimingInstance&) const = default;
    std::string key() const { return stock + "@" + day_t.to_iso(); }
};

enum class SplitStrategy { chronological, random };

inline SplitStrategy split_strategy_from_string(const std::string& s) {
    if (s == "chronological") return SplitStrategy::chronological;
    if (s == "random") return SplitStrategy::random;
    throw ValidationError("unknown split strategy: '" + s + "'");
}

struct BuildConfig {
    int window_days = 0;  // T
    std::uint64_t seed = 0;
    double train_ratio = 2717.0 / 3364.0;
    double dev_ratio = 322.0 / 3364.0;
    double test_ratio = 325.0 / 3364.0;
    SplitStrategy strategy = SplitStrategy::chronological;

    void validate() const {
        if (window_days < 0 || window_days > 30)
            throw ValidationError("window T must be in [0, 30]");
        if (train_ratio <= 0 || dev_ratio <= 0 || test_ratio <= 0)
            throw ValidationError("split ratios must be positive");
        const double sum = train_ratio + dev_ratio + test_ratio;
        if (sum < 1.0 - 1e-9 || sum > 1.0 + 1e-9)
            throw ValidationError("split ratios must sum to 1");
    }

    static BuildConfig from_json(const nlohmann::json& j) {
        BuildConfig cfg;
        if (j.contains("T")) cfg.window_days = j["T"].get<int>();
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("split_ratios")) {
            const auto& r = j["split_ratios"];
            if (!r.is_array() || r.size() != 3)
                throw ValidationError("split_ratios must be [train, dev, test]");
            cfg.train_ratio = r[0].get<double>();
            cfg.dev_ratio = r[1].get<double>();
            cfg.test_ratio = r[2].get<double>();
        }
        if (j.contains("split_strategy"))
            cfg.strategy = split_strategy_from_string(j["split_strategy"].get<std::string>());
        cfg.validate();
        return cfg;
    }
};

// Day-aligned view over both corpora. Ordered maps keep every downstream
// traversal deterministic.
struct EventIndex {
    std::map<std::pair<std::string, Day>, std::vector<std::string>> news_by_stock_day;
    std::map<std::string, std::set<Day>> report_days_by_stock;
    std::set<Day> calendar;

    bool has_report(const std::string& stock, Day d) const {
        auto it = report_days_by_stock.find(stock);
        return it != report_days_by_stock.end() && it->second.count(d) > 0;
    }
};

inline EventIndex index_events(const std::vector<NewsArticle>& news, const std::vector<AnalystReport>& reports) {
    EventIndex idx;
    for (const auto& a : news) {
        idx.news_by_stock_day[{a.stock, a.date}].push_back(a.id);
        idx.calendar.insert(a.date);
    }
    // loaders sort by (date, id); within one (stock, day) ids stay id-sorted
    for (const auto& r : reports) {
        idx.report_days_by_stock[r.stock].insert(r.date);
        idx.calendar.insert(r.date);
    }
    return idx;
}

// Positive instances: (stock, day t) with news on t and >=1 report on t+1.
// news_ids initially hold only day-t news; attach_window widens them.
inline std::vector<TimingInstance> extract_positives(const EventIndex& index, const BuildConfig& cfg) {
    std::vector<TimingInstance> out;
    for (const auto& [key, ids] : index.news_by_stock_day) {
        const auto& [stock, day] = key;
        if (!index.has_report(stock, day + 1)) continue;
        TimingInstance inst;
        inst.stock = stock;
        inst.day_t = day;
        inst.label = 1;
        inst.news_ids = ids;
        inst.window_days = cfg.window_days;
        out.push_back(std::move(inst));
    }
    return out;
}

// Stock-controlled negatives: same stock pool as the positives, news on
// day t, no report on t+1, sampled uniformly without replacement.
inline std::vector<TimingInstance> sample_negatives(const EventIndex& index,
                                                    const std::vector<TimingInstance>& positives,
                                                    const BuildConfig& cfg) {
    std::set<std::string> positive_stocks;
    for (const auto& p : positives) positive_stocks.insert(p.stock);

    std::vector<std::pair<std::string, Day>> candidates;
    for (const auto& [key, ids] : index.news_by_stock_day) {
        const auto& [stock, day] = key;
        if (!positive_stocks.count(stock)) continue;
        if (index.has_report(stock, day + 1)) continue;  // would be a positive
        candidates.emplace_back(stock, day);
    }
    if (candidates.size() < positives.size())
        throw ValidationError("negative sampling shortfall: need " + std::to_string(positives.size()) +
                              " candidates but only " + std::to_string(candidates.size()) + " eligible");

    Rng rng(cfg.seed);
    auto picks = rng.sample_without_replacement(candidates.size(), positives.size());
    std::sort(picks.begin(), picks.end());

    std::vector<TimingInstance> out;
    out.reserve(picks.size());
    for (std::size_t i : picks) {
        const auto& [stock, day] = candidates[i];
        TimingInstance inst;
        inst.stock = stock;
        inst.day_t = day;
        inst.label = 0;
        inst.news_ids = index.news_by_stock_day.at({stock, day});
        inst.window_days = cfg.window_days;
        out.push_back(std::move(inst));
    }
    return out;
}

// Widens an instance's news to every same-stock article in [t-T, t],
// chronological order.
inline TimingInstance attach_window(TimingInstance instance, const EventIndex& index, int window_days) {
    std::vector<std::string> ids;
    for (int offset = window_days; offset >= 0; --offset) {
        auto it = index.news_by_stock_day.find({instance.stock, instance.day_t - offset});
        if (it == index.news_by_stock_day.end()) continue;
        ids.insert(ids.end(), it->second.begin(), it->second.end());
    }
    if (ids.empty())
        throw ValidationError("instance " + instance.key() + " has no news in its window");
    instance.news_ids = std::move(ids);
    instance.window_days = window_days;
    return instance;
}

namespace detail {

// Largest-remainder apportionment of n into the three split ratios.
inline std::array<std::size_t, 3> apportion(std::size_t n, const BuildConfig& cfg) {
    const double ratios[3] = {cfg.train_ratio, cfg.dev_ratio, cfg.test_ratio};
    std::array<std::size_t, 3> counts{};
    double remainders[3];
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = static_cast<double>(n) * ratios[i];
        counts[static_cast<std::size_t>(i)] = static_cast<std::size_t>(exact);
        remainders[i] = exact - static_cast<double>(counts[static_cast<std::size_t>(i)]);
        assigned += counts[static_cast<std::size_t>(i)];
    }
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (remainders[a] != remainders[b]) return remainders[a] > remainders[b];
        return a < b;  // ties favor train, then dev
    });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned)
        ++counts[static_cast<std::size_t>(order[k % 3])];
    return counts;
}

}  // namespace detail

// Assigns splits per class. Chronological ordering puts the latest days in
// test (no temporal leakage); random is a seeded shuffle.
inline std::vector<TimingInstance> split_dataset(std::vector<TimingInstance> instances, const BuildConfig& cfg) {
    cfg.validate();
    for (int label : {0, 1}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < instances.size(); ++i)
            if (instances[i].label == label) members.push_back(i);
        if (members.size() < 3)
            throw ValidationError("class " + std::to_string(label) + " has fewer than 3 instances");

        if (cfg.strategy == SplitStrategy::chronological) {
            std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
                return std::tie(instances[a].day_t, instances[a].stock) <
                       std::tie(instances[b].day_t, instances[b].stock);
            });
        } else {
            // distinct stream per class so adding one class's instances
            // cannot reshuffle the other
            Rng rng(cfg.seed ^ static_cast<std::uint64_t>(label + 1));
            rng.shuffle(members);
        }
        const auto counts = detail::apportion(members.size(), cfg);
        std::size_t pos = 0;
        for (std::size_t k = 0; k < counts[0]; ++k) instances[members[pos++]].split = Split::train;
        for (std::size_t k = 0; k < counts[1]; ++k) instances[members[pos++]].split = Split::dev;
        for (std::size_t k = 0; k < counts[2]; ++k) instances[members[pos++]].split = Split::test;
    }
    return instances;
}

// End-to-end build: index, positives, windows, negatives, splits. Output is
// sorted by (day_t, stock, label) so a rebuild is byte-identical.
inline std::vector<TimingInstance> build_dataset(const std::vector<NewsArticle>& news,
                                                 const std::vector<AnalystReport>& reports,
                                                 const BuildConfig& cfg) {
    cfg.validate();
    const EventIndex index = index_events(news, reports);
    auto positives = extract_positives(index, cfg);
    auto negatives = sample_negatives(index, positives, cfg);
    std::vector<TimingInstance> all;
    all.reserve(positives.size() + negatives.size());
    for (auto& p : positives) all.push_back(attach_window(std::move(p), index, cfg.window_days));
    for (auto& n : negatives) all.push_back(attach_window(std::move(n), index, cfg.window_days));
    all = split_dataset(std::move(all), cfg);
    std::sort(all.begin(), all.end(), [](const TimingInstance& a, const TimingInstance& b) {
        return std::tie(a.day_t, a.stock, a.label) < std::tie(b.day_t, b.stock, b.label);
    });
    return all;
}

inline nlohmann::json to_json(const TimingInstance& inst) {
    return nlohmann::json{{"stock", inst.stock},
                          {"day_t", inst.day_t.to_iso()},
                          {"label", inst.label},
                          {"T", inst.window_days},
                          {"news_ids", inst.news_ids},
                          {"split", to_string(inst.split)}};
}

inline void save_instances(const std::vector<TimingInstance>& instances, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    for (const auto& inst : instances) out << to_json(inst).dump() << '\n';
}

inline std::vector<TimingInstance> load_instances(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::vector<TimingInstance> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto j = detail::parse_jsonl_line(line, line_no);
        TimingInstance inst;
        inst.stock = detail::require_string(j, "stock", line_no);
        inst.day_t = Day::from_iso(detail::require_string(j, "day_t", line_no));
        inst.label = j.at("label").get<int>();
        inst.window_days = j.at("T").get<int>();
        inst.news_ids = j.at("news_ids").get<std::vector<std::string>>();
        inst.split = split_from_string(j.value("split", "unassigned"));
        if (inst.label != 0 && inst.label != 1)
            throw ValidationError("label must be 0 or 1 at line " + std::to_string(line_no));
        if (inst.news_ids.empty())
            throw ValidationError("news_ids empty at line " + std::to_string(line_no));
        out.push_back(std::move(inst));
    }
    return out;
}

}  // namespace gadfa

#endif
