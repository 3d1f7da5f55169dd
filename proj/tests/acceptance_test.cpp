// Acceptance suite: one PASS/FAIL line per criterion, exit code = number of
// failures. Runs fully offline; the only sockets are loopback mocks.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gadfa/analysis.hpp"
#include "gadfa/dataset.hpp"
#include "gadfa/metrics.hpp"
#include "gadfa/mock_server.hpp"
#include "gadfa/pipeline.hpp"
#include "gadfa/remote.hpp"

using namespace gadfa;

namespace {

int g_failures = 0;

void report(int num, const char* name, bool ok, const std::string& detail = "") {
    std::printf("%s criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", num, name,
                detail.empty() ? "" : " — ", detail.c_str());
    if (!ok) ++g_failures;
}

template <typename Fn>
void criterion(int num, const char* name, Fn fn) {
    try {
        auto [ok, detail] = fn();
        report(num, name, ok, detail);
    } catch (const std::exception& e) {
        report(num, name, false, std::string("exception: ") + e.what());
    }
}

using Result = std::pair<bool, std::string>;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- independent oracles -------------------------------------------------

// brute-force clipped n-gram overlap on explicit multisets
RougeScore rouge_n_oracle(const std::vector<std::string>& cand, const std::vector<std::string>& ref,
                          std::size_t n) {
    auto grams = [n](const std::vector<std::string>& t) {
        std::vector<std::vector<std::string>> out;
        for (std::size_t i = 0; i + n <= t.size(); ++i)
            out.emplace_back(t.begin() + static_cast<std::ptrdiff_t>(i),
                             t.begin() + static_cast<std::ptrdiff_t>(i + n));
        return out;
    };
    const auto c = grams(cand);
    auto r = grams(ref);
    long overlap = 0;
    std::vector<bool> used(r.size(), false);
    for (const auto& g : c) {
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (!used[j] && r[j] == g) {
                used[j] = true;
                ++overlap;
                break;
            }
        }
    }
    RougeScore s;
    if (!c.empty()) s.precision = static_cast<double>(overlap) / static_cast<double>(c.size());
    if (!r.empty()) s.recall = static_cast<double>(overlap) / static_cast<double>(r.size());
    s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

// full-table LCS, no rolling-row optimization
RougeScore rouge_l_oracle(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
    RougeScore s;
    if (cand.empty() || ref.empty()) return s;
    std::vector<std::vector<std::size_t>> dp(cand.size() + 1, std::vector<std::size_t>(ref.size() + 1, 0));
    for (std::size_t i = 1; i <= cand.size(); ++i)
        for (std::size_t j = 1; j <= ref.size(); ++j)
            dp[i][j] = cand[i - 1] == ref[j - 1] ? dp[i - 1][j - 1] + 1
                                                 : std::max(dp[i - 1][j], dp[i][j - 1]);
    const double lcs = static_cast<double>(dp[cand.size()][ref.size()]);
    s.precision = lcs / static_cast<double>(cand.size());
    s.recall = lcs / static_cast<double>(ref.size());
    s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

double pmi_oracle(std::size_t n_c, std::size_t n_nc, std::size_t n_wc, std::size_t n_wnc, double alpha) {
    const double denom = static_cast<double>(n_c + n_nc) + 2.0 * alpha;
    const double p_c = (static_cast<double>(n_c) + alpha) / denom;
    const double p_nc = (static_cast<double>(n_nc) + alpha) / denom;
    const double p_w = (static_cast<double>(n_wc + n_wnc) + alpha) / denom;
    const double p_wc = (static_cast<double>(n_wc) + alpha) / denom;
    const double p_wnc = (static_cast<double>(n_wnc) + alpha) / denom;
    return std::log2(p_wc / (p_w * p_c)) - std::log2(p_wnc / (p_w * p_nc));
}

// ---- fixtures ------------------------------------------------------------

struct World {
    std::vector<TimingInstance> dataset;
    std::vector<NewsArticle> news;
};

// per-class planted world with a fixed 6/2/2 split cycle
World make_world(std::size_t per_class, const std::string& pos_text, const std::string& neg_text) {
    World w;
    const Day base = Day::from_iso("2020-01-01");
    for (std::size_t i = 0; i < per_class; ++i) {
        for (int label : {1, 0}) {
            NewsArticle a;
            a.id = (label ? "p" : "n") + std::to_string(i);
            a.stock = label ? "POS" : "NEG";
            a.date = base + static_cast<int>(i);
            a.body = label ? pos_text : neg_text;
            w.news.push_back(a);
            TimingInstance inst;
            inst.stock = a.stock;
            inst.day_t = a.date;
            inst.label = label;
            inst.news_ids = {a.id};
            const std::size_t r = i % 10;
            inst.split = r < 6 ? Split::train : (r < 8 ? Split::dev : Split::test);
            w.dataset.push_back(inst);
        }
    }
    return w;
}

BackendSet standard_backends(const PipelineConfig& cfg) {
    return BackendSet(cfg, [](const std::string& name, const BackendConfig& bc) {
        return make_backend(name, bc);
    });
}

double experiment_f1(const World& w, const std::string& config_text) {
    const auto cfg = PipelineConfig::from_json(nlohmann::json::parse(config_text));
    auto backends = standard_backends(cfg);
    return run_experiment(w.dataset, w.news, cfg, backends).test_macro_f1;
}

// ---- criteria ------------------------------------------------------------

Result rouge_oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 gen(20240517);
    const char* alphabet[] = {"a", "b", "c", "d", "e", "f"};
    for (int trial = 0; trial < 500; ++trial) {
        auto random_tokens = [&] {
            std::vector<std::string> t(gen() % 13);
            for (auto& tok : t) tok = alphabet[gen() % 6];
            return t;
        };
        const auto cand = random_tokens();
        const auto ref = random_tokens();
        for (std::size_t n : {std::size_t{1}, std::size_t{2}}) {
            const auto got = rouge_n(cand, ref, n);
            const auto want = rouge_n_oracle(cand, ref, n);
            if (got.precision != want.precision || got.recall != want.recall || got.f1 != want.f1)
                return {false, "rouge-" + std::to_string(n) + " mismatch at trial " + std::to_string(trial)};
        }
        const auto got = rouge_l(cand, ref);
        const auto want = rouge_l_oracle(cand, ref);
        if (got.precision != want.precision || got.recall != want.recall || got.f1 != want.f1)
            return {false, "rouge-l mismatch at trial " + std::to_string(trial)};
    }
    const double secs = seconds_since(t0);
    if (secs >= 5.0) return {false, "too slow: " + std::to_string(secs) + "s"};
    return {true, "500 pairs, " + std::to_string(secs) + "s"};
}

Result pmi_oracle_equivalence() {
    std::mt19937_64 gen(424242);
    std::vector<std::string> docs;
    std::vector<bool> flags;
    const char* words[] = {"alpha", "beta", "gamma", "delta", "epsilon", "zeta"};
    for (int d = 0; d < 50; ++d) {
        std::string doc;
        for (int k = 0; k < 4; ++k) {
            if (!doc.empty()) doc += " ";
            doc += words[gen() % 6];
        }
        docs.push_back(doc);
        flags.push_back(gen() % 2 == 0);
    }
    flags[0] = true;
    flags[1] = false;

    std::size_t finite_checked = 0;
    for (double alpha : {0.0, 1.0}) {
        PmiConfig cfg;
        cfg.alpha = alpha;
        cfg.min_doc_freq = 1;
        cfg.tokenizer = {TokenMode::word, true};
        cfg.include_bigrams = false;
        const auto counts = build_counts(docs, flags, cfg);
        std::vector<bool> flipped;
        for (bool f : flags) flipped.push_back(!f);
        const auto counts_flipped = build_counts(docs, flipped, cfg);
        for (const auto& [word, n_wc] : counts.docs_with_word_condition) {
            const double score = pmi_score(counts, word, cfg);
            const double flipped_score = pmi_score(counts_flipped, word, cfg);
            if (std::isfinite(score)) {
                const double want = pmi_oracle(counts.n_docs_condition, counts.n_docs_not_condition, n_wc,
                                               counts.word_count(word, false), alpha);
                if (std::abs(score - want) > 1e-12)
                    return {false, "oracle mismatch for '" + word + "' at alpha " + std::to_string(alpha)};
                if (std::abs(score + flipped_score) > 1e-12)
                    return {false, "antisymmetry violated for '" + word + "'"};
                ++finite_checked;
            } else if (std::isfinite(flipped_score) || score != -flipped_score) {
                return {false, "sentinel antisymmetry violated for '" + word + "'"};
            }
        }
    }
    if (finite_checked == 0) return {false, "fixture produced no finite scores"};
    return {true, std::to_string(finite_checked) + " finite scores checked"};
}

Result dataset_builder_invariants() {
    const auto t0 = std::chrono::steady_clock::now();
    // 10 stocks x 20 days = 200 articles; stocks S0..S7 get a report every
    // 5th day, S8/S9 never do
    std::vector<NewsArticle> news;
    std::vector<AnalystReport> reports;
    std::set<std::pair<std::string, std::string>> report_days;  // (stock, iso day)
    const Day base = Day::from_iso("2021-03-01");
    for (int s = 0; s < 10; ++s) {
        const std::string stock = "S" + std::to_string(s);
        for (int d = 0; d < 20; ++d) {
            NewsArticle a;
            a.id = stock + "-" + std::to_string(d);
            a.stock = stock;
            a.date = base + d;
            a.body = "update " + std::to_string(d) + " for " + stock;
            news.push_back(a);
            if (s < 8 && d % 5 == 2) {
                AnalystReport r;
                r.id = "r-" + a.id;
                r.stock = stock;
                r.date = a.date;
                reports.push_back(r);
                report_days.insert({stock, a.date.to_iso()});
            }
        }
    }

    BuildConfig cfg;
    cfg.window_days = 0;
    cfg.seed = 13;
    const auto built = build_dataset(news, reports, cfg);

    std::size_t n_pos = 0, n_neg = 0;
    std::set<std::string> pos_stocks, neg_stocks;
    for (const auto& inst : built) {
        const bool next_day_report = report_days.count({inst.stock, (inst.day_t + 1).to_iso()}) > 0;
        if (next_day_report != (inst.label == 1))
            return {false, "label disagrees with the report index at " + inst.key()};
        (inst.label == 1 ? n_pos : n_neg)++;
        (inst.label == 1 ? pos_stocks : neg_stocks).insert(inst.stock);
    }
    if (n_pos != n_neg) return {false, "class imbalance: " + std::to_string(n_pos) + " vs " + std::to_string(n_neg)};
    for (const auto& s : neg_stocks)
        if (!pos_stocks.count(s)) return {false, "negative from non-positive stock " + s};

    // window monotonicity T=0 -> T=5
    auto wide_cfg = cfg;
    wide_cfg.window_days = 5;
    const auto wide = build_dataset(news, reports, wide_cfg);
    std::map<std::string, std::size_t> narrow_count;
    for (const auto& inst : built) narrow_count[inst.key()] = inst.news_ids.size();
    for (const auto& inst : wide) {
        auto it = narrow_count.find(inst.key());
        if (it != narrow_count.end() && inst.news_ids.size() < it->second)
            return {false, "window shrank at " + inst.key()};
    }

    // byte-identical rebuild under the fixed seed
    auto serialize = [](const std::vector<TimingInstance>& v) {
        std::string out;
        for (const auto& inst : v) out += to_json(inst).dump() + "\n";
        return out;
    };
    if (serialize(built) != serialize(build_dataset(news, reports, cfg)))
        return {false, "rebuild is not byte-identical"};

    const double secs = seconds_since(t0);
    if (secs >= 10.0) return {false, "too slow: " + std::to_string(secs) + "s"};
    return {true, std::to_string(built.size()) + " instances, " + std::to_string(secs) + "s"};
}

Result planted_signal_news_channel() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto w = make_world(30, "market update with strongbuzz token", "market update with plain token");
    const double f1 = experiment_f1(w, R"({
        "seed": 3,
        "channels": ["news"],
        "model": {"ngram": 1, "tokenizer": "word", "epochs": 300}
    })");
    const double secs = seconds_since(t0);
    if (secs >= 60.0) return {false, "too slow: " + std::to_string(secs) + "s"};
    return {f1 >= 0.95, "macro-F1 " + std::to_string(f1)};
}

Result planted_signal_generated_channel() {
    // the classes differ only in the order of two CJK characters, invisible
    // to character-level unigrams; only the opinion backend sees the raw
    // string and can surface the signal
    const auto w = make_world(30, "盤勢 漲升 整理", "盤勢 升漲 整理");
    const std::string model = R"("model": {"ngram": 1, "tokenizer": "mixed", "epochs": 300})";
    const double news_only = experiment_f1(w, R"({"seed": 3, "channels": ["news"], )" + model + "}");
    const double with_opinion = experiment_f1(w, R"({
        "seed": 3,
        "channels": ["news", "opinion:inject"],
        "backends": {"inject": {"kind": "inject", "pattern": "漲升",
                                "positive": "bullmark", "negative": "bearmark"}}, )" +
                                                  model + "}");
    const bool ok = news_only <= 0.60 && with_opinion >= 0.95;
    return {ok, "news-only " + std::to_string(news_only) + ", with opinion " + std::to_string(with_opinion)};
}

Result ablation_expressibility() {
    const auto w = make_world(20, "盤勢 漲升 整理", "盤勢 升漲 整理");
    const std::string backends = R"("backends": {
        "base": {"kind": "baseline", "lead_k": 1},
        "summary": {"kind": "baseline", "lead_k": 1},
        "inject": {"kind": "inject", "pattern": "漲升", "positive": "bullmark", "negative": "bearmark"}
    })";
    const std::vector<std::string> channel_sets = {
        R"(["news"])",
        R"(["news", "summary"])",
        R"(["news", "opinion:base", "risk:base"])",
        R"(["news", "opinion:inject", "risk:inject"])",
        R"(["opinion:base"])",
        R"(["news", "opinion:base", "opinion:inject", "risk:base", "risk:inject"])",
    };
    std::set<std::string> hashes;
    for (const auto& channels : channel_sets) {
        const auto cfg = PipelineConfig::from_json(nlohmann::json::parse(
            R"({"seed": 9, "channels": )" + channels + ", " + backends +
            R"(, "model": {"ngram": 1, "tokenizer": "mixed", "epochs": 60}})"));
        auto backend_set = standard_backends(cfg);
        const auto report = run_experiment(w.dataset, w.news, cfg, backend_set);
        if (report.predictions.empty()) return {false, "no predictions for channels " + channels};
        hashes.insert(report.config_hash);
    }
    if (hashes.size() != channel_sets.size())
        return {false, "expected 6 distinct config hashes, got " + std::to_string(hashes.size())};
    return {true, "6 configurations, 6 distinct config hashes"};
}

Result metric_unit_values() {
    const std::vector<int> all_pos = {1, 1, 1, 1};
    const std::vector<int> golds = {1, 1, 0, 0};
    if (macro_f1(all_pos, golds) != 1.0 / 3.0) return {false, "all-positive macro-F1 is not exactly 1/3"};

    const auto s = rouge_n({"a", "b", "c"}, {"a", "b", "d"}, 1);
    const double two_thirds = 2.0 / 3.0;
    const double expected_f1 = 2.0 * two_thirds * two_thirds / (two_thirds + two_thirds);
    if (s.precision != two_thirds || s.recall != two_thirds || s.f1 != expected_f1)
        return {false, "rouge-1(a b c, a b d) is not exactly 2/3"};

    AnalystReport r;
    r.id = "r";
    r.stock = "A";
    r.date = Day::from_iso("2020-01-10");
    if (period_distribution({r}).fractions[0] != 1.0)
        return {false, "day 10 did not land in the beginning bucket"};
    return {true, ""};
}

Result distribution_statistics() {
    // 36 reports: for each month, one on day 5, one on day 15, one on day 25
    std::vector<AnalystReport> reports;
    for (int m = 1; m <= 12; ++m) {
        for (int day : {5, 15, 25}) {
            AnalystReport r;
            r.id = "r" + std::to_string(m) + "-" + std::to_string(day);
            r.stock = "A";
            const std::string mm = (m < 10 ? "0" : "") + std::to_string(m);
            const std::string dd = (day < 10 ? "0" : "") + std::to_string(day);
            r.date = Day::from_iso("2022-" + mm + "-" + dd);
            reports.push_back(r);
        }
    }
    const auto months = month_distribution(reports);
    const auto periods = period_distribution(reports);
    double month_sum = 0.0, period_sum = 0.0;
    for (double f : months.fractions) {
        if (f != 3.0 / 36.0) return {false, "month fraction is not exactly 3/36"};
        month_sum += f;
    }
    for (double f : periods.fractions) {
        if (f != 12.0 / 36.0) return {false, "period fraction is not exactly 12/36"};
        period_sum += f;
    }
    if (std::abs(month_sum - 1.0) > 1e-9 || std::abs(period_sum - 1.0) > 1e-9)
        return {false, "fractions do not sum to 1"};
    return {true, "12 month buckets and 3 period buckets match hand counts"};
}

Result backend_protocol_conformance() {
    // order/length preservation against the echo mock
    {
        MockGenerationServer server(MockGenerationServer::make_echo());
        const int port = server.start();
        RemoteBackend backend("remote", "http://127.0.0.1:" + std::to_string(port));
        const std::vector<std::string> inputs = {"one", "two", "第三"};
        if (call_backend(backend, GenTask::opinion, inputs) != inputs)
            return {false, "echo round-trip broke order or length"};
    }
    // retry-then-error on outage
    {
        RetryPolicy retry;
        retry.attempts = 3;
        retry.initial_backoff = std::chrono::milliseconds(5);
        RemoteBackend backend("remote", "http://127.0.0.1:9", retry);
        bool threw = false;
        try {
            backend.generate(GenTask::opinion, {"x"});
        } catch (const TransportError&) {
            threw = true;
        }
        if (!threw || backend.request_count() != 3)
            return {false, "outage did not produce 3 attempts then an error"};
    }
    // transcript replay with zero network calls
    {
        const std::vector<std::string> inputs = {"alpha news", "beta news"};
        TranscriptCache cache;
        std::vector<std::string> recorded;
        {
            MockGenerationServer server(MockGenerationServer::make_echo());
            const int port = server.start();
            auto remote =
                std::make_shared<RemoteBackend>("remote", "http://127.0.0.1:" + std::to_string(port));
            TranscriptBackend recorder(remote, TranscriptCache{}, TranscriptMode::record);
            recorded = call_backend(recorder, GenTask::opinion, inputs);
            cache = recorder.cache();
        }
        auto dead = std::make_shared<RemoteBackend>("remote", "http://127.0.0.1:9");
        TranscriptBackend replayer(dead, std::move(cache), TranscriptMode::replay);
        if (call_backend(replayer, GenTask::opinion, inputs) != recorded)
            return {false, "replay output differs from the recording"};
        if (dead->request_count() != 0)
            return {false, "replay issued " + std::to_string(dead->request_count()) + " network calls"};
    }
    return {true, "echo, retry, and transcript replay all conform"};
}

}  // namespace

int main() {
    criterion(1, "ROUGE oracle equivalence on 500 seeded pairs", rouge_oracle_equivalence);
    criterion(2, "PMI oracle equivalence and antisymmetry on a 50-doc fixture", pmi_oracle_equivalence);
    criterion(3, "dataset-builder invariants on a 200-article corpus", dataset_builder_invariants);
    criterion(4, "planted signal in the news channel reaches macro-F1 >= 0.95",
              planted_signal_news_channel);
    criterion(5, "generated channel carries signal absent from the news", planted_signal_generated_channel);
    criterion(6, "six input ablations run via config edits only", ablation_expressibility);
    criterion(7, "metric unit values are exact", metric_unit_values);
    criterion(8, "release-date distribution fractions match hand counts", distribution_statistics);
    criterion(9, "backend wire-protocol conformance", backend_protocol_conformance);
    if (g_failures == 0) std::printf("all 9 criteria passed\n");
    return g_failures;
}
