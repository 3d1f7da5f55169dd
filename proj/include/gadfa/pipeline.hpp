#ifndef GADFA_PIPELINE_HPP
#define GADFA_PIPELINE_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "gadfa/backend.hpp"
#include "gadfa/corpus.hpp"
#include "gadfa/dataset.hpp"
#include "gadfa/metrics.hpp"
#include "gadfa/tokenize.hpp"
#include "gadfa/util.hpp"

namespace gadfa {

// A channel identifier is "news", "summary[:backend]", "opinion:<backend>"
// or "risk:<backend>". When the backend part is omitted for a generated
// kind, the backend named like the kind is used.
struct ChannelId {
    std::string kind;
    std::string backend;  // empty for news

    std::string full() const { return backend.empty() ? kind : kind + ":" + backend; }

    static ChannelId parse(const std::string& s) {
        ChannelId id;
        const auto colon = s.find(':');
        id.kind = colon == std::string::npos ? s : s.substr(0, colon);
        if (id.kind != "news" && id.kind != "summary" && id.kind != "opinion" && id.kind != "risk")
            throw ValidationError("unknown channel kind: '" + s + "'");
        if (colon != std::string::npos) {
            id.backend = s.substr(colon + 1);
            if (id.backend.empty()) throw ValidationError("empty backend name in channel '" + s + "'");
        } else if (id.kind != "news") {
            id.backend = id.kind;
        }
        if (id.kind == "news" && !id.backend.empty())
            throw ValidationError("news channel takes no backend");
        return id;
    }
};

struct ChannelConfig {
    std::vector<ChannelId> channels;
    std::map<std::string, std::size_t> truncation;  // channel full name -> token limit
    std::size_t default_truncation = 256;
    std::string separator = "[SEP]";

    void validate() const {
        std::set<std::string> seen;
        for (const auto& c : channels)
            if (!seen.insert(c.full()).second)
                throw ValidationError("duplicate channel: '" + c.full() + "'");
        for (const auto& [name, limit] : truncation)
            if (limit == 0) throw ValidationError("truncation limit for '" + name + "' must be positive");
        if (default_truncation == 0) throw ValidationError("default truncation must be positive");
    }

    std::size_t limit_for(const std::string& channel_name) const {
        auto it = truncation.find(channel_name);
        return it == truncation.end() ? default_truncation : it->second;
    }
};

struct FeatureBundle {
    std::string key;  // stock@day_t
    int label = -1;   // -1 when unknown
    std::vector<std::pair<std::string, std::string>> channels;  // (channel full name, text)
};

namespace detail {

inline std::string truncate_tokens(const std::string& text, const TokenizerConfig& cfg, std::size_t limit) {
    auto tokens = tokenize(text, cfg);
    if (tokens.size() <= limit) return text;
    tokens.resize(limit);
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += " ";
        out += t;
    }
    return out;
}

}  // namespace detail

// Chronological concatenation of the instance's window news, title + body.
inline std::string window_news_text(const TimingInstance& inst,
                                    const std::unordered_map<std::string, const NewsArticle*>& news_by_id) {
    std::string out;
    for (const auto& id : inst.news_ids) {
        auto it = news_by_id.find(id);
        if (it == news_by_id.end())
            throw ValidationError("instance " + inst.key() + " references unknown news id '" + id + "'");
        if (!out.empty()) out += " ";
        if (!it->second->title.empty()) {
            out += it->second->title;
            out += " ";
        }
        out += it->second->body;
    }
    return out;
}

// Builds the ordered channel texts for one instance. Every configured
// generated channel must be present in `generated`; each channel is
// truncated to its own token budget.
inline FeatureBundle assemble_channels(const TimingInstance& inst,
                                       const std::unordered_map<std::string, const NewsArticle*>& news_by_id,
                                       const std::map<std::string, std::string>& generated,
                                       const ChannelConfig& cfg,
                                       const TokenizerConfig& tok = {}) {
    cfg.validate();
    FeatureBundle bundle;
    bundle.key = inst.key();
    bundle.label = inst.label;
    for (const auto& channel : cfg.channels) {
        const std::string name = channel.full();
        std::string text;
        if (channel.kind == "news") {
            text = window_news_text(inst, news_by_id);
        } else {
            auto it = generated.find(name);
            if (it == generated.end())
                throw ValidationError("missing generated channel '" + name + "' for instance " + inst.key());
            text = it->second;
        }
        bundle.channels.emplace_back(name, detail::truncate_tokens(text, tok, cfg.limit_for(name)));
    }
    return bundle;
}

struct ModelHyperparams {
    std::size_t ngram = 2;  // features use all n-gram orders 1..ngram
    double l2 = 1e-4;
    double learning_rate = 1.0;
    std::size_t epochs = 300;
    TokenizerConfig tokenizer{TokenMode::mixed, true};

    nlohmann::json to_json() const {
        return nlohmann::json{{"ngram", ngram},
                              {"l2", l2},
                              {"lr", learning_rate},
                              {"epochs", epochs},
                              {"tokenizer", to_string(tokenizer.mode)}};
    }
};

// TF-IDF + logistic regression over channel-prefixed token n-grams. The
// channel prefix namespaces the vocabulary, so removing a channel from the
// config cannot change the features any other channel produces.
class DecisionModel {
public:
    using SparseVec = std::vector<std::pair<std::size_t, double>>;

    bool trained() const { return trained_; }
    const ModelHyperparams& hyperparams() const { return hp_; }
    std::size_t vocabulary_size() const { return vocab_.size(); }
    double bias() const { return bias_; }

    static std::vector<std::string> bundle_grams(const FeatureBundle& bundle, const ModelHyperparams& hp) {
        std::vector<std::string> grams;
        for (const auto& [channel, text] : bundle.channels) {
            const auto tokens = tokenize(text, hp.tokenizer);
            for (std::size_t n = 1; n <= hp.ngram; ++n) {
                for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
                    std::string g = channel;
                    for (std::size_t k = 0; k < n; ++k) {
                        g.push_back('\x1f');
                        g += tokens[i + k];
                    }
                    grams.push_back(std::move(g));
                }
            }
        }
        return grams;
    }

    static DecisionModel train(const std::vector<FeatureBundle>& bundles, const ModelHyperparams& hp,
                               std::uint64_t seed) {
        bool has_pos = false, has_neg = false;
        for (const auto& b : bundles) {
            if (b.label == 1) has_pos = true;
            else if (b.label == 0) has_neg = true;
            else throw ValidationError("training bundle '" + b.key + "' has no label");
        }
        if (!has_pos || !has_neg) throw ValidationError("training set contains a single class");

        DecisionModel model;
        model.hp_ = hp;
        model.seed_ = seed;

        // vocabulary and document frequencies, insertion order = first-seen
        std::vector<std::size_t> df;
        std::vector<std::vector<std::pair<std::size_t, double>>> tf(bundles.size());
        for (std::size_t d = 0; d < bundles.size(); ++d) {
            std::map<std::string, std::size_t> counts;
            for (auto& g : bundle_grams(bundles[d], hp)) ++counts[g];
            for (const auto& [g, c] : counts) {
                auto [it, inserted] = model.vocab_.try_emplace(g, model.vocab_.size());
                if (inserted) df.push_back(0);
                ++df[it->second];
                tf[d].emplace_back(it->second, static_cast<double>(c));
            }
        }
        const double n_docs = static_cast<double>(bundles.size());
        model.idf_.resize(df.size());
        for (std::size_t i = 0; i < df.size(); ++i)
            model.idf_[i] = std::log((1.0 + n_docs) / (1.0 + static_cast<double>(df[i]))) + 1.0;

        // tf-idf with per-document l2 normalization
        std::vector<SparseVec> features(bundles.size());
        std::vector<double> labels(bundles.size());
        for (std::size_t d = 0; d < bundles.size(); ++d) {
            double norm_sq = 0.0;
            for (auto& [idx, value] : tf[d]) {
                value *= model.idf_[idx];
                norm_sq += value * value;
            }
            const double inv_norm = norm_sq > 0.0 ? 1.0 / std::sqrt(norm_sq) : 0.0;
            for (auto& [idx, value] : tf[d]) value *= inv_norm;
            features[d] = std::move(tf[d]);
            labels[d] = static_cast<double>(bundles[d].label);
        }

        // full-batch gradient descent on regularized logistic loss; no
        // stochastic step, so the result is seed-independent and the loss
        // is non-increasing at the default learning rate
        model.weights_.assign(model.vocab_.size(), 0.0);
        model.bias_ = 0.0;
        const double inv_n = 1.0 / n_docs;
        std::vector<double> grad(model.weights_.size());
        for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
            std::fill(grad.begin(), grad.end(), 0.0);
            double grad_bias = 0.0;
            for (std::size_t d = 0; d < features.size(); ++d) {
                const double err = sigmoid(model.response(features[d])) - labels[d];
                for (const auto& [idx, value] : features[d]) grad[idx] += err * value;
                grad_bias += err;
            }
            for (std::size_t i = 0; i < grad.size(); ++i)
                model.weights_[i] -= hp.learning_rate * (grad[i] * inv_n + hp.l2 * model.weights_[i]);
            model.bias_ -= hp.learning_rate * grad_bias * inv_n;
        }
        model.trained_ = true;
        return model;
    }

    double training_loss(const std::vector<FeatureBundle>& bundles) const {
        double loss = 0.0;
        for (const auto& b : bundles) {
            const double s = score(b);
            loss += b.label == 1 ? -std::log(std::max(s, 1e-15)) : -std::log(std::max(1.0 - s, 1e-15));
        }
        double reg = 0.0;
        for (double w : weights_) reg += w * w;
        return loss / static_cast<double>(bundles.size()) + 0.5 * hp_.l2 * reg;
    }

    double score(const FeatureBundle& bundle) const {
        if (!trained_) throw ValidationError("predict called on an untrained model");
        return sigmoid(response(featurize(bundle)));
    }

    std::pair<int, double> predict(const FeatureBundle& bundle) const {
        const double s = score(bundle);
        return {s > 0.5 ? 1 : 0, s};
    }

    nlohmann::json to_json() const {
        std::vector<std::string> terms(vocab_.size());
        for (const auto& [g, idx] : vocab_) terms[idx] = g;
        return nlohmann::json{{"vocab", terms}, {"idf", idf_},      {"weights", weights_},
                              {"bias", bias_},  {"seed", seed_},    {"hyperparams", hp_.to_json()},
                              {"trained", trained_}};
    }

    static DecisionModel from_json(const nlohmann::json& j) {
        DecisionModel m;
        const auto terms = j.at("vocab").get<std::vector<std::string>>();
        for (std::size_t i = 0; i < terms.size(); ++i) m.vocab_[terms[i]] = i;
        m.idf_ = j.at("idf").get<std::vector<double>>();
        m.weights_ = j.at("weights").get<std::vector<double>>();
        m.bias_ = j.at("bias").get<double>();
        m.seed_ = j.value("seed", 0ull);
        const auto& h = j.at("hyperparams");
        m.hp_.ngram = h.at("ngram").get<std::size_t>();
        m.hp_.l2 = h.at("l2").get<double>();
        m.hp_.learning_rate = h.at("lr").get<double>();
        m.hp_.epochs = h.at("epochs").get<std::size_t>();
        m.hp_.tokenizer.mode = token_mode_from_string(h.value("tokenizer", "mixed"));
        m.trained_ = j.value("trained", true);
        if (m.weights_.size() != m.vocab_.size() || m.idf_.size() != m.vocab_.size())
            throw ValidationError("model weight/vocabulary size mismatch");
        return m;
    }

private:
    static double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

    double response(const SparseVec& x) const {
        double z = bias_;
        for (const auto& [idx, value] : x) z += weights_[idx] * value;
        return z;
    }

    // tf-idf for a single bundle against the trained vocabulary; unseen
    // grams are ignored
    SparseVec featurize(const FeatureBundle& bundle) const {
        std::map<std::string, std::size_t> counts;
        for (auto& g : bundle_grams(bundle, hp_)) ++counts[g];
        SparseVec x;
        double norm_sq = 0.0;
        for (const auto& [g, c] : counts) {
            auto it = vocab_.find(g);
            if (it == vocab_.end()) continue;
            const double v = static_cast<double>(c) * idf_[it->second];
            x.emplace_back(it->second, v);
            norm_sq += v * v;
        }
        const double inv_norm = norm_sq > 0.0 ? 1.0 / std::sqrt(norm_sq) : 0.0;
        for (auto& [idx, v] : x) v *= inv_norm;
        return x;
    }

    std::unordered_map<std::string, std::size_t> vocab_;
    std::vector<double> idf_;
    std::vector<double> weights_;
    double bias_ = 0.0;
    std::uint64_t seed_ = 0;
    ModelHyperparams hp_;
    bool trained_ = false;
};

inline DecisionModel train_decision(const std::vector<FeatureBundle>& bundles, const ModelHyperparams& hp,
                                    std::uint64_t seed) {
    return DecisionModel::train(bundles, hp, seed);
}

struct BackendConfig {
    std::string kind;  // baseline | remote | inject
    std::string url;
    std::string lexicon_path;
    std::size_t lead_k = 2;
    std::string pattern, on_match, on_miss;  // inject
    std::string transcript_path;
    std::string transcript_mode;  // "", "record", "replay"
    int retries = 3;
    int backoff_ms = 500;
};

struct PipelineConfig {
    std::uint64_t seed = 0;
    ChannelConfig channels;
    std::map<std::string, BackendConfig> backends;
    ModelHyperparams model;
    std::size_t batch_size = 16;
    nlohmann::json grid;      // optional hyperparameter grid, selected on dev
    nlohmann::json snapshot;  // the raw config this was parsed from

    static PipelineConfig from_json(const nlohmann::json& j) {
        PipelineConfig cfg;
        cfg.snapshot = j;
        cfg.seed = j.value("seed", 0ull);
        if (!j.contains("channels") || !j["channels"].is_array() || j["channels"].empty())
            throw ValidationError("pipeline config requires a non-empty 'channels' array");
        for (const auto& c : j["channels"])
            cfg.channels.channels.push_back(ChannelId::parse(c.get<std::string>()));
        if (j.contains("truncation"))
            for (const auto& [name, limit] : j["truncation"].items())
                cfg.channels.truncation[name] = limit.get<std::size_t>();
        if (j.contains("separator")) cfg.channels.separator = j["separator"].get<std::string>();
        cfg.channels.validate();
        if (j.contains("backends")) {
            for (const auto& [name, b] : j["backends"].items()) {
                BackendConfig bc;
                bc.kind = b.value("kind", "baseline");
                bc.url = b.value("url", "");
                bc.lexicon_path = b.value("lexicon", "");
                bc.lead_k = b.value("lead_k", std::size_t{2});
                bc.pattern = b.value("pattern", "");
                bc.on_match = b.value("positive", "");
                bc.on_miss = b.value("negative", "");
                bc.transcript_path = b.value("transcript", "");
                bc.transcript_mode = b.value("transcript_mode", "");
                bc.retries = b.value("retries", 3);
                bc.backoff_ms = b.value("backoff_ms", 500);
                if (bc.kind != "baseline" && bc.kind != "remote" && bc.kind != "inject")
                    throw ValidationError("backend '" + name + "' has unknown kind '" + bc.kind + "'");
                if (bc.kind == "remote" && bc.url.empty())
                    throw ValidationError("remote backend '" + name + "' requires a url");
                cfg.backends[name] = bc;
            }
        }
        if (j.contains("model")) {
            const auto& m = j["model"];
            cfg.model.ngram = m.value("ngram", std::size_t{2});
            cfg.model.l2 = m.value("l2", 1e-4);
            cfg.model.learning_rate = m.value("lr", 1.0);
            cfg.model.epochs = m.value("epochs", std::size_t{300});
            if (m.contains("tokenizer"))
                cfg.model.tokenizer.mode = token_mode_from_string(m["tokenizer"].get<std::string>());
            cfg.model.tokenizer.lowercase = m.value("lowercase", true);
        }
        cfg.batch_size = j.value("batch_size", std::size_t{16});
        if (cfg.batch_size == 0) throw ValidationError("batch_size must be positive");
        if (j.contains("grid")) cfg.grid = j["grid"];
        return cfg;
    }

    std::string config_hash() const { return hex64(fnv1a(snapshot.dump())); }
};

struct ExperimentPrediction {
    std::string key;
    int gold = 0;
    int predicted = 0;
    double score = 0.0;
};

struct ExperimentReport {
    nlohmann::json config_snapshot;
    std::string config_hash;
    std::uint64_t seed = 0;
    double test_macro_f1 = 0.0;
    std::vector<ExperimentPrediction> predictions;
    double wall_clock_ms = 0.0;
    nlohmann::json selected_hyperparams;

    nlohmann::json to_json() const {
        nlohmann::json preds = nlohmann::json::array();
        for (const auto& p : predictions)
            preds.push_back({{"key", p.key}, {"gold", p.gold}, {"predicted", p.predicted}, {"score", p.score}});
        return nlohmann::json{{"config", config_snapshot},
                              {"config_hash", config_hash},
                              {"seed", seed},
                              {"macro_f1", test_macro_f1},
                              {"predictions", preds},
                              {"wall_clock_ms", wall_clock_ms},
                              {"selected_hyperparams", selected_hyperparams}};
    }
};

// Owns backend instances for one pipeline run.
class BackendSet {
public:
    explicit BackendSet(const PipelineConfig& cfg, std::function<std::shared_ptr<GeneratorBackend>(
                                                       const std::string&, const BackendConfig&)>
                                                       factory);

    GeneratorBackend& get(const std::string& name) {
        auto it = backends_.find(name);
        if (it == backends_.end()) throw ValidationError("channel references unknown backend '" + name + "'");
        return *it->second;
    }

    void flush_transcripts() {
        for (auto& [name, path] : record_paths_) {
            auto* tb = dynamic_cast<TranscriptBackend*>(backends_.at(name).get());
            if (tb) tb->cache().save(path);
        }
    }

    std::map<std::string, std::shared_ptr<GeneratorBackend>>& backends() { return backends_; }

private:
    std::map<std::string, std::shared_ptr<GeneratorBackend>> backends_;
    std::map<std::string, std::string> record_paths_;
};

inline BackendSet::BackendSet(const PipelineConfig& cfg,
                              std::function<std::shared_ptr<GeneratorBackend>(const std::string&,
                                                                              const BackendConfig&)>
                                  factory) {
    for (const auto& [name, bc] : cfg.backends) {
        std::shared_ptr<GeneratorBackend> backend = factory(name, bc);
        if (!bc.transcript_path.empty()) {
            TranscriptMode mode = bc.transcript_mode == "replay" ? TranscriptMode::replay : TranscriptMode::record;
            TranscriptCache cache;
            std::ifstream probe(bc.transcript_path);
            if (probe.good()) cache = TranscriptCache::load(bc.transcript_path);
            else if (mode == TranscriptMode::replay)
                throw IoError("transcript file not found for replay: " + bc.transcript_path);
            backend = std::make_shared<TranscriptBackend>(backend, std::move(cache), mode);
            if (mode == TranscriptMode::record) record_paths_[name] = bc.transcript_path;
        }
        backends_[name] = std::move(backend);
    }
}

// Generates every configured channel for every instance, batched per
// backend. Opinion and summary backends receive the concatenated news
// window; a risk backend receives the opinion generated by the same
// backend (produced on demand when no opinion channel is configured).
inline std::map<std::string, std::vector<std::string>> generate_channels(
    const std::vector<TimingInstance>& instances,
    const std::unordered_map<std::string, const NewsArticle*>& news_by_id, const PipelineConfig& cfg,
    BackendSet& backends) {
    std::vector<std::string> window_texts;
    window_texts.reserve(instances.size());
    for (const auto& inst : instances) window_texts.push_back(window_news_text(inst, news_by_id));

    const auto run_batched = [&](GeneratorBackend& backend, GenTask task,
                                 const std::vector<std::string>& inputs) {
        std::vector<std::string> outputs;
        outputs.reserve(inputs.size());
        for (std::size_t start = 0; start < inputs.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, inputs.size());
            std::vector<std::string> batch(inputs.begin() + static_cast<std::ptrdiff_t>(start),
                                           inputs.begin() + static_cast<std::ptrdiff_t>(end));
            std::vector<std::string> got;
            try {
                got = call_backend(backend, task, batch);
            } catch (const TransportError& e) {
                throw TransportError(std::string(e.what()) + " (instances " +
                                     instances[start].key() + ".." + instances[end - 1].key() + ")");
            }
            outputs.insert(outputs.end(), got.begin(), got.end());
        }
        return outputs;
    };

    std::map<std::string, std::vector<std::string>> generated;  // channel full name -> per-instance text
    std::map<std::string, std::vector<std::string>> opinions_by_backend;

    const auto opinions_of = [&](const std::string& backend_name) -> const std::vector<std::string>& {
        auto it = opinions_by_backend.find(backend_name);
        if (it == opinions_by_backend.end()) {
            auto outputs = run_batched(backends.get(backend_name), GenTask::opinion, window_texts);
            it = opinions_by_backend.emplace(backend_name, std::move(outputs)).first;
        }
        return it->second;
    };

    for (const auto& channel : cfg.channels.channels) {
        if (channel.kind == "news") continue;
        if (channel.kind == "opinion") {
            generated[channel.full()] = opinions_of(channel.backend);
        } else if (channel.kind == "summary") {
            generated[channel.full()] =
                run_batched(backends.get(channel.backend), GenTask::summary, window_texts);
        } else {  // risk chains off the same backend's opinion
            generated[channel.full()] =
                run_batched(backends.get(channel.backend), GenTask::risk, opinions_of(channel.backend));
        }
    }
    return generated;
}

inline std::vector<FeatureBundle> assemble_all(
    const std::vector<TimingInstance>& instances,
    const std::unordered_map<std::string, const NewsArticle*>& news_by_id,
    const std::map<std::string, std::vector<std::string>>& generated, const PipelineConfig& cfg) {
    std::vector<FeatureBundle> bundles;
    bundles.reserve(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
        std::map<std::string, std::string> per_instance;
        for (const auto& [name, texts] : generated) per_instance[name] = texts[i];
        bundles.push_back(
            assemble_channels(instances[i], news_by_id, per_instance, cfg.channels, cfg.model.tokenizer));
    }
    return bundles;
}

inline std::unordered_map<std::string, const NewsArticle*> index_news_by_id(
    const std::vector<NewsArticle>& news) {
    std::unordered_map<std::string, const NewsArticle*> by_id;
    by_id.reserve(news.size());
    for (const auto& a : news) by_id[a.id] = &a;
    return by_id;
}

// Full protocol: generate channels for all instances, train on the train
// split, select hyperparameters on dev when a grid is configured, report
// test macro-F1. Reproducible from (dataset, config, seed, transcripts).
inline ExperimentReport run_experiment(const std::vector<TimingInstance>& dataset,
                                       const std::vector<NewsArticle>& news, const PipelineConfig& cfg,
                                       BackendSet& backends) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto news_by_id = index_news_by_id(news);

    std::vector<TimingInstance> train, dev, test;
    for (const auto& inst : dataset) {
        switch (inst.split) {
            case Split::train: train.push_back(inst); break;
            case Split::dev: dev.push_back(inst); break;
            case Split::test: test.push_back(inst); break;
            default: break;
        }
    }
    if (test.empty()) throw ValidationError("dataset has an empty test split");
    if (train.empty()) throw ValidationError("dataset has an empty train split");

    const auto make_bundles = [&](const std::vector<TimingInstance>& split) {
        const auto generated = generate_channels(split, news_by_id, cfg, backends);
        return assemble_all(split, news_by_id, generated, cfg);
    };
    const auto train_bundles = make_bundles(train);
    const auto test_bundles = make_bundles(test);

    std::vector<ModelHyperparams> candidates{cfg.model};
    if (cfg.grid.is_object() && !cfg.grid.empty()) {
        candidates.clear();
        std::vector<ModelHyperparams> current{cfg.model};
        const auto expand = [&](const char* key, auto setter) {
            if (!cfg.grid.contains(key)) return;
            std::vector<ModelHyperparams> next;
            for (const auto& hp : current)
                for (const auto& value : cfg.grid[key]) {
                    ModelHyperparams h = hp;
                    setter(h, value);
                    next.push_back(h);
                }
            current = std::move(next);
        };
        expand("ngram", [](ModelHyperparams& h, const nlohmann::json& v) { h.ngram = v.get<std::size_t>(); });
        expand("l2", [](ModelHyperparams& h, const nlohmann::json& v) { h.l2 = v.get<double>(); });
        expand("lr", [](ModelHyperparams& h, const nlohmann::json& v) { h.learning_rate = v.get<double>(); });
        expand("epochs", [](ModelHyperparams& h, const nlohmann::json& v) { h.epochs = v.get<std::size_t>(); });
        candidates = std::move(current);
    }

    ModelHyperparams best_hp = candidates.front();
    if (candidates.size() > 1) {
        if (dev.empty()) throw ValidationError("hyperparameter grid given but dev split is empty");
        const auto dev_bundles = make_bundles(dev);
        double best_score = -1.0;
        for (const auto& hp : candidates) {
            const auto model = DecisionModel::train(train_bundles, hp, cfg.seed);
            std::vector<int> preds, golds;
            for (const auto& b : dev_bundles) {
                preds.push_back(model.predict(b).first);
                golds.push_back(b.label);
            }
            const double f1 = macro_f1(preds, golds);
            if (f1 > best_score) {  // ties keep the earlier candidate
                best_score = f1;
                best_hp = hp;
            }
        }
    }

    const auto model = DecisionModel::train(train_bundles, best_hp, cfg.seed);

    ExperimentReport report;
    report.config_snapshot = cfg.snapshot;
    report.config_hash = cfg.config_hash();
    report.seed = cfg.seed;
    report.selected_hyperparams = best_hp.to_json();
    std::vector<int> preds, golds;
    for (const auto& b : test_bundles) {
        const auto [label, score] = model.predict(b);
        report.predictions.push_back({b.key, b.label, label, score});
        preds.push_back(label);
        golds.push_back(b.label);
    }
    report.test_macro_f1 = macro_f1(preds, golds);
    report.wall_clock_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace gadfa

#endif
