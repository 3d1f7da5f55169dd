// gadfa: corpus-to-decision toolkit for news-triggered opinion timing.
//
// Subcommands: build, generate, train, eval, rouge, pmi, stats, serve-mock.
// Exit codes: 0 success, 1 validation/config error, 2 I/O or transport error.

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gadfa/analysis.hpp"
#include "gadfa/corpus.hpp"
#include "gadfa/dataset.hpp"
#include "gadfa/metrics.hpp"
#include "gadfa/mock_server.hpp"
#include "gadfa/pipeline.hpp"
#include "gadfa/remote.hpp"
#include "gadfa/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string iso_timestamp() {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

// The manifest is written before any result file so a crashed run still
// identifies its config and seed. `created_at` is the only
// non-reproducible key.
void write_manifest(const fs::path& out_dir, const std::string& subcommand, const std::string& config_hash,
                    std::uint64_t seed) {
    fs::create_directories(out_dir);
    json manifest{{"tool", "gadfa"},
                  {"version", kVersion},
                  {"subcommand", subcommand},
                  {"config_hash", config_hash},
                  {"seed", seed},
                  {"created_at", iso_timestamp()}};
    gadfa::write_file((out_dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

json load_json_file(const std::string& path) {
    auto j = json::parse(gadfa::read_file(path), nullptr, false);
    if (j.is_discarded()) throw gadfa::ValidationError("malformed JSON config: " + path);
    return j;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw gadfa::IoError("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

gadfa::BackendSet make_backends(const gadfa::PipelineConfig& cfg) {
    const char* env_url = std::getenv("GADFA_BACKEND_URL");
    const std::string url_override = env_url ? env_url : "";
    return gadfa::BackendSet(cfg, [url_override](const std::string& name, const gadfa::BackendConfig& bc) {
        return gadfa::make_backend(name, bc, url_override);
    });
}

gadfa::PipelineConfig load_pipeline_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
    auto j = load_json_file(path);
    if (seed_override) j["seed"] = *seed_override;  // CLI flag beats config file
    return gadfa::PipelineConfig::from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gadfa: news-triggered opinion expressing timing toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "verbose progress on stderr");

    std::string config_path, news_path, reports_path, dataset_path, out_dir = ".";
    std::optional<std::uint64_t> seed_override;

    // build
    auto* build = app.add_subcommand("build", "build the timing dataset from corpora");
    build->add_option("--config", config_path, "builder config JSON")->required();
    build->add_option("--news", news_path, "news.jsonl")->required();
    build->add_option("--reports", reports_path, "reports.jsonl")->required();
    build->add_option("--out", out_dir, "output directory")->required();
    build->add_option("--seed", seed_override, "seed override");

    // generate
    std::string gen_out_name = "channels.jsonl";
    auto* generate = app.add_subcommand("generate", "generate channel texts for a dataset");
    generate->add_option("--config", config_path, "pipeline config JSON")->required();
    generate->add_option("--dataset", dataset_path, "instances.jsonl")->required();
    generate->add_option("--news", news_path, "news.jsonl")->required();
    generate->add_option("--out", out_dir, "output directory")->required();
    generate->add_option("--seed", seed_override, "seed override");

    // train
    auto* train = app.add_subcommand("train", "train the decision model on the train split");
    train->add_option("--config", config_path, "pipeline config JSON")->required();
    train->add_option("--dataset", dataset_path, "instances.jsonl")->required();
    train->add_option("--news", news_path, "news.jsonl")->required();
    train->add_option("--out", out_dir, "output directory")->required();
    train->add_option("--seed", seed_override, "seed override");

    // eval
    auto* eval = app.add_subcommand("eval", "run the full experiment and report test macro-F1");
    eval->add_option("--config", config_path, "pipeline config JSON")->required();
    eval->add_option("--dataset", dataset_path, "instances.jsonl")->required();
    eval->add_option("--news", news_path, "news.jsonl")->required();
    eval->add_option("--out", out_dir, "output directory")->required();
    eval->add_option("--seed", seed_override, "seed override");

    // rouge
    std::string cand_path, ref_path, tok_mode = "mixed";
    auto* rouge = app.add_subcommand("rouge", "score generated text against references");
    rouge->add_option("--candidates", cand_path, "candidate texts, one per line")->required();
    rouge->add_option("--references", ref_path, "reference texts, one per line")->required();
    rouge->add_option("--tokenizer", tok_mode, "word|char|mixed (default mixed)");
    rouge->add_option("--out", out_dir, "output directory")->required();

    // pmi
    std::string docs_path;
    double alpha = 1.0;
    std::size_t min_doc_freq = 5, top_k = 0;
    auto* pmi = app.add_subcommand("pmi", "rank keywords by PMI against a behavior condition");
    pmi->add_option("--docs", docs_path, "JSONL of {\"text\":str,\"condition\":bool}")->required();
    pmi->add_option("--alpha", alpha, "add-alpha smoothing (default 1)");
    pmi->add_option("--min-doc-freq", min_doc_freq, "minimum document frequency (default 5)");
    pmi->add_option("--top-k", top_k, "keep only the top k keywords (0 = all)");
    pmi->add_option("--tokenizer", tok_mode, "word|char|mixed (default mixed)");
    pmi->add_option("--out", out_dir, "output directory")->required();

    // stats
    std::string generated_path, inputs_path, lexicon_path;
    auto* stats = app.add_subcommand("stats", "release-date distributions and generation statistics");
    stats->add_option("--reports", reports_path, "reports.jsonl for date distributions");
    stats->add_option("--generated", generated_path, "generated texts, one per line");
    stats->add_option("--inputs", inputs_path, "paired input texts, one per line");
    stats->add_option("--lexicon", lexicon_path, "lexicon.jsonl for the sentiment distribution");
    stats->add_option("--tokenizer", tok_mode, "word|char|mixed (default mixed)");
    stats->add_option("--out", out_dir, "output directory")->required();

    // serve-mock
    int port = 8600;
    std::string host = "127.0.0.1", mode = "echo", pattern, positive, negative, transcript_path;
    auto* serve = app.add_subcommand("serve-mock", "run a local conforming generation backend");
    serve->add_option("--host", host, "bind address (default 127.0.0.1)");
    serve->add_option("--port", port, "port (default 8600)");
    serve->add_option("--mode", mode, "echo|inject|transcript");
    serve->add_option("--pattern", pattern, "inject mode: trigger substring");
    serve->add_option("--positive", positive, "inject mode: output on match");
    serve->add_option("--negative", negative, "inject mode: output on miss");
    serve->add_option("--transcript", transcript_path, "transcript mode: recorded transcript file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*build) {
            auto cfg_json = load_json_file(config_path);
            if (seed_override) cfg_json["seed"] = *seed_override;
            const auto cfg = gadfa::BuildConfig::from_json(cfg_json);
            write_manifest(out_dir, "build", gadfa::hex64(gadfa::fnv1a(cfg_json.dump())), cfg.seed);
            const auto news = gadfa::load_news(news_path);
            const auto reports = gadfa::load_reports(reports_path);
            const auto instances = gadfa::build_dataset(news, reports, cfg);
            gadfa::save_instances(instances, (fs::path(out_dir) / "instances.jsonl").string());
            if (verbose) std::cerr << "built " << instances.size() << " instances\n";
        } else if (*generate) {
            const auto cfg = load_pipeline_config(config_path, seed_override);
            write_manifest(out_dir, "generate", cfg.config_hash(), cfg.seed);
            const auto news = gadfa::load_news(news_path);
            const auto instances = gadfa::load_instances(dataset_path);
            auto backends = make_backends(cfg);
            const auto news_by_id = gadfa::index_news_by_id(news);
            const auto generated = gadfa::generate_channels(instances, news_by_id, cfg, backends);
            backends.flush_transcripts();
            std::ofstream out((fs::path(out_dir) / gen_out_name).string(), std::ios::binary);
            for (std::size_t i = 0; i < instances.size(); ++i) {
                json channels = json::object();
                for (const auto& [name, texts] : generated) channels[name] = texts[i];
                out << json{{"key", instances[i].key()}, {"channels", channels}}.dump() << '\n';
            }
        } else if (*train || *eval) {
            const auto cfg = load_pipeline_config(config_path, seed_override);
            write_manifest(out_dir, *train ? "train" : "eval", cfg.config_hash(), cfg.seed);
            const auto news = gadfa::load_news(news_path);
            const auto instances = gadfa::load_instances(dataset_path);
            auto backends = make_backends(cfg);
            if (*train) {
                std::vector<gadfa::TimingInstance> train_split;
                for (const auto& inst : instances)
                    if (inst.split == gadfa::Split::train) train_split.push_back(inst);
                const auto news_by_id = gadfa::index_news_by_id(news);
                const auto generated = gadfa::generate_channels(train_split, news_by_id, cfg, backends);
                const auto bundles = gadfa::assemble_all(train_split, news_by_id, generated, cfg);
                const auto model = gadfa::train_decision(bundles, cfg.model, cfg.seed);
                backends.flush_transcripts();
                gadfa::write_file((fs::path(out_dir) / "model.json").string(), model.to_json().dump() + "\n");
                if (verbose) std::cerr << "trained on " << bundles.size() << " instances\n";
            } else {
                const auto report = gadfa::run_experiment(instances, news, cfg, backends);
                backends.flush_transcripts();
                gadfa::write_file((fs::path(out_dir) / "report.json").string(), report.to_json().dump(2) + "\n");
                std::cout << "macro_f1 " << report.test_macro_f1 << "\n";
            }
        } else if (*rouge) {
            write_manifest(out_dir, "rouge", gadfa::hex64(gadfa::fnv1a(cand_path + "|" + ref_path)), 0);
            const auto cands = read_lines(cand_path);
            const auto refs = read_lines(ref_path);
            if (cands.size() != refs.size())
                throw gadfa::ValidationError("candidate/reference line counts differ");
            if (cands.empty()) throw gadfa::ValidationError("no candidate/reference pairs");
            gadfa::TokenizerConfig tok{gadfa::token_mode_from_string(tok_mode), false};
            double p1 = 0, r1 = 0, f1 = 0, p2 = 0, r2 = 0, f2 = 0, pl = 0, rl = 0, fl = 0;
            for (std::size_t i = 0; i < cands.size(); ++i) {
                const auto c = gadfa::tokenize(cands[i], tok);
                const auto r = gadfa::tokenize(refs[i], tok);
                const auto s1 = gadfa::rouge_n(c, r, 1);
                const auto s2 = gadfa::rouge_n(c, r, 2);
                const auto sl = gadfa::rouge_l(c, r);
                p1 += s1.precision; r1 += s1.recall; f1 += s1.f1;
                p2 += s2.precision; r2 += s2.recall; f2 += s2.f1;
                pl += sl.precision; rl += sl.recall; fl += sl.f1;
            }
            const double n = static_cast<double>(cands.size());
            json out = json::array();
            out.push_back(gadfa::metric_report("rouge", "rouge-1", f1 / n, p1 / n, r1 / n));
            out.push_back(gadfa::metric_report("rouge", "rouge-2", f2 / n, p2 / n, r2 / n));
            out.push_back(gadfa::metric_report("rouge", "rouge-l", fl / n, pl / n, rl / n));
            json report{{"tokenizer", tok_mode}, {"pairs", cands.size()}, {"scores", out}};
            gadfa::write_file((fs::path(out_dir) / "rouge.json").string(), report.dump(2) + "\n");
        } else if (*pmi) {
            write_manifest(out_dir, "pmi", gadfa::hex64(gadfa::fnv1a(docs_path)), 0);
            std::vector<std::string> docs;
            std::vector<bool> flags;
            std::size_t line_no = 0;
            for (const auto& line : read_lines(docs_path)) {
                ++line_no;
                if (line.empty()) continue;
                auto j = json::parse(line, nullptr, false);
                if (j.is_discarded() || !j.contains("text") || !j.contains("condition"))
                    throw gadfa::ValidationError("malformed doc at line " + std::to_string(line_no));
                docs.push_back(j["text"].get<std::string>());
                flags.push_back(j["condition"].get<bool>());
            }
            gadfa::PmiConfig cfg;
            cfg.alpha = alpha;
            cfg.min_doc_freq = min_doc_freq;
            cfg.tokenizer = {gadfa::token_mode_from_string(tok_mode), true};
            const auto counts = gadfa::build_counts(docs, flags, cfg);
            const auto ranking = gadfa::keyword_ranking(counts, cfg, top_k);
            std::ofstream out((fs::path(out_dir) / "keywords.jsonl").string(), std::ios::binary);
            for (const auto& s : ranking) out << gadfa::to_json(s).dump() << '\n';
        } else if (*stats) {
            write_manifest(out_dir, "stats", gadfa::hex64(gadfa::fnv1a(reports_path + "|" + generated_path)), 0);
            bool did_anything = false;
            if (!reports_path.empty()) {
                const auto reports = gadfa::load_reports(reports_path);
                gadfa::write_file((fs::path(out_dir) / "month_distribution.json").string(),
                                  gadfa::month_distribution(reports).to_json().dump(2) + "\n");
                gadfa::write_file((fs::path(out_dir) / "period_distribution.json").string(),
                                  gadfa::period_distribution(reports).to_json().dump(2) + "\n");
                did_anything = true;
            }
            if (!generated_path.empty()) {
                if (inputs_path.empty())
                    throw gadfa::ValidationError("--generated requires --inputs");
                gadfa::SentimentLexicon lexicon;
                if (!lexicon_path.empty()) lexicon = gadfa::SentimentLexicon::load(lexicon_path);
                gadfa::TokenizerConfig tok{gadfa::token_mode_from_string(tok_mode), false};
                const auto s =
                    gadfa::generation_stats(read_lines(generated_path), read_lines(inputs_path), lexicon, tok);
                json out{{"avg_words", s.avg_words},
                         {"unique_tokens", s.unique_tokens},
                         {"words_from_input", s.words_from_input},
                         {"sentiment", {{"positive", s.positive_fraction},
                                        {"negative", s.negative_fraction},
                                        {"neutral", s.neutral_fraction}}},
                         {"tokenizer", tok_mode}};
                gadfa::write_file((fs::path(out_dir) / "generation_stats.json").string(), out.dump(2) + "\n");
                did_anything = true;
            }
            if (!did_anything)
                throw gadfa::ValidationError("stats requires --reports and/or --generated");
        } else if (*serve) {
            std::shared_ptr<gadfa::GeneratorBackend> backend;
            if (mode == "echo") {
                backend = gadfa::MockGenerationServer::make_echo();
            } else if (mode == "inject") {
                if (pattern.empty()) throw gadfa::ValidationError("inject mode requires --pattern");
                backend = gadfa::MockGenerationServer::make_inject(pattern, positive, negative);
            } else if (mode == "transcript") {
                if (transcript_path.empty())
                    throw gadfa::ValidationError("transcript mode requires --transcript");
                backend = gadfa::MockGenerationServer::make_transcript(transcript_path);
            } else {
                throw gadfa::ValidationError("unknown mock mode: '" + mode + "'");
            }
            gadfa::MockGenerationServer server(backend);
            std::cerr << "serving " << mode << " backend on " << host << ":" << port << "\n";
            if (!server.serve(host, port)) throw gadfa::TransportError("failed to bind mock server");
        }
    } catch (const gadfa::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const gadfa::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const gadfa::TransportError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
