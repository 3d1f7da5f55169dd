#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#ifndef GADFA_CLI_PATH
#error "GADFA_CLI_PATH must point at the built gadfa binary"
#endif

#include <json.hpp>

#include "gadfa/date.hpp"
#include "gadfa/util.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(GADFA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Daily news for one stock across Jan-Feb 2020; a report every 4th day
// makes the prior day a positive instance.
struct Fixture {
    TempDir tmp;
    std::string news_path, reports_path, config_path;

    Fixture() {
        std::string news, reports;
        for (int i = 0; i < 60; ++i) {
            const auto day = (gadfa::Day::from_iso("2020-01-01") + i).to_iso();
            news += json{{"id", "n" + std::to_string(i)},
                         {"stock", "AAA"},
                         {"date", day},
                         {"title", "daily wrap"},
                         {"body", "orders update number " + std::to_string(i)}}
                        .dump() +
                    "\n";
            if (i % 4 == 1)
                reports += json{{"id", "r" + std::to_string(i)}, {"stock", "AAA"}, {"date", day}}.dump() + "\n";
        }
        news_path = tmp.file("news.jsonl", news);
        reports_path = tmp.file("reports.jsonl", reports);
        config_path = tmp.file("build.json", R"({"T": 1, "seed": 7, "split_strategy": "chronological"})");
    }

    std::string build_args(const std::string& out) const {
        return "build --config " + config_path + " --news " + news_path + " --reports " + reports_path +
               " --out " + out;
    }
};

}  // namespace

TEST_CASE("cli build writes manifest and instances, exit 0") {
    Fixture fx;
    const auto out = fx.tmp.path("out");
    REQUIRE(run_cli(fx.build_args(out)) == 0);
    CHECK(fs::exists(fs::path(out) / "instances.jsonl"));

    const auto manifest = json::parse(gadfa::read_file((fs::path(out) / "manifest.json").string()));
    CHECK(manifest.at("tool") == "gadfa");
    CHECK(manifest.at("subcommand") == "build");
    CHECK(manifest.at("seed") == 7);
    CHECK(manifest.contains("config_hash"));
    CHECK(manifest.contains("created_at"));

    SUBCASE("rebuild into a fresh directory is byte-identical") {
        const auto out2 = fx.tmp.path("out2");
        REQUIRE(run_cli(fx.build_args(out2)) == 0);
        CHECK(gadfa::read_file((fs::path(out) / "instances.jsonl").string()) ==
              gadfa::read_file((fs::path(out2) / "instances.jsonl").string()));
    }
    SUBCASE("--seed overrides the config file seed") {
        const auto out3 = fx.tmp.path("out3");
        REQUIRE(run_cli(fx.build_args(out3) + " --seed 99") == 0);
        const auto m = json::parse(gadfa::read_file((fs::path(out3) / "manifest.json").string()));
        CHECK(m.at("seed") == 99);
    }
}

TEST_CASE("cli eval runs the news-only experiment end to end") {
    Fixture fx;
    const auto out = fx.tmp.path("out");
    REQUIRE(run_cli(fx.build_args(out)) == 0);
    const auto eval_cfg = fx.tmp.file("eval.json", R"({
        "seed": 1,
        "channels": ["news"],
        "model": {"ngram": 1, "tokenizer": "word", "epochs": 50}
    })");
    const auto eval_out = fx.tmp.path("eval_out");
    REQUIRE(run_cli("eval --config " + eval_cfg + " --dataset " + out + "/instances.jsonl --news " +
                    fx.news_path + " --out " + eval_out) == 0);
    const auto report = json::parse(gadfa::read_file((fs::path(eval_out) / "report.json").string()));
    CHECK(report.contains("macro_f1"));
    CHECK(!report.at("predictions").empty());
    CHECK(fs::exists(fs::path(eval_out) / "manifest.json"));
}

TEST_CASE("cli exit codes") {
    Fixture fx;
    SUBCASE("unknown subcommand is a usage error (1)") {
        CHECK(run_cli("frobnicate") == 1);
    }
    SUBCASE("missing input file is an I/O error (2), manifest already written") {
        const auto out = fx.tmp.path("io_out");
        CHECK(run_cli("build --config " + fx.config_path + " --news " + fx.tmp.path("absent.jsonl") +
                      " --reports " + fx.reports_path + " --out " + out) == 2);
        CHECK(fs::exists(fs::path(out) / "manifest.json"));
    }
    SUBCASE("malformed config is a validation error (1)") {
        const auto bad = fx.tmp.file("bad.json", "{ not json");
        CHECK(run_cli("build --config " + bad + " --news " + fx.news_path + " --reports " +
                      fx.reports_path + " --out " + fx.tmp.path("bad_out")) == 1);
    }
    SUBCASE("eval with a missing dataset is an I/O error (2)") {
        const auto cfg = fx.tmp.file("eval.json", R"({"channels": ["news"]})");
        CHECK(run_cli("eval --config " + cfg + " --dataset " + fx.tmp.path("absent.jsonl") + " --news " +
                      fx.news_path + " --out " + fx.tmp.path("e_out")) == 2);
    }
}

TEST_CASE("cli rouge on identical lines reports perfect scores") {
    TempDir tmp;
    const auto cand = tmp.file("cand.txt", "alpha beta gamma\n市場 上漲\n");
    const auto ref = tmp.file("ref.txt", "alpha beta gamma\n市場 上漲\n");
    const auto out = tmp.path("out");
    REQUIRE(run_cli("rouge --candidates " + cand + " --references " + ref + " --out " + out) == 0);
    const auto report = json::parse(gadfa::read_file((fs::path(out) / "rouge.json").string()));
    CHECK(report.at("pairs") == 2);
    for (const auto& s : report.at("scores")) CHECK(s.at("value").get<double>() == doctest::Approx(1.0));
}

TEST_CASE("cli pmi ranks a planted keyword first") {
    TempDir tmp;
    std::string docs;
    for (int i = 0; i < 12; ++i) {
        const bool cond = i % 2 == 0;
        docs += json{{"text", cond ? "tariff shock hits" : "calm session today"}, {"condition", cond}}.dump() +
                "\n";
    }
    const auto docs_path = tmp.file("docs.jsonl", docs);
    const auto out = tmp.path("out");
    REQUIRE(run_cli("pmi --docs " + docs_path + " --tokenizer word --min-doc-freq 2 --top-k 3 --out " + out) ==
            0);
    const auto lines = gadfa::read_file((fs::path(out) / "keywords.jsonl").string());
    const auto first = json::parse(lines.substr(0, lines.find('\n')));
    CHECK(first.at("score").get<double>() > 0.0);
}
