#ifndef GADFA_MOCK_SERVER_HPP
#define GADFA_MOCK_SERVER_HPP

#include <memory>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "gadfa/backend.hpp"
#include "gadfa/util.hpp"

namespace gadfa {

// Local generation backend speaking the wire protocol, so the whole test
// suite and any offline run can work without a real model server.
// Modes:
//   echo       output = input
//   inject     planted-signal marker emission (see InjectBackend)
//   transcript canned outputs from a recorded transcript file
class MockGenerationServer {
public:
    explicit MockGenerationServer(std::shared_ptr<GeneratorBackend> backend)
        : backend_(std::move(backend)) {
        server_.Post("/v1/generate", [this](const httplib::Request& req, httplib::Response& res) {
            handle(req, res);
        });
    }

    static std::shared_ptr<GeneratorBackend> make_echo() {
        return std::make_shared<EchoBackend>();
    }

    static std::shared_ptr<GeneratorBackend> make_inject(const std::string& pattern,
                                                         const std::string& on_match,
                                                         const std::string& on_miss) {
        return std::make_shared<InjectBackend>("mock-inject", pattern, on_match, on_miss);
    }

    static std::shared_ptr<GeneratorBackend> make_transcript(const std::string& path) {
        return std::make_shared<TranscriptOnlyBackend>(TranscriptCache::load(path));
    }

    // Binds to an ephemeral port and serves on a background thread.
    int start(const std::string& host = "127.0.0.1") {
        port_ = server_.bind_to_any_port(host);
        if (port_ <= 0) throw TransportError("mock server failed to bind");
        thread_ = std::thread([this, host] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port_;
    }

    // Blocking serve on a fixed port (CLI serve-mock).
    bool serve(const std::string& host, int port) { return server_.listen(host, port); }

    void stop() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    ~MockGenerationServer() { stop(); }

    int port() const { return port_; }
    std::size_t request_count() const { return requests_; }

private:
    class EchoBackend : public GeneratorBackend {
    public:
        const std::string& name() const override {
            static const std::string n = "mock-echo";
            return n;
        }
        std::vector<std::string> generate(GenTask, const std::vector<std::string>& inputs) override {
            return inputs;
        }
    };

    class TranscriptOnlyBackend : public GeneratorBackend {
    public:
        explicit TranscriptOnlyBackend(TranscriptCache cache) : cache_(std::move(cache)) {}
        const std::string& name() const override {
            static const std::string n = "mock-transcript";
            return n;
        }
        std::vector<std::string> generate(GenTask task, const std::vector<std::string>& inputs) override {
            std::vector<std::string> out;
            out.reserve(inputs.size());
            for (const auto& input : inputs) {
                auto hit = cache_.get(task, input);
                if (!hit) throw ValidationError("no transcript entry for input");
                out.push_back(*hit);
            }
            return out;
        }

    private:
        TranscriptCache cache_;
    };

    void handle(const httplib::Request& req, httplib::Response& res) {
        ++requests_;
        auto j = nlohmann::json::parse(req.body, nullptr, false);
        if (j.is_discarded() || !j.contains("task") || !j.contains("inputs") || !j["inputs"].is_array()) {
            res.status = 400;
            res.set_content(R"({"error":"malformed request"})", "application/json");
            return;
        }
        try {
            const GenTask task = gen_task_from_string(j["task"].get<std::string>());
            const auto inputs = j["inputs"].get<std::vector<std::string>>();
            const auto outputs = backend_->generate(task, inputs);
            res.set_content(nlohmann::json{{"outputs", outputs}}.dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 422;
            res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
        }
    }

    std::shared_ptr<GeneratorBackend> backend_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::size_t requests_ = 0;
};

}  // namespace gadfa

#endif
