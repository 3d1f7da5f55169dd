#ifndef GADFA_REMOTE_HPP
#define GADFA_REMOTE_HPP

#include <atomic>
#include <chrono>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "gadfa/backend.hpp"
#include "gadfa/pipeline.hpp"
#include "gadfa/util.hpp"

namespace gadfa {

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{500};  // doubles per retry
};

// HTTP client for the generation wire protocol:
//   POST /v1/generate  {"task": "...", "inputs": [...]}  ->  {"outputs": [...]}
// Non-2xx responses and output-length mismatches are hard errors; transient
// transport failures are retried with exponential backoff.
class RemoteBackend : public GeneratorBackend {
public:
    RemoteBackend(std::string name, std::string url, RetryPolicy retry = {})
        : name_(std::move(name)), url_(std::move(url)), retry_(retry) {}

    const std::string& name() const override { return name_; }

    // total POSTs issued, including retries; lets tests prove zero network
    // activity under transcript replay
    std::size_t request_count() const { return requests_.load(); }

    std::vector<std::string> generate(GenTask task, const std::vector<std::string>& inputs) override {
        const nlohmann::json body{{"task", to_string(task)}, {"inputs", inputs}};
        const std::string payload = body.dump();
        std::string last_error;
        auto backoff = retry_.initial_backoff;
        for (int attempt = 1; attempt <= retry_.attempts; ++attempt) {
            if (attempt > 1) {
                std::this_thread::sleep_for(backoff);
                backoff *= 2;
            }
            httplib::Client client(url_);
            client.set_connection_timeout(10, 0);
            client.set_read_timeout(60, 0);
            ++requests_;
            auto res = client.Post("/v1/generate", payload, "application/json");
            if (!res) {
                last_error = "transport failure: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status < 200 || res->status >= 300) {
                last_error = "HTTP status " + std::to_string(res->status);
                continue;
            }
            auto j = nlohmann::json::parse(res->body, nullptr, false);
            if (j.is_discarded() || !j.contains("outputs") || !j["outputs"].is_array())
                throw TransportError("backend '" + name_ + "' returned a malformed response body");
            auto outputs = j["outputs"].get<std::vector<std::string>>();
            if (outputs.size() != inputs.size())
                throw TransportError("backend '" + name_ + "' returned " + std::to_string(outputs.size()) +
                                     " outputs for " + std::to_string(inputs.size()) + " inputs");
            return outputs;
        }
        throw TransportError("backend '" + name_ + "' unreachable after " + std::to_string(retry_.attempts) +
                             " attempts (" + last_error + ")");
    }

private:
    std::string name_;
    std::string url_;
    RetryPolicy retry_;
    std::atomic<std::size_t> requests_{0};
};

// Standard factory for pipeline backend configs. `url_override` (typically
// from the GADFA_BACKEND_URL environment variable) redirects every remote
// backend, e.g. at a locally served mock.
inline std::shared_ptr<GeneratorBackend> make_backend(const std::string& name, const BackendConfig& bc,
                                                      const std::string& url_override = "") {
    if (bc.kind == "remote") {
        RetryPolicy retry;
        retry.attempts = bc.retries;
        retry.initial_backoff = std::chrono::milliseconds(bc.backoff_ms);
        return std::make_shared<RemoteBackend>(name, url_override.empty() ? bc.url : url_override, retry);
    }
    if (bc.kind == "inject") {
        if (bc.pattern.empty())
            throw ValidationError("inject backend '" + name + "' requires a pattern");
        return std::make_shared<InjectBackend>(name, bc.pattern, bc.on_match, bc.on_miss);
    }
    SentimentLexicon lexicon;
    if (!bc.lexicon_path.empty()) lexicon = SentimentLexicon::load(bc.lexicon_path);
    return std::make_shared<BaselineBackend>(name, std::move(lexicon), bc.lead_k);
}

}  // namespace gadfa

#endif
