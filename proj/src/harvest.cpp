#include "tripalign/harvest.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "tripalign/error.hpp"
#include "tripalign/rng.hpp"

namespace tripalign {

namespace {

// "http://host:port/v1" -> ("http://host:port", "/v1")
std::pair<std::string, std::string> split_base_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) fail("InvalidUrl", "base_url needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_start), prefix};
}

struct Halt {
    std::mutex mutex;
    std::atomic<bool> flag{false};
    std::string category;
    std::string message;

    void raise(const std::string& cat, const std::string& msg) {
        std::lock_guard<std::mutex> lk(mutex);
        if (!flag.exchange(true)) {
            category = cat;
            message = msg;
        }
    }
};

// A crash can leave a partial record with no newline at the end of the log.
// Appending after it would glue two records into one unparseable line, so
// the file is cut back to the last complete line before any new write.
void trim_partial_tail(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return;
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    if (content.empty() || content.back() == '\n') return;
    const std::size_t nl = content.find_last_of('\n');
    std::error_code ec;
    std::filesystem::resize_file(path, nl == std::string::npos ? 0 : nl + 1, ec);
    if (ec) fail("IoError", "cannot trim partial log line in " + path);
}

class Appender {
public:
    Appender(const std::string& path, HarvestSession& session, HarvestSummary& summary)
        : session_(session), summary_(summary) {
        trim_partial_tail(path);
        out_.open(path, std::ios::app);
        if (!out_) fail("IoError", "cannot open log for append: " + path);
    }

    // Write-ahead: the line is flushed to the OS before the trial is marked
    // complete, so a completed id always has a durable record.
    void commit(const Judgment& j, int retries_used) {
        std::lock_guard<std::mutex> lk(mutex_);
        out_ << judgment_to_jsonl(j) << '\n';
        out_.flush();
        if (!out_) fail("IoError", "log append failed");
        session_.completed.insert(j.trial.trial_id);
        summary_.retried += retries_used;
        if (j.valid) {
            ++summary_.valid;
        } else {
            ++summary_.invalid;
        }
    }

private:
    std::mutex mutex_;
    HarvestSession& session_;
    HarvestSummary& summary_;
    std::ofstream out_;
};

void backoff_sleep(int attempt, const EndpointConfig& cfg, Rng& rng) {
    const double raw = cfg.backoff_base_s * std::ldexp(1.0, attempt);
    const double capped = std::min(raw, cfg.backoff_cap_s);
    const double jittered = capped * (0.5 + 0.5 * rng.uniform());
    std::this_thread::sleep_for(std::chrono::duration<double>(jittered));
}

// One request with transport-level retries. Parse-level validity is the
// caller's concern; this returns the response text to hand to the parser,
// or nullopt once the halt flag is raised.
std::optional<std::string> post_once(httplib::Client& client, const std::string& path,
                                     const std::string& body, const EndpointConfig& cfg,
                                     Halt& halt, Rng& rng) {
    for (int attempt = 0; attempt < cfg.transport_attempts; ++attempt) {
        if (halt.flag.load()) return std::nullopt;
        auto res = client.Post(path, body, "application/json");
        if (!res) {
            if (attempt + 1 < cfg.transport_attempts) {
                backoff_sleep(attempt, cfg, rng);
                continue;
            }
            halt.raise("EndpointUnreachable", "no response after " +
                                                  std::to_string(cfg.transport_attempts) + " attempts");
            return std::nullopt;
        }
        if (res->status == 200) return res->body;
        if (res->status == 401 || res->status == 403) {
            halt.raise("AuthFailure", "endpoint returned HTTP " + std::to_string(res->status));
            return std::nullopt;
        }
        if (res->status == 429 || res->status >= 500) {
            if (attempt + 1 < cfg.transport_attempts) {
                backoff_sleep(attempt, cfg, rng);
                continue;
            }
            halt.raise("EndpointUnreachable",
                       "endpoint kept failing with HTTP " + std::to_string(res->status));
            return std::nullopt;
        }
        // Remaining 4xx responses are configuration problems; retrying the
        // same request cannot fix them.
        halt.raise("EndpointUnreachable", "endpoint rejected request with HTTP " +
                                              std::to_string(res->status));
        return std::nullopt;
    }
    return std::nullopt;
}

// Extracts choices[0].message.content; any shape problem falls back to the
// raw body so the parse failure is visible in the audit log.
std::string completion_text(const std::string& body) {
    auto doc = nlohmann::json::parse(body, nullptr, false);
    if (doc.is_discarded()) return body;
    auto it = doc.find("choices");
    if (it == doc.end() || !it->is_array() || it->empty()) return body;
    const auto& message = (*it)[0];
    if (!message.contains("message") || !message["message"].contains("content") ||
        !message["message"]["content"].is_string()) {
        return body;
    }
    return message["message"]["content"].get<std::string>();
}

}  // namespace

HarvestSummary harvest(HarvestSession& session, const EndpointConfig& cfg) {
    if (session.trials.empty()) fail("InvalidCount", "harvest needs at least one trial");
    if (cfg.max_in_flight < 1) fail("InvalidCount", "max_in_flight must be >= 1");
    if (!(cfg.request_timeout_s > 0.0)) fail("InvalidCount", "request_timeout must be positive");
    const auto [host, prefix] = split_base_url(cfg.base_url);
    const std::string path = prefix + "/chat/completions";

    std::vector<const TripletTrial*> pending;
    for (const auto& t : session.trials) {
        if (!session.completed.count(t.trial_id)) pending.push_back(&t);
    }
    HarvestSummary summary;
    if (pending.empty()) return summary;

    Appender appender(session.log_path, session, summary);
    Halt halt;
    std::atomic<std::size_t> cursor{0};

    auto worker = [&]() {
        httplib::Client client(host);
        const auto timeout =
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::duration<double>(cfg.request_timeout_s));
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        if (cfg.api_key) {
            client.set_default_headers({{"Authorization", "Bearer " + *cfg.api_key}});
        }
        while (!halt.flag.load()) {
            const std::size_t idx = cursor.fetch_add(1);
            if (idx >= pending.size()) break;
            const TripletTrial& trial = *pending[idx];
            Rng rng(static_cast<std::uint64_t>(trial.trial_id) * 0x9e3779b97f4a7c15ull + 1);

            const PromptBundle prompt = render_prompt(trial, session.concepts, session.base_model);
            nlohmann::json body = cfg.sampling;
            body["model"] = cfg.model_name;
            body["messages"] = nlohmann::json::array(
                {{{"role", "system"}, {"content", prompt.system}},
                 {{"role", "user"}, {"content", prompt.user}}});
            const std::string body_text = body.dump();

            Judgment judgment;
            int retries_used = 0;
            for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
                auto text = post_once(client, path, body_text, cfg, halt, rng);
                if (!text) return;   // halted; the trial stays pending for resume
                judgment = parse_response(completion_text(*text), trial, session.concepts,
                                          cfg.model_name);
                if (judgment.valid) break;
                if (attempt < cfg.max_retries) ++retries_used;
            }
            appender.commit(judgment, retries_used);
        }
    };

    const int thread_count =
        static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(cfg.max_in_flight),
                                               pending.size()));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(thread_count));
    for (int i = 0; i < thread_count; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    if (halt.flag.load()) fail(halt.category, halt.message);
    return summary;
}

HarvestSession resume(const std::string& log_path, const std::vector<TripletTrial>& trials) {
    HarvestSession session;
    session.trials = trials;
    session.log_path = log_path;
    session.budget = static_cast<int>(trials.size());

    std::set<int> known;
    for (const auto& t : trials) known.insert(t.trial_id);

    std::ifstream in(log_path, std::ios::binary);
    if (!in) return session;   // nothing written yet
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::size_t start = 0;
    while (start < content.size()) {
        const std::size_t nl = content.find('\n', start);
        if (nl == std::string::npos) break;   // truncated trailing line: not yet durable
        const std::string line = content.substr(start, nl - start);
        start = nl + 1;
        if (line.empty()) continue;
        Judgment j;
        try {
            j = judgment_from_jsonl(line);
        } catch (const Error&) {
            fail("MalformedLog", "unparseable interior log line in " + log_path);
        }
        if (!known.count(j.trial.trial_id)) {
            fail("ForeignTrial",
                 "log records trial_id " + std::to_string(j.trial.trial_id) +
                     " that is not in the trial list");
        }
        session.completed.insert(j.trial.trial_id);
    }
    return session;
}

}  // namespace tripalign
