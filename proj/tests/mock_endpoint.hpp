#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

// The resolver header pulled in by the HTTP client defines `_res` as an
// object-like macro, which mangles parameter names inside any linear-algebra
// headers included afterwards.
#ifdef _res
#undef _res
#endif

namespace mockserver {

struct Reply {
    int status = 200;
    std::string body;
};

// Chat-completion payload in the shape the harvester's extractor reads.
inline std::string completion(const std::string& text) {
    nlohmann::json doc{{"choices",
                        nlohmann::json::array({nlohmann::json{
                            {"message", {{"role", "assistant"}, {"content", text}}}}})}};
    return doc.dump();
}

// Option A's name out of a rendered prompt: the span between the colon after
// the anchor and the " or " that separates the two options.
inline std::string option_a_of(const nlohmann::json& request) {
    const std::string user = request.at("messages").at(1).at("content").get<std::string>();
    const auto anchor_colon = user.find(": ", user.find("similar to"));
    const auto a_begin = anchor_colon + 2;
    const auto a_end = user.find(" or ", a_begin);
    return user.substr(a_begin, a_end - a_begin);
}

// In-process endpoint bound to an ephemeral loopback port. The handler gets
// the parsed request body plus a global request index and decides the reply.
class MockServer {
public:
    using Handler = std::function<Reply(const nlohmann::json& request, int index)>;

    explicit MockServer(Handler handler) : handler_(std::move(handler)) {
        server_.Post("/v1/chat/completions",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         const int index = count_.fetch_add(1);
                         {
                             std::lock_guard<std::mutex> lk(mutex_);
                             auth_headers_.push_back(req.get_header_value("Authorization"));
                             bodies_.push_back(req.body);
                         }
                         const auto doc = nlohmann::json::parse(req.body, nullptr, false);
                         const Reply reply = handler_(doc, index);
                         res.status = reply.status;
                         res.set_content(reply.body, "application/json");
                     });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    int request_count() const { return count_.load(); }

    std::vector<std::string> auth_headers() {
        std::lock_guard<std::mutex> lk(mutex_);
        return auth_headers_;
    }

    std::vector<std::string> bodies() {
        std::lock_guard<std::mutex> lk(mutex_);
        return bodies_;
    }

private:
    Handler handler_;
    httplib::Server server_;
    std::thread thread_;
    std::atomic<int> count_{0};
    std::mutex mutex_;
    std::vector<std::string> auth_headers_;
    std::vector<std::string> bodies_;
    int port_ = 0;
};

}  // namespace mockserver
