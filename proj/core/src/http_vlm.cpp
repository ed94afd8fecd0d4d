#include "sandbox3d/http_vlm.hpp"

#include "sandbox3d/errors.hpp"
#include "sandbox3d/image_io.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace sandbox3d {

namespace {

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

bool retryable(int status) { return status == 0 || status == 429 || status >= 500; }

// Releases an in-flight slot on scope exit.
struct SlotGuard {
    std::counting_semaphore<64>& sem;
    explicit SlotGuard(std::counting_semaphore<64>& s) : sem(s) { sem.acquire(); }
    ~SlotGuard() { sem.release(); }
};

}  // namespace

HttpVlmConfig HttpVlmConfig::from_env(HttpVlmConfig c) {
    c.api_key = env_or("SANDBOX3D_API_KEY", c.api_key);
    c.base_url = env_or("SANDBOX3D_BASE_URL", c.base_url);
    c.model = env_or("SANDBOX3D_MODEL", c.model);
    return c;
}

std::string image_data_url(const RgbImage& image) {
    if (!png_supported()) throw ProviderError(0, "PNG support is required to send images");
    const auto png = encode_png(image);
    return "data:image/png;base64," + httplib::detail::base64_encode(std::string(png.begin(), png.end()));
}

nlohmann::json build_chat_request(const std::string& model, const std::vector<ChatTurn>& turns,
                                  const DecodeParams& params) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& t : turns) {
        nlohmann::json content = nlohmann::json::array();
        for (const auto& p : t.parts) {
            if (p.kind == ChatPart::Kind::text)
                content.push_back({{"type", "text"}, {"text", p.text}});
            else
                content.push_back({{"type", "image_url"}, {"image_url", {{"url", image_data_url(p.image)}}}});
        }
        messages.push_back({{"role", std::string(to_string(t.role))}, {"content", std::move(content)}});
    }
    return {{"model", model}, {"messages", std::move(messages)}, {"temperature", params.temperature},
            {"max_tokens", params.max_tokens}};
}

std::string parse_chat_response(const std::string& body, int status) {
    try {
        const auto j = nlohmann::json::parse(body);
        const auto& content = j.at("choices").at(0).at("message").at("content");
        if (content.is_string()) return content.get<std::string>();
        if (content.is_array()) {
            std::string out;
            for (const auto& part : content)
                if (part.value("type", "") == "text") out += part.at("text").get<std::string>();
            return out;
        }
        throw ProviderError(status, "message content is neither text nor a part list");
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(status, std::string("malformed response: ") + e.what());
    }
}

HttpVlm::HttpVlm(HttpVlmConfig config)
    : config_(std::move(config)), slots_(std::clamp(config_.max_in_flight, 1, 64)) {
    const auto scheme_end = config_.base_url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("VLM base URL needs a scheme: " + config_.base_url);
    const auto path_start = config_.base_url.find('/', scheme_end + 3);
    scheme_host_port_ = config_.base_url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    path_ = prefix + "/chat/completions";
    if (config_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

std::string HttpVlm::complete(const std::vector<ChatTurn>& turns, const DecodeParams& params) {
    const std::string body = build_chat_request(config_.model, turns, params).dump();
    int last_status = 0;
    std::string last_detail;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            double wait = config_.backoff_base_s * std::pow(2.0, attempt - 1);
            wait = std::min(wait, config_.backoff_max_s);
            std::this_thread::sleep_for(std::chrono::duration<double>(wait));
        }
        httplib::Result res{nullptr, httplib::Error::Unknown};
        {
            SlotGuard slot(slots_);
            httplib::Client cli(scheme_host_port_);
            cli.set_follow_location(false);
            const auto timeout = std::chrono::duration<double>(config_.timeout_s);
            cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
            cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
            cli.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
            if (!config_.api_key.empty()) cli.set_bearer_token_auth(config_.api_key);
            ++requests_;
            res = cli.Post(path_, body, "application/json");
        }
        if (!res) {
            last_status = 0;
            last_detail = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        last_status = res->status;
        if (res->status >= 200 && res->status < 300) return parse_chat_response(res->body, res->status);
        last_detail = res->body.substr(0, 300);
        if (!retryable(res->status)) break;
    }
    throw ProviderError(last_status, last_detail);
}

}  // namespace sandbox3d
