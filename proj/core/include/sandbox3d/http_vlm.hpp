#pragma once

// Chat VLM over an OpenAI-compatible chat-completions endpoint.

#include "sandbox3d/providers.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <memory>
#include <semaphore>
#include <string>

namespace sandbox3d {

struct HttpVlmConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key;
    std::string model = "gpt-4o-mini";
    double timeout_s = 120.0;
    int max_retries = 3;      // extra attempts after the first, on 429 / 5xx / transport errors
    int max_in_flight = 2;    // concurrent requests to the endpoint
    double backoff_base_s = 1.0;
    double backoff_max_s = 30.0;

    // Overrides from SANDBOX3D_API_KEY, SANDBOX3D_BASE_URL and SANDBOX3D_MODEL when set.
    static HttpVlmConfig from_env(HttpVlmConfig defaults);
};

// Request body: model, messages with text and base64 PNG data-URL image parts,
// temperature, max_tokens.
nlohmann::json build_chat_request(const std::string& model, const std::vector<ChatTurn>& turns,
                                  const DecodeParams& params);

// Text of the first choice. Throws ProviderError on a malformed body.
std::string parse_chat_response(const std::string& body, int status = 200);

// "data:image/png;base64,..."
std::string image_data_url(const RgbImage& image);

class HttpVlm : public ChatVlm {
public:
    explicit HttpVlm(HttpVlmConfig config);
    std::string complete(const std::vector<ChatTurn>& turns, const DecodeParams& params) override;

    const HttpVlmConfig& config() const { return config_; }
    // HTTP requests sent so far, retries included.
    int requests_sent() const { return requests_.load(); }

private:
    HttpVlmConfig config_;
    std::string scheme_host_port_;
    std::string path_;
    std::counting_semaphore<64> slots_;
    std::atomic<int> requests_{0};
};

}  // namespace sandbox3d
