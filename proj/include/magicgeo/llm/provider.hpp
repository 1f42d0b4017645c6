#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

namespace magicgeo::llm {

enum class ProviderKind { OpenAICompatible, Mock };

struct ProviderConfig {
    ProviderKind kind = ProviderKind::Mock;
    std::string endpoint;  // full chat-completions URL
    std::string model_name = "mock";
    std::string api_key_env = "MAGICGEO_API_KEY";
    double temperature = 0.0;
    int max_tokens = 2048;
    double timeout = 60.0;  // seconds
    std::string transcript_path;

    void check() const {
        if (!(temperature >= 0.0 && temperature <= 2.0)) throw std::invalid_argument("temperature must be in [0, 2]");
        if (!(timeout > 0.0)) throw std::invalid_argument("timeout must be > 0");
        if (max_tokens <= 0) throw std::invalid_argument("max_tokens must be > 0");
        if (kind == ProviderKind::Mock) {
            if (transcript_path.empty()) throw std::invalid_argument("the mock provider needs a transcript path");
            return;
        }
        static const std::regex url(R"(^https?://[A-Za-z0-9.\-]+(:[0-9]{1,5})?(/[^\s]*)?$)");
        if (!std::regex_match(endpoint, url)) throw std::invalid_argument("endpoint '" + endpoint + "' is not an http(s) URL");
        if (model_name.empty()) throw std::invalid_argument("model name must not be empty");
        if (api_key_env.empty()) throw std::invalid_argument("api key environment variable name must not be empty");
    }
};

/// Base of every provider failure; never a formalization failure.
class ProviderError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Connection failures, timeouts and HTTP error statuses.
class TransportError : public ProviderError {
  public:
    explicit TransportError(const std::string& what, int http_status = 0)
        : ProviderError(what), http_status_(http_status) {}
    int http_status() const { return http_status_; }

  private:
    int http_status_;
};

/// The provider answered, but not with a usable completion.
class PayloadError : public ProviderError {
  public:
    using ProviderError::ProviderError;
};

struct ChatMessage {
    std::string role;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 2048;
};

/// Canonical text of a request: what mocks match against, dry runs print and
/// the cache key hashes.
inline std::string request_text(const ChatRequest& req) {
    std::string out;
    for (const auto& m : req.messages) out += fmt::format("[{}]\n{}\n", m.role, m.content);
    return out;
}

inline std::string wire_body(const ChatRequest& req) {
    nlohmann::ordered_json j;
    j["model"] = req.model;
    j["messages"] = nlohmann::ordered_json::array();
    for (const auto& m : req.messages) j["messages"].push_back({{"role", m.role}, {"content", m.content}});
    j["temperature"] = req.temperature;
    j["max_tokens"] = req.max_tokens;
    return j.dump();
}

/// First choice's message content of a chat-completion response.
inline std::string completion_content(const std::string& body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw PayloadError(std::string("provider response is not JSON: ") + e.what());
    }
    const auto choices = j.find("choices");
    if (choices == j.end() || !choices->is_array() || choices->empty())
        throw PayloadError("provider response has no choices");
    const auto& msg = (*choices)[0];
    if (!msg.contains("message") || !msg["message"].contains("content") || !msg["message"]["content"].is_string())
        throw PayloadError("provider response has no message content");
    return msg["message"]["content"].get<std::string>();
}

inline std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

class ChatTransport {
  public:
    virtual ~ChatTransport() = default;
    virtual std::string complete(const ChatRequest& req) = 0;
};

/// Replays a transcript: a JSON array of {request_substring, response}. Each
/// request consumes the first unused entry whose substring occurs in it.
class MockTransport : public ChatTransport {
  public:
    struct Entry {
        std::string request_substring;
        std::string response;
        bool used = false;
    };

    explicit MockTransport(std::vector<Entry> entries) : entries_(std::move(entries)) {}

    static std::vector<Entry> read_transcript(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw TransportError("cannot open mock transcript '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_transcript(ss.str());
    }

    static std::vector<Entry> parse_transcript(const std::string& text) {
        std::vector<Entry> entries;
        try {
            const auto j = nlohmann::json::parse(text);
            if (!j.is_array()) throw PayloadError("mock transcript must be a JSON array");
            for (const auto& e : j)
                entries.push_back({e.at("request_substring").get<std::string>(), e.at("response").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw PayloadError(std::string("malformed mock transcript: ") + e.what());
        }
        return entries;
    }

    std::string complete(const ChatRequest& req) override {
        const std::string text = request_text(req);
        std::lock_guard lock(mu_);
        for (auto& e : entries_) {
            if (e.used || text.find(e.request_substring) == std::string::npos) continue;
            e.used = true;
            return e.response;
        }
        throw TransportError("mock transcript has no unused entry matching the request");
    }

  private:
    std::vector<Entry> entries_;
    std::mutex mu_;
};

/// POSTs an OpenAI-compatible chat completion. The API key comes only from
/// the environment variable named in the config.
class OpenAICompatibleTransport : public ChatTransport {
  public:
    explicit OpenAICompatibleTransport(ProviderConfig cfg) : cfg_(std::move(cfg)) {}
    std::string complete(const ChatRequest& req) override;

  private:
    ProviderConfig cfg_;
};

/// Front end shared by every stage: content-addressed response cache plus
/// call counters.
class Provider {
  public:
    Provider(ProviderConfig cfg, std::unique_ptr<ChatTransport> transport, std::optional<std::filesystem::path> cache_dir)
        : cfg_(std::move(cfg)), transport_(std::move(transport)), cache_dir_(std::move(cache_dir)) {}

    const ProviderConfig& config() const { return cfg_; }

    ChatRequest make_request(std::vector<ChatMessage> messages) const {
        return ChatRequest{cfg_.model_name, std::move(messages), cfg_.temperature, cfg_.max_tokens};
    }

    std::string cache_key(const ChatRequest& req) const { return sha256_hex(cfg_.model_name + "\n" + request_text(req)); }

    std::string complete(const ChatRequest& req) {
        ++calls_;
        std::optional<std::filesystem::path> file;
        if (cache_dir_) {
            file = *cache_dir_ / cache_key(req);
            std::ifstream in(*file, std::ios::binary);
            if (in) {
                std::stringstream ss;
                ss << in.rdbuf();
                return ss.str();
            }
        }
        ++network_calls_;
        std::string response = transport_->complete(req);
        if (file) store(*file, response);
        return response;
    }

    int calls() const { return calls_; }
    int network_calls() const { return network_calls_; }

  private:
    void store(const std::filesystem::path& file, const std::string& bytes) {
        std::lock_guard lock(write_mu_);
        std::filesystem::create_directories(file.parent_path());
        const auto tmp = file.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw ProviderError("cannot write cache file '" + tmp + "'");
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        }
        std::filesystem::rename(tmp, file);
    }

    ProviderConfig cfg_;
    std::unique_ptr<ChatTransport> transport_;
    std::optional<std::filesystem::path> cache_dir_;
    std::mutex write_mu_;
    std::atomic<int> calls_{0};
    std::atomic<int> network_calls_{0};
};

}  // namespace magicgeo::llm
