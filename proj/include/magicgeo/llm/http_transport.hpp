#pragma once

#include <cstdlib>
#include <regex>
#include <string>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
// resolv.h, pulled in by httplib, defines _res as a macro; it breaks any
// header included afterwards that uses _res as an identifier (Eigen does).
#ifdef _res
#undef _res
#endif

#include "magicgeo/llm/provider.hpp"

namespace magicgeo::llm {

inline std::string OpenAICompatibleTransport::complete(const ChatRequest& req) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(cfg_.endpoint, m, url)) throw TransportError("endpoint '" + cfg_.endpoint + "' is not a URL");
    const std::string origin = m[1].str();
    const std::string path = m[2].matched ? m[2].str() : "/";

    const char* key = std::getenv(cfg_.api_key_env.c_str());
    httplib::Headers headers;
    if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);

    httplib::Client client(origin);
    const auto secs = static_cast<time_t>(cfg_.timeout);
    const auto usecs = static_cast<time_t>((cfg_.timeout - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    const auto res = client.Post(path, headers, wire_body(req), "application/json");
    if (!res) throw TransportError("request to " + origin + " failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw TransportError(fmt::format("provider returned HTTP {}", res->status), res->status);
    return completion_content(res->body);
}

inline std::unique_ptr<ChatTransport> make_transport(const ProviderConfig& cfg) {
    cfg.check();
    if (cfg.kind == ProviderKind::Mock)
        return std::make_unique<MockTransport>(MockTransport::read_transcript(cfg.transcript_path));
    return std::make_unique<OpenAICompatibleTransport>(cfg);
}

}  // namespace magicgeo::llm
