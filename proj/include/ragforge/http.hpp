#pragma once

// Thin JSON-over-HTTP client on top of cpp-httplib, mapping transport failures to typed errors.

#include <httplib.h>

#include <chrono>
#include <nlohmann/json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "ragforge/error.hpp"

namespace ragforge::http {

using json = nlohmann::json;

struct Response {
    int status = 0;
    std::string body;

    bool ok() const noexcept { return status >= 200 && status < 300; }
};

struct FilePart {
    std::string field;
    std::string filename;
    std::string content;
    std::string content_type;
};

/// Splits "scheme://host[:port][/base]" into the origin httplib wants and a path prefix.
inline std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto scheme = endpoint.find("://");
    if (scheme == std::string::npos) throw Error(ErrorKind::InvalidConfig, "endpoint '" + endpoint + "' has no scheme");
    auto slash = endpoint.find('/', scheme + 3);
    if (slash == std::string::npos) return {endpoint, ""};
    std::string base = endpoint.substr(slash);
    while (!base.empty() && base.back() == '/') base.pop_back();
    return {endpoint.substr(0, slash), base};
}

inline std::string excerpt(const std::string& body, std::size_t max = 200) {
    return body.size() <= max ? body : body.substr(0, max) + "...";
}

class Client {
public:
    Client(const std::string& endpoint, std::chrono::milliseconds timeout, httplib::Headers headers = {})
        : endpoint_(endpoint), headers_(std::move(headers)) {
        auto [origin, base] = split_endpoint(endpoint);
        base_ = base;
        client_ = std::make_unique<httplib::Client>(origin);
        if (!client_->is_valid()) throw Error(ErrorKind::InvalidConfig, "unsupported endpoint '" + endpoint + "'");
        auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout);
        auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout - sec);
        client_->set_connection_timeout(sec.count(), usec.count());
        client_->set_read_timeout(sec.count(), usec.count());
        client_->set_write_timeout(sec.count(), usec.count());
    }

    const std::string& endpoint() const noexcept { return endpoint_; }

    Response post_json(const std::string& path, const json& body) {
        return check(client_->Post(base_ + path, headers_, body.dump(), "application/json"), path);
    }

    Response get(const std::string& path) { return check(client_->Get(base_ + path, headers_), path); }

    Response post_multipart(const std::string& path, const std::vector<FilePart>& parts) {
        httplib::MultipartFormDataItems items;
        for (const auto& p : parts) items.push_back({p.field, p.content, p.filename, p.content_type});
        return check(client_->Post(base_ + path, headers_, items), path);
    }

private:
    Response check(httplib::Result res, const std::string& path) {
        if (!res) {
            auto err = res.error();
            std::string where = endpoint_ + path;
            if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout) {
                throw Error(ErrorKind::Timeout, "request to " + where + " timed out (" + httplib::to_string(err) + ")");
            }
            throw Error(ErrorKind::BackendUnavailable,
                        "cannot reach " + where + " (" + httplib::to_string(err) + ")");
        }
        return Response{res->status, res->body};
    }

    std::string endpoint_;
    std::string base_;
    httplib::Headers headers_;
    std::unique_ptr<httplib::Client> client_;
};

/// Throws HttpError unless the response is 2xx.
inline const Response& expect_ok(const Response& r, const std::string& what) {
    if (!r.ok()) {
        throw Error(ErrorKind::HttpError, what + " failed with HTTP " + std::to_string(r.status) + ": " + excerpt(r.body),
                    r.status);
    }
    return r;
}

inline json parse_body(const Response& r, const std::string& what) {
    try {
        return json::parse(r.body);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::HttpError, what + " returned invalid JSON: " + excerpt(r.body), r.status);
    }
}

}  // namespace ragforge::http
