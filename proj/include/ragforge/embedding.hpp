#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ragforge/error.hpp"
#include "ragforge/http.hpp"
#include "ragforge/text.hpp"

namespace ragforge::embed {

struct EmbeddingVector {
    std::vector<double> values;
    std::string embedder_id;

    std::size_t dimension() const noexcept { return values.size(); }
};

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = kFnvOffset;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= kFnvPrime;
    }
    return h;
}

inline double norm(std::span<const double> v) noexcept {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/// Cosine similarity; 0 when either side is the zero vector. Sizes must match.
inline double cosine(std::span<const double> a, std::span<const double> b) noexcept {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline void normalize(std::vector<double>& v) noexcept {
    double n = norm(v);
    if (n == 0.0) return;
    for (double& x : v) x /= n;
}

inline std::string reference_id(std::size_t dimension) { return "hashbow-" + std::to_string(dimension); }

/// Signed feature hashing over case-folded whitespace tokens, L2-normalized.
/// Text without tokens maps to the zero vector.
inline EmbeddingVector reference_embed(std::string_view text, std::size_t dimension) {
    if (dimension == 0) throw Error(ErrorKind::InvalidConfig, "embedding dimension must be >= 1");
    EmbeddingVector out;
    out.embedder_id = reference_id(dimension);
    out.values.assign(dimension, 0.0);
    std::string folded = text::case_fold(text);
    for (auto tok : text::tokens(folded)) {
        std::uint64_t h = fnv1a64(tok);
        out.values[h % dimension] += (h >> 63) == 0 ? 1.0 : -1.0;
    }
    normalize(out.values);
    return out;
}

enum class Backend { ReferenceHash, RemoteHttp };

struct EmbedderSpec {
    Backend backend = Backend::ReferenceHash;
    std::size_t dimension = 256;
    std::optional<std::string> endpoint;
    std::optional<std::string> model_name;
    std::optional<std::string> api_key;
    std::chrono::milliseconds timeout{30000};

    void validate() const {
        if (dimension == 0) throw Error(ErrorKind::InvalidConfig, "embedding dimension must be >= 1");
        if (backend == Backend::RemoteHttp && (!endpoint || endpoint->empty() || !model_name || model_name->empty())) {
            throw Error(ErrorKind::InvalidConfig, "remote embedder requires endpoint and model_name");
        }
    }
};

/// POST {endpoint}/v1/embeddings, one batch per call, no retries.
inline std::vector<EmbeddingVector> remote_embed(std::span<const std::string> texts, const EmbedderSpec& spec) {
    spec.validate();
    if (spec.backend != Backend::RemoteHttp) throw Error(ErrorKind::InvalidConfig, "remote_embed needs a RemoteHttp spec");
    if (texts.empty()) throw Error(ErrorKind::InvalidConfig, "remote_embed needs at least one input text");

    httplib::Headers headers;
    if (spec.api_key && !spec.api_key->empty()) headers.emplace("Authorization", "Bearer " + *spec.api_key);
    http::Client client(*spec.endpoint, spec.timeout, headers);
    http::json body = {{"model", *spec.model_name}, {"input", texts}};
    auto resp = client.post_json("/v1/embeddings", body);
    http::expect_ok(resp, "embedding request");
    auto j = http::parse_body(resp, "embedding request");

    std::vector<std::optional<EmbeddingVector>> slots(texts.size());
    try {
        const auto& data = j.at("data");
        if (!data.is_array() || data.size() != texts.size()) {
            throw Error(ErrorKind::HttpError, "embedding response has " + std::to_string(data.size()) +
                                                  " entries for " + std::to_string(texts.size()) + " inputs");
        }
        for (const auto& entry : data) {
            auto index = entry.at("index").get<std::size_t>();
            if (index >= slots.size() || slots[index]) {
                throw Error(ErrorKind::HttpError, "embedding response index " + std::to_string(index) + " is invalid");
            }
            EmbeddingVector v;
            v.embedder_id = *spec.model_name;
            v.values = entry.at("embedding").get<std::vector<double>>();
            if (v.values.size() != spec.dimension) {
                throw Error(ErrorKind::DimensionMismatch, "server returned a vector of length " +
                                                              std::to_string(v.values.size()) + ", expected " +
                                                              std::to_string(spec.dimension));
            }
            for (double x : v.values) {
                if (!std::isfinite(x)) throw Error(ErrorKind::HttpError, "embedding contains non-finite values");
            }
            normalize(v.values);
            slots[index] = std::move(v);
        }
    } catch (const http::json::exception& e) {
        throw Error(ErrorKind::HttpError, std::string("malformed embedding response: ") + e.what());
    }
    std::vector<EmbeddingVector> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

/// Uniform handle over both backends. The id names the vector space; stores refuse foreign ids.
class Embedder {
public:
    explicit Embedder(EmbedderSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

    static Embedder reference(std::size_t dimension = 256) {
        EmbedderSpec s;
        s.dimension = dimension;
        return Embedder(s);
    }

    const EmbedderSpec& spec() const noexcept { return spec_; }
    std::size_t dimension() const noexcept { return spec_.dimension; }

    std::string id() const {
        return spec_.backend == Backend::ReferenceHash ? reference_id(spec_.dimension) : *spec_.model_name;
    }

    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const {
        if (spec_.backend == Backend::RemoteHttp) return texts.empty() ? std::vector<EmbeddingVector>{} : remote_embed(texts, spec_);
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(reference_embed(t, spec_.dimension));
        return out;
    }

    EmbeddingVector embed_one(const std::string& t) const {
        std::vector<std::string> one{t};
        return std::move(embed(one).front());
    }

private:
    EmbedderSpec spec_;
};

}  // namespace ragforge::embed
