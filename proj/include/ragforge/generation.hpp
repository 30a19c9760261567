#pragma once

#include <chrono>
#include <optional>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include "ragforge/embedding.hpp"
#include "ragforge/error.hpp"
#include "ragforge/http.hpp"
#include "ragforge/retrieval.hpp"
#include "ragforge/text.hpp"
#include "ragforge/vector_store.hpp"

namespace ragforge::gen {

enum class Backend { ChatCompletions, LocalModel, OfflineEcho };

inline constexpr std::string_view kNotAvailable = "The information is not available in the context provided.";
inline constexpr std::string_view kMissingKey =
    "Error: OPENAI_API_KEY is not set in the environment. Please set it in the .env file.";

inline std::string default_model(Backend b) {
    switch (b) {
        case Backend::ChatCompletions: return "gpt-4o";
        case Backend::LocalModel: return "Llama3.1";
        case Backend::OfflineEcho: return "";
    }
    return "";
}

inline std::string default_endpoint(Backend b) {
    switch (b) {
        case Backend::ChatCompletions: return "https://api.openai.com";
        case Backend::LocalModel: return "http://localhost:11434";
        case Backend::OfflineEcho: return "";
    }
    return "";
}

struct GenerationConfig {
    Backend backend = Backend::OfflineEcho;
    std::optional<std::string> model_name;  ///< defaults per backend
    double temperature = 0.7;
    double top_p = 0.9;
    std::optional<std::string> endpoint;    ///< defaults per backend
    int timeout_s = 60;
    int max_retries = 2;
    std::optional<std::string> api_key;     ///< ChatCompletions only
    std::chrono::milliseconds backoff_base{500};

    std::string model() const { return model_name.value_or(default_model(backend)); }
    std::string url() const { return endpoint.value_or(default_endpoint(backend)); }

    void validate() const {
        if (!(temperature >= 0.0 && temperature <= 2.0)) {
            throw Error(ErrorKind::InvalidConfig, "temperature must be in [0, 2], got " + std::to_string(temperature));
        }
        if (!(top_p > 0.0 && top_p <= 1.0)) {
            throw Error(ErrorKind::InvalidConfig, "top_p must be in (0, 1], got " + std::to_string(top_p));
        }
        if (timeout_s <= 0) throw Error(ErrorKind::InvalidConfig, "timeout_s must be positive");
        if (max_retries < 0) throw Error(ErrorKind::InvalidConfig, "max_retries must be non-negative");
        if (backend == Backend::ChatCompletions && (!api_key || api_key->empty())) {
            throw Error(ErrorKind::MissingApiKey, std::string(kMissingKey));
        }
    }
};

inline std::string backend_label(const GenerationConfig& cfg) {
    switch (cfg.backend) {
        case Backend::ChatCompletions: return "chat-completions:" + cfg.model();
        case Backend::LocalModel: return "local-model:" + cfg.model();
        case Backend::OfflineEcho: return "offline-echo";
    }
    return "";
}

/// Text up to and including the first period, or all of it.
inline std::string first_sentence(std::string_view s) {
    auto dot = s.find('.');
    return std::string(text::trim(dot == std::string_view::npos ? s : s.substr(0, dot + 1)));
}

inline std::string offline_echo(const retrieval::PromptBundle& bundle) {
    if (bundle.block_count == 0) return std::string(kNotAvailable);
    return "Based on [0]: " + first_sentence(bundle.first_block_text);
}

namespace detail {

inline bool retryable(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::Timeout:
        case ErrorKind::BackendUnavailable: return true;
        case ErrorKind::HttpError: return e.status() == 429 || e.status() >= 500 || e.status() == 0;
        default: return false;
    }
}

/// Runs `attempt` up to 1 + max_retries times, sleeping backoff_base * 2^n between tries.
template <typename F>
auto with_retries(const GenerationConfig& cfg, F&& attempt) {
    for (int n = 0;; ++n) {
        try {
            return attempt();
        } catch (const Error& e) {
            if (n >= cfg.max_retries || !retryable(e)) throw;
            std::this_thread::sleep_for(cfg.backoff_base * (1LL << n));
        }
    }
}

inline std::string chat_completions(const retrieval::PromptBundle& bundle, const GenerationConfig& cfg) {
    httplib::Headers headers{{"Authorization", "Bearer " + cfg.api_key.value_or("")}};
    http::json messages = http::json::array();
    if (!bundle.system_instructions.empty()) {
        messages.push_back({{"role", "system"}, {"content", bundle.system_instructions}});
    }
    messages.push_back({{"role", "user"}, {"content", bundle.user_message}});
    http::json body = {{"model", cfg.model()}, {"messages", messages}, {"temperature", cfg.temperature}, {"top_p", cfg.top_p}};
    return with_retries(cfg, [&] {
        http::Client client(cfg.url(), std::chrono::seconds(cfg.timeout_s), headers);
        auto resp = client.post_json("/v1/chat/completions", body);
        http::expect_ok(resp, "chat completion");
        auto j = http::parse_body(resp, "chat completion");
        try {
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const http::json::exception&) {
            throw Error(ErrorKind::HttpError, "chat completion response lacks choices[0].message.content: " +
                                                  http::excerpt(resp.body), resp.status);
        }
    });
}

inline std::string local_model(const retrieval::PromptBundle& bundle, const GenerationConfig& cfg) {
    http::json body = {{"model", cfg.model()}, {"prompt", bundle.rendered}, {"stream", false}};
    return with_retries(cfg, [&] {
        http::Client client(cfg.url(), std::chrono::seconds(cfg.timeout_s));
        auto resp = client.post_json("/api/generate", body);
        http::expect_ok(resp, "local model generation");
        auto j = http::parse_body(resp, "local model generation");
        try {
            return j.at("response").get<std::string>();
        } catch (const http::json::exception&) {
            throw Error(ErrorKind::HttpError, "local model response lacks 'response': " + http::excerpt(resp.body),
                        resp.status);
        }
    });
}

}  // namespace detail

inline std::string generate(const retrieval::PromptBundle& bundle, const GenerationConfig& cfg) {
    cfg.validate();
    switch (cfg.backend) {
        case Backend::ChatCompletions: return detail::chat_completions(bundle, cfg);
        case Backend::LocalModel: return detail::local_model(bundle, cfg);
        case Backend::OfflineEcho: return offline_echo(bundle);
    }
    return {};
}

enum class Role { User, Assistant };

struct Turn {
    Role role;
    std::string text;
};

/// Append-only transcript bound to one store; user and assistant turns alternate.
class ConversationSession {
public:
    ConversationSession(std::string session_id, std::string store_name)
        : session_id_(std::move(session_id)), store_name_(std::move(store_name)) {}

    const std::string& session_id() const noexcept { return session_id_; }
    const std::string& store_name() const noexcept { return store_name_; }
    const std::vector<Turn>& turns() const noexcept { return turns_; }

    void append_exchange(std::string question, std::string answer) {
        turns_.push_back({Role::User, std::move(question)});
        turns_.push_back({Role::Assistant, std::move(answer)});
    }

    /// Prior turns followed by the new question; the bare question when there is no history.
    std::string question_with_history(const std::string& question) const {
        if (turns_.empty()) return question;
        std::string out = "(Conversation so far)\n";
        for (const auto& t : turns_) {
            out += (t.role == Role::User ? "User: " : "Assistant: ");
            out += t.text;
            out += '\n';
        }
        out += "(Current question) " + question;
        return out;
    }

private:
    std::string session_id_;
    std::string store_name_;
    std::vector<Turn> turns_;
};

struct AnnotatedAnswer {
    std::string text;
    std::vector<std::string> citations;
    std::string backend_used;
    std::int64_t latency_ms = 0;
};

/// Removes "[i]" markers that do not name a citation (only when citations exist).
inline std::string drop_dangling_markers(const std::string& text, std::size_t n) {
    if (n == 0) return text;
    static const std::regex marker(R"(\[(\d+)\])");
    std::string out;
    auto begin = std::sregex_iterator(text.begin(), text.end(), marker);
    std::size_t last = 0;
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        auto pos = static_cast<std::size_t>(m.position(0));
        bool ok = m[1].length() < 6 && std::stoul(m[1].str()) < n;
        out.append(text, last, pos - last);
        if (ok) out += m.str(0);
        last = pos + static_cast<std::size_t>(m.length(0));
    }
    out.append(text, last);
    return out;
}

struct TurnOptions {
    retrieval::RetrieveOptions retrieve;
    retrieval::PromptTemplate prompt;
};

/// retrieve -> assemble_prompt -> generate. The session only grows when generation succeeds.
inline AnnotatedAnswer chat_turn(ConversationSession& session, const store::VectorStore& st,
                                 const embed::Embedder& embedder, const std::string& question,
                                 const GenerationConfig& cfg, const TurnOptions& opts = {}) {
    if (session.store_name() != st.manifest().name) {
        throw Error(ErrorKind::InvalidConfig,
                    "session is bound to store '" + session.store_name() + "', not '" + st.manifest().name + "'");
    }
    auto start = std::chrono::steady_clock::now();
    auto result = retrieval::retrieve(st, embedder, question, opts.retrieve);
    auto bundle = retrieval::assemble_prompt(result, opts.prompt, session.question_with_history(question));
    std::string answer = generate(bundle, cfg);

    AnnotatedAnswer out;
    out.citations = retrieval::citations_for(result);
    out.text = drop_dangling_markers(answer, out.citations.size());
    out.backend_used = backend_label(cfg);
    out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    session.append_exchange(question, out.text);
    return out;
}

}  // namespace ragforge::gen
