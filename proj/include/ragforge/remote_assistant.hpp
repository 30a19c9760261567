#pragma once

// Client for the managed assistant / file-search flow:
// vector store get-or-create, PDF upload, assistant get-or-create, thread, message, run polling,
// and citation extraction from message annotations.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ragforge/error.hpp"
#include "ragforge/generation.hpp"
#include "ragforge/http.hpp"
#include "ragforge/text.hpp"

namespace ragforge::remote {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct RemoteIds {
    std::string vector_store_id;
    std::string assistant_id;
    std::string thread_id;
    std::string run_id;
    std::map<std::string, std::string> file_ids;  ///< file name -> file id
};

struct AssistantProfile {
    std::string name;
    std::string description;
    std::string instructions;
    std::string model_name = "gpt-4o";
    double temperature = 0.7;
    double top_p = 0.9;
};

enum class RunStatus { Queued, InProgress, Completed, Failed };

struct ClientOptions {
    std::string endpoint = "https://api.openai.com";
    std::string api_key;
    std::chrono::milliseconds timeout{60000};
    std::chrono::milliseconds poll_interval{1000};
    int max_polls = 120;
    int message_fetch_attempts = 3;
};

struct EnsureStoreResult {
    std::string id;
    bool created = false;
    std::map<std::string, std::string> uploaded;  ///< only on creation
};

struct EnsureAssistantResult {
    std::string id;
    bool created = false;
};

class AssistantClient {
public:
    explicit AssistantClient(ClientOptions opts)
        : opts_(std::move(opts)),
          http_(opts_.endpoint, opts_.timeout,
                httplib::Headers{{"Authorization", "Bearer " + opts_.api_key}, {"OpenAI-Beta", "assistants=v2"}}) {}

    const ClientOptions& options() const noexcept { return opts_; }

    std::optional<std::string> find_vector_store(const std::string& name) {
        return find_by_name("/v1/vector_stores", name, "vector store listing");
    }

    std::optional<std::string> find_assistant(const std::string& name) {
        return find_by_name("/v1/assistants", name, "assistant listing");
    }

    /// Reuses a store with this name or creates one; only a fresh store gets `upload_dir` uploaded.
    EnsureStoreResult ensure_vector_store(const std::string& name, const std::optional<fs::path>& upload_dir = {}) {
        if (name.empty()) {
            throw Error(ErrorKind::EmptyName,
                        "Error: 'vector_store_name' is not set. Please provide a valid vector store name.");
        }
        EnsureStoreResult out;
        if (auto id = find_vector_store(name)) {
            out.id = *id;
            return out;
        }
        auto resp = http_.post_json("/v1/vector_stores", json{{"name", name}});
        out.id = id_of(resp, "vector store creation");
        out.created = true;
        if (upload_dir) out.uploaded = upload_pdfs(out.id, *upload_dir);
        return out;
    }

    /// Uploads every .pdf in `dir` (sorted by name) and attaches it to the store.
    std::map<std::string, std::string> upload_pdfs(const std::string& vector_store_id, const fs::path& dir) {
        std::error_code ec;
        if (!fs::is_directory(dir, ec)) {
            throw Error(ErrorKind::NotFound, "Error: Directory '" + dir.string() + "' does not exist.");
        }
        std::vector<fs::path> pdfs;
        bool any = false;
        for (const auto& e : fs::directory_iterator(dir)) {
            any = true;
            if (e.is_regular_file() && text::case_fold(e.path().extension().string()) == ".pdf") pdfs.push_back(e.path());
        }
        if (!any) {
            throw Error(ErrorKind::EmptyDirectory, "Error: Directory '" + dir.string() + "' is empty. No files to upload.");
        }
        if (pdfs.empty()) {
            throw Error(ErrorKind::NoPdfFiles, "Error: No PDF files found in directory '" + dir.string() + "'.");
        }
        std::sort(pdfs.begin(), pdfs.end());
        std::map<std::string, std::string> ids;
        for (const auto& p : pdfs) {
            std::string name = p.filename().string();
            try {
                std::ifstream in(p, std::ios::binary);
                if (!in) throw Error(ErrorKind::IoError, "cannot read '" + p.string() + "'");
                std::ostringstream buf;
                buf << in.rdbuf();
                auto up = http_.post_multipart("/v1/files", {{"purpose", "", "assistants", ""},
                                                             {"file", name, std::move(buf).str(), "application/pdf"}});
                std::string file_id = id_of(up, "upload of " + name);
                auto attach = http_.post_json("/v1/vector_stores/" + vector_store_id + "/files", json{{"file_id", file_id}});
                http::expect_ok(attach, "attaching " + name);
                ids[name] = file_id;
            } catch (const Error& e) {
                std::string done;
                for (const auto& [n, _] : ids) done += (done.empty() ? "" : ", ") + n;
                throw Error(e.kind(), std::string(e.what()) + " (uploaded before failure: " + (done.empty() ? "none" : done) + ")",
                            e.status());
            }
        }
        return ids;
    }

    EnsureAssistantResult ensure_assistant(const AssistantProfile& profile, const std::string& vector_store_id) {
        if (profile.name.empty()) throw Error(ErrorKind::EmptyName, "assistant name is not set");
        if (vector_store_id.empty()) throw Error(ErrorKind::InvalidConfig, "assistant needs a vector store id");
        if (auto id = find_assistant(profile.name)) return {*id, false};
        json body = {{"model", profile.model_name},
                     {"name", profile.name},
                     {"description", profile.description},
                     {"instructions", profile.instructions},
                     {"tools", json::array({{{"type", "file_search"}}})},
                     {"tool_resources", {{"file_search", {{"vector_store_ids", json::array({vector_store_id})}}}}},
                     {"temperature", profile.temperature},
                     {"top_p", profile.top_p}};
        auto resp = http_.post_json("/v1/assistants", body);
        return {id_of(resp, "assistant creation"), true};
    }

    std::string create_thread(const std::string& vector_store_id) {
        json body = {{"tool_resources", {{"file_search", {{"vector_store_ids", json::array({vector_store_id})}}}}}};
        return id_of(http_.post_json("/v1/threads", body), "thread creation");
    }

    /// Posts the question, runs the assistant, polls to completion and returns the annotated reply.
    gen::AnnotatedAnswer ask_remote(const std::string& thread_id, const std::string& assistant_id,
                                    const std::string& question) {
        auto start = std::chrono::steady_clock::now();
        json message = {{"role", "user"}, {"content", json::array({{{"type", "text"}, {"text", question}}})}};
        http::expect_ok(http_.post_json("/v1/threads/" + thread_id + "/messages", message), "message creation");
        std::string run_id = id_of(http_.post_json("/v1/threads/" + thread_id + "/runs", json{{"assistant_id", assistant_id}}),
                                   "run creation");
        last_run_id_ = run_id;
        wait_for_run(thread_id, run_id);

        gen::AnnotatedAnswer out;
        out.backend_used = "remote-assistant";
        for (int attempt = 0;; ++attempt) {
            if (collect_reply(thread_id, run_id, out)) break;
            if (attempt + 1 >= opts_.message_fetch_attempts) {
                throw Error(ErrorKind::HttpError, "run " + run_id + " completed but no assistant message was returned");
            }
            std::this_thread::sleep_for(opts_.poll_interval);
        }
        out.latency_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
        return out;
    }

    const std::string& last_run_id() const noexcept { return last_run_id_; }

    static RunStatus parse_status(const std::string& s) {
        if (s == "queued") return RunStatus::Queued;
        if (s == "in_progress") return RunStatus::InProgress;
        if (s == "completed") return RunStatus::Completed;
        // cancelled, expired, incomplete and unknown states end the run without an answer.
        return RunStatus::Failed;
    }

private:
    static std::string id_of(const http::Response& r, const std::string& what) {
        http::expect_ok(r, what);
        auto j = http::parse_body(r, what);
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
            throw Error(ErrorKind::HttpError, what + " response has no id: " + http::excerpt(r.body), r.status);
        }
        return j["id"].get<std::string>();
    }

    std::optional<std::string> find_by_name(const std::string& path, const std::string& name, const std::string& what) {
        std::string after;
        for (int page = 0; page < 1000; ++page) {
            std::string url = path + "?limit=100" + (after.empty() ? "" : "&after=" + after);
            auto resp = http_.get(url);
            http::expect_ok(resp, what);
            auto j = http::parse_body(resp, what);
            if (!j.contains("data") || !j["data"].is_array()) {
                throw Error(ErrorKind::HttpError, what + " response has no data array", resp.status);
            }
            for (const auto& item : j["data"]) {
                if (item.value("name", std::string{}) == name && item.contains("id")) return item["id"].get<std::string>();
            }
            if (!j.value("has_more", false) || j["data"].empty()) return std::nullopt;
            after = j.value("last_id", j["data"].back().value("id", std::string{}));
        }
        return std::nullopt;
    }

    void wait_for_run(const std::string& thread_id, const std::string& run_id) {
        for (int poll = 0; poll < opts_.max_polls; ++poll) {
            if (poll > 0) std::this_thread::sleep_for(opts_.poll_interval);
            auto resp = http_.get("/v1/threads/" + thread_id + "/runs/" + run_id);
            http::expect_ok(resp, "run status");
            auto j = http::parse_body(resp, "run status");
            std::string status = j.value("status", std::string{});
            switch (parse_status(status)) {
                case RunStatus::Completed: return;
                case RunStatus::Failed: {
                    std::string detail;
                    for (const char* key : {"last_error", "error"}) {
                        if (j.contains(key) && !j[key].is_null()) {
                            detail = j[key].is_string() ? j[key].get<std::string>() : j[key].dump();
                            break;
                        }
                    }
                    if (detail.empty()) detail = status;
                    throw Error(ErrorKind::RunFailed, "Run failed: " + detail);
                }
                default: break;
            }
        }
        throw Error(ErrorKind::Timeout, "run " + run_id + " did not complete after " + std::to_string(opts_.max_polls) + " polls");
    }

    /// Appends this run's unseen assistant messages to `out`; false when there were none yet.
    bool collect_reply(const std::string& thread_id, const std::string& run_id, gen::AnnotatedAnswer& out) {
        auto resp = http_.get("/v1/threads/" + thread_id + "/messages");
        http::expect_ok(resp, "message listing");
        auto j = http::parse_body(resp, "message listing");
        bool found = false;
        try {
            for (const auto& msg : j.at("data")) {
                std::string id = msg.value("id", std::string{});
                if (msg.value("role", std::string{}) != "assistant" || processed_.count(id)) continue;
                if (msg.contains("run_id") && msg["run_id"].is_string() && msg["run_id"].get<std::string>() != run_id) continue;
                const auto& content = msg.at("content");
                if (!content.is_array() || content.empty()) continue;
                const auto& t = content.at(0).at("text");
                std::string value = t.at("value").get<std::string>();
                std::size_t index = 0;
                for (const auto& ann : t.value("annotations", json::array())) {
                    std::string marker = "[" + std::to_string(index) + "]";
                    value = replace_all(value, ann.at("text").get<std::string>(), marker);
                    if (ann.contains("file_citation") && ann["file_citation"].is_object()) {
                        std::string file_id = ann["file_citation"].at("file_id").get<std::string>();
                        out.citations.push_back(marker + " " + filename_of(file_id));
                    }
                    ++index;
                }
                if (!out.text.empty()) out.text += "\n\n";
                out.text += value;
                processed_.insert(id);
                found = true;
            }
        } catch (const json::exception& e) {
            throw Error(ErrorKind::HttpError, std::string("malformed message listing: ") + e.what(), resp.status);
        }
        return found;
    }

    std::string filename_of(const std::string& file_id) {
        auto resp = http_.get("/v1/files/" + file_id);
        http::expect_ok(resp, "file lookup");
        auto j = http::parse_body(resp, "file lookup");
        return j.value("filename", file_id);
    }

    static std::string replace_all(std::string s, const std::string& from, const std::string& to) {
        if (from.empty()) return s;
        std::size_t pos = 0;
        while ((pos = s.find(from, pos)) != std::string::npos) {
            s.replace(pos, from.size(), to);
            pos += to.size();
        }
        return s;
    }

    ClientOptions opts_;
    http::Client http_;
    std::set<std::string> processed_;
    std::string last_run_id_;
};

}  // namespace ragforge::remote
