#pragma once

// Command-line front end. `run` is the whole program minus process plumbing so it can be
// driven in-process by tests with captured streams and a fake environment.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "ragforge/chunker.hpp"
#include "ragforge/config.hpp"
#include "ragforge/embedding.hpp"
#include "ragforge/error.hpp"
#include "ragforge/generation.hpp"
#include "ragforge/ingest.hpp"
#include "ragforge/remote_assistant.hpp"
#include "ragforge/retrieval.hpp"
#include "ragforge/vector_store.hpp"

namespace ragforge::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kOperational = 1, kUsage = 2 };

inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidConfig:
        case ErrorKind::MissingApiKey:
        case ErrorKind::EmptyName:
        case ErrorKind::BadTemplate:
        case ErrorKind::EmptyDirectory: return kUsage;
        default: return kOperational;
    }
}

inline void print_error(std::ostream& err, const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
}

inline constexpr const char* kPrompt = "Enter your question (or type 'exit' to quit): ";
inline constexpr const char* kFarewell = "Exiting the conversation. Goodbye!";

struct Flags {
    std::optional<std::string> config_file;
    std::optional<std::string> env_file;
    std::optional<std::string> store_root, store, corpus;
    std::optional<long long> k;
    std::optional<double> min_score;
    std::optional<std::string> backend, model, endpoint;
    std::optional<double> temperature, top_p;
    std::optional<std::string> once;
    std::optional<long long> chunk_max, chunk_overlap;
    std::optional<std::string> chunk_mode;
    std::optional<long long> dimension;
    std::optional<std::string> template_path;
    bool typewriter = false;
    std::optional<std::string> remote_endpoint, remote_store, upload_dir, assistant_name;
    std::optional<double> poll_interval;
    std::optional<long long> max_polls;
    std::string delete_name;
};

/// Everything a command needs, resolved from settings + flags and validated up front.
struct Context {
    config::Settings settings;
    std::optional<fs::path> dotenv;
    config::EnvLookup env;
    std::ostream& out;
    std::ostream& err;
    std::istream& in;
    bool typewriter = false;

    fs::path store_root() const { return settings.str("store.root"); }
    std::string store_name() const { return settings.str("store.name"); }

    ingest::CleanConfig clean_config() const {
        ingest::CleanConfig c;
        c.lowercase = settings.boolean("clean.lowercase");
        c.strip_repeated_lines = settings.boolean("clean.strip_repeated_lines");
        c.min_repeat_pages = static_cast<int>(settings.integer("clean.min_repeat_pages", 2));
        return c;
    }

    chunk::ChunkConfig chunk_config() const {
        chunk::ChunkConfig c;
        c.max_chunk_tokens = static_cast<std::size_t>(settings.integer("chunk.max_tokens", 1));
        c.overlap_tokens = static_cast<std::size_t>(settings.integer("chunk.overlap", 0));
        c.mode = settings.choice("chunk.mode", {"fixed", "semantic"}) == "semantic" ? chunk::Mode::Semantic : chunk::Mode::Fixed;
        if (c.overlap_tokens >= c.max_chunk_tokens) {
            throw Error(ErrorKind::InvalidConfig, "'chunk.overlap' must be smaller than 'chunk.max_tokens'");
        }
        return c;
    }

    embed::Embedder embedder() const {
        embed::EmbedderSpec spec;
        spec.dimension = static_cast<std::size_t>(settings.integer("embed.dimension", 1));
        if (settings.choice("embed.backend", {"reference", "remote"}) == "remote") {
            spec.backend = embed::Backend::RemoteHttp;
            spec.endpoint = settings.opt("embed.endpoint");
            spec.model_name = settings.opt("embed.model");
            spec.api_key = config::api_key(env, dotenv);
            if (!spec.endpoint) throw Error(ErrorKind::InvalidConfig, "'embed.endpoint' is required for the remote embedder");
            if (!spec.model_name) throw Error(ErrorKind::InvalidConfig, "'embed.model' is required for the remote embedder");
        }
        return embed::Embedder(spec);
    }

    retrieval::RetrieveOptions retrieve_options() const {
        return {static_cast<std::size_t>(settings.integer("retrieve.k", 0)), settings.real("retrieve.min_score")};
    }

    retrieval::PromptTemplate prompt_template() const {
        retrieval::PromptTemplate t;
        if (auto p = settings.opt("prompt.template_path")) {
            auto content = config::read_file(*p);
            if (!content) throw Error(ErrorKind::InvalidConfig, "'prompt.template_path': cannot read '" + *p + "'");
            t.text = *content;
            if (t.text.find("{context}") == std::string::npos || t.text.find("{question}") == std::string::npos) {
                throw Error(ErrorKind::BadTemplate, "template '" + *p + "' must contain {context} and {question}");
            }
        }
        return t;
    }

    gen::GenerationConfig generation_config() const {
        gen::GenerationConfig g;
        std::string b = settings.choice("generation.backend", {"chat", "local", "offline"});
        g.backend = b == "chat" ? gen::Backend::ChatCompletions : b == "local" ? gen::Backend::LocalModel : gen::Backend::OfflineEcho;
        g.model_name = settings.opt("generation.model");
        g.endpoint = settings.opt("generation.endpoint");
        g.temperature = settings.real("generation.temperature");
        g.top_p = settings.real("generation.top_p");
        g.timeout_s = static_cast<int>(settings.integer("generation.timeout_s", 1));
        g.max_retries = static_cast<int>(settings.integer("generation.max_retries", 0));
        if (g.backend == gen::Backend::ChatCompletions) g.api_key = config::api_key(env, dotenv);
        if (!(g.temperature >= 0.0 && g.temperature <= 2.0)) {
            throw Error(ErrorKind::InvalidConfig, "'generation.temperature' must be in [0, 2]");
        }
        if (!(g.top_p > 0.0 && g.top_p <= 1.0)) throw Error(ErrorKind::InvalidConfig, "'generation.top_p' must be in (0, 1]");
        g.validate();
        return g;
    }

    remote::ClientOptions remote_options() const {
        remote::ClientOptions o;
        o.endpoint = settings.str("remote.endpoint");
        auto key = config::api_key(env, dotenv);
        if (!key) throw Error(ErrorKind::MissingApiKey, std::string(gen::kMissingKey));
        o.api_key = *key;
        o.timeout = std::chrono::seconds(settings.integer("remote.timeout_s", 1));
        double poll = settings.real("remote.poll_interval_s");
        if (poll < 0) throw Error(ErrorKind::InvalidConfig, "'remote.poll_interval_s' must be >= 0");
        o.poll_interval = std::chrono::milliseconds(static_cast<long long>(poll * 1000.0));
        o.max_polls = static_cast<int>(settings.integer("remote.max_polls", 1));
        return o;
    }

    std::string remote_store_name() const {
        auto n = settings.opt("remote.store_name");
        return n ? *n : store_name();
    }

    remote::AssistantProfile assistant_profile() const {
        remote::AssistantProfile p;
        p.name = settings.str("remote.assistant_name");
        p.description = settings.str("remote.description");
        p.instructions = settings.str("remote.instructions");
        p.model_name = settings.str("remote.model");
        p.temperature = settings.real("remote.temperature");
        p.top_p = settings.real("remote.top_p");
        return p;
    }

    void print_answer(const gen::AnnotatedAnswer& a) const {
        if (typewriter) {
            for (auto w : text::tokens(a.text)) {
                out << w << ' ' << std::flush;
                std::this_thread::sleep_for(std::chrono::milliseconds(50));
            }
            out << "\n";
        } else {
            out << a.text << "\n";
        }
        if (!a.citations.empty()) {
            out << "Sources: ";
            for (std::size_t i = 0; i < a.citations.size(); ++i) out << (i ? ", " : "") << a.citations[i];
            out << "\n";
        }
        out.flush();
    }
};

inline int cmd_ingest(Context& ctx) {
    auto clean = ctx.clean_config();
    auto chunking = ctx.chunk_config();
    auto embedder = ctx.embedder();
    fs::path corpus = ctx.settings.str("corpus.dir");

    auto report = ingest::ingest_directory(corpus, clean);
    auto st = store::get_or_create_store(ctx.store_root(), ctx.store_name(), embedder.dimension(), embedder.id());

    std::size_t docs = 0, chunks = 0, records = 0, duplicates = 0;
    std::set<std::string> seen;
    for (const auto& doc : report.documents) {
        const std::string& file = doc.metadata.source_file;
        if (!seen.insert(doc.doc_id).second || st.contains_doc(doc.doc_id)) {
            ++duplicates;
            ctx.out << "  duplicate " << file << ": same bytes as an indexed document, skipped\n";
            continue;
        }
        std::string source = chunking.mode == chunk::Mode::Semantic
                                 ? ingest::clean_text_paragraphs({}, clean, doc.pages)
                                 : doc.cleaned_text;
        auto pieces = chunk::chunk_text(source, chunking, doc.doc_id);
        std::vector<std::string> texts;
        texts.reserve(pieces.size());
        for (const auto& c : pieces) texts.push_back(c.text);
        auto vectors = embedder.embed(texts);
        std::vector<store::NewRecord> batch;
        for (std::size_t i = 0; i < pieces.size(); ++i) batch.push_back({std::move(pieces[i]), file, std::move(vectors[i])});
        auto seqs = st.add_records(std::move(batch));
        ++docs;
        chunks += texts.size();
        records += seqs.size();
        ctx.out << "  " << file << ": " << doc.metadata.page_count << (doc.metadata.page_count == 1 ? " page, " : " pages, ")
                << texts.size() << " chunks\n";
    }
    for (const auto& f : report.failures) {
        ctx.out << "  failed " << f.source_file << ": " << to_string(f.kind) << ": " << f.message << "\n";
    }
    ctx.out << docs << " documents, " << chunks << " chunks, " << records << " records\n";
    if (duplicates) ctx.out << duplicates << " duplicates skipped\n";
    if (!report.failures.empty()) ctx.out << report.failures.size() << " files failed\n";
    ctx.out << "store '" << st.manifest().name << "' holds " << st.manifest().record_count << " records\n";
    return report.failures.empty() ? kOk : kOperational;
}

/// Interactive loop shared by local and remote asking. `answer` throws typed errors.
template <typename AnswerFn>
int question_loop(Context& ctx, const std::optional<std::string>& once, AnswerFn&& answer) {
    if (once) {
        try {
            ctx.print_answer(answer(*once));
            return kOk;
        } catch (const Error& e) {
            print_error(ctx.err, e);
            return exit_code_for(e.kind());
        }
    }
    std::string line;
    for (;;) {
        ctx.out << kPrompt << std::flush;
        if (!std::getline(ctx.in, line)) {
            ctx.out << "\n" << kFarewell << "\n";
            return kOk;
        }
        std::string q(text::trim(line));
        if (text::case_fold(q) == "exit") {
            ctx.out << kFarewell << "\n";
            return kOk;
        }
        if (q.empty()) continue;
        try {
            ctx.print_answer(answer(q));
        } catch (const Error& e) {
            print_error(ctx.err, e);
        }
        ctx.out << "\n";
    }
}

inline int cmd_ask(Context& ctx, const std::optional<std::string>& once) {
    auto gcfg = ctx.generation_config();
    auto embedder = ctx.embedder();
    gen::TurnOptions opts{ctx.retrieve_options(), ctx.prompt_template()};
    auto st = store::VectorStore::load(ctx.store_root(), ctx.store_name());
    if (embedder.id() != st.manifest().embedder_id || embedder.dimension() != st.manifest().dimension) {
        throw Error(ErrorKind::EmbedderMismatch, "store '" + st.manifest().name + "' was built with '" +
                                                     st.manifest().embedder_id + "', configured embedder is '" +
                                                     embedder.id() + "'");
    }
    gen::ConversationSession session("cli-" + std::to_string(std::chrono::system_clock::now().time_since_epoch().count()),
                                     st.manifest().name);
    return question_loop(ctx, once, [&](const std::string& q) { return gen::chat_turn(session, st, embedder, q, gcfg, opts); });
}

inline int cmd_stores_list(Context& ctx) {
    auto stores = store::list_stores(ctx.store_root());
    if (stores.empty()) {
        ctx.out << "no stores\n";
        return kOk;
    }
    for (const auto& m : stores) {
        ctx.out << m.name << "  id=" << m.store_id << "  embedder=" << m.embedder_id << "  dimension=" << m.dimension
                << "  records=" << m.record_count << "  created=" << m.created_at << "\n";
    }
    return kOk;
}

inline int cmd_stores_delete(Context& ctx, const std::string& name) {
    store::delete_store(ctx.store_root(), name);
    ctx.out << "deleted store '" << name << "'\n";
    return kOk;
}

inline int cmd_remote_sync(Context& ctx) {
    remote::AssistantClient client(ctx.remote_options());
    std::string name = ctx.remote_store_name();
    auto vs = client.ensure_vector_store(name, fs::path(ctx.settings.str("remote.upload_dir")));
    if (vs.created) {
        ctx.out << "New vector store '" << name << "' created with ID: " << vs.id << "\n";
        for (const auto& [file, id] : vs.uploaded) ctx.out << "Uploaded file: " << file << " with ID: " << id << "\n";
        ctx.out << "All files have been successfully uploaded to vector store with ID: " << vs.id << "\n";
    } else {
        ctx.out << "Vector Store '" << name << "' already exists with ID: " << vs.id << "\n";
    }
    auto asst = client.ensure_assistant(ctx.assistant_profile(), vs.id);
    ctx.out << (asst.created ? "New AI Assistant created with ID:" : "AI Assistant already exists with ID:") << asst.id << "\n";
    return kOk;
}

inline int cmd_remote_ask(Context& ctx, const std::optional<std::string>& once) {
    remote::AssistantClient client(ctx.remote_options());
    std::string name = ctx.remote_store_name();
    auto profile = ctx.assistant_profile();
    auto vs = client.find_vector_store(name);
    if (!vs) throw Error(ErrorKind::NotFound, "remote vector store '" + name + "' not found; run `ragforge remote sync` first");
    auto asst = client.find_assistant(profile.name);
    if (!asst) {
        throw Error(ErrorKind::NotFound, "remote assistant '" + profile.name + "' not found; run `ragforge remote sync` first");
    }
    std::string thread = client.create_thread(*vs);
    return question_loop(ctx, once, [&](const std::string& q) { return client.ask_remote(thread, *asst, q); });
}

inline int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err,
               const config::EnvLookup& env = config::process_env()) {
    CLI::App app{"ragforge: retrieval-augmented question answering over local documents", "ragforge"};
    app.require_subcommand(1);
    app.fallthrough();
    Flags f;

    app.add_option("--config", f.config_file, "config file (default: ./ragforge.toml when present)");
    app.add_option("--env-file", f.env_file, "dotenv file with OPENAI_API_KEY (default: ./.env when present)");
    app.add_option("--store-root", f.store_root, "store.root");
    app.add_option("--store", f.store, "store.name");
    app.add_option("--corpus", f.corpus, "corpus.dir");
    app.add_option("--k", f.k, "retrieve.k");
    app.add_option("--min-score", f.min_score, "retrieve.min_score");
    app.add_option("--backend", f.backend, "generation.backend: chat | local | offline");
    app.add_option("--model", f.model, "generation.model");
    app.add_option("--temperature", f.temperature, "generation.temperature");
    app.add_option("--top-p", f.top_p, "generation.top_p");
    app.add_option("--endpoint", f.endpoint, "generation.endpoint (ask) or remote.endpoint (remote)");
    app.add_option("--once", f.once, "answer one question and exit");
    app.add_option("--chunk-max", f.chunk_max, "chunk.max_tokens");
    app.add_option("--chunk-overlap", f.chunk_overlap, "chunk.overlap");
    app.add_option("--chunk-mode", f.chunk_mode, "chunk.mode: fixed | semantic");
    app.add_option("--dimension", f.dimension, "embed.dimension");
    app.add_option("--template", f.template_path, "prompt.template_path");
    app.add_flag("--typewriter", f.typewriter, "print answers word by word");
    app.add_option("--remote-store", f.remote_store, "remote.store_name");
    app.add_option("--upload-dir", f.upload_dir, "remote.upload_dir");
    app.add_option("--assistant-name", f.assistant_name, "remote.assistant_name");
    app.add_option("--poll-interval", f.poll_interval, "remote.poll_interval_s");
    app.add_option("--max-polls", f.max_polls, "remote.max_polls");

    auto* ingest_cmd = app.add_subcommand("ingest", "extract, chunk, embed and index the corpus directory");
    auto* ask_cmd = app.add_subcommand("ask", "ask questions against a local store");
    auto* stores_cmd = app.add_subcommand("stores", "manage local stores");
    stores_cmd->require_subcommand(1);
    auto* list_cmd = stores_cmd->add_subcommand("list", "list stores");
    auto* delete_cmd = stores_cmd->add_subcommand("delete", "delete a store");
    delete_cmd->add_option("name", f.delete_name, "store name")->required();
    auto* remote_cmd = app.add_subcommand("remote", "managed assistant with file search");
    remote_cmd->require_subcommand(1);
    auto* sync_cmd = remote_cmd->add_subcommand("sync", "get-or-create the remote vector store and assistant");
    auto* rask_cmd = remote_cmd->add_subcommand("ask", "ask the remote assistant");
    for (auto* sub : {ingest_cmd, ask_cmd, stores_cmd, list_cmd, delete_cmd, remote_cmd, sync_cmd, rask_cmd}) sub->fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }

    try {
        std::optional<fs::path> cfg_file;
        if (f.config_file) {
            cfg_file = *f.config_file;
        } else if (fs::exists("ragforge.toml")) {
            cfg_file = "ragforge.toml";
        }
        Context ctx{config::load_settings(cfg_file, env), std::nullopt, env, out, err, in, f.typewriter};
        if (f.env_file) {
            ctx.dotenv = *f.env_file;
        } else if (fs::exists(".env")) {
            ctx.dotenv = ".env";
        }
        auto& s = ctx.settings;
        auto set = [&](const char* key, const auto& v) {
            if (v) {
                if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, std::string>) {
                    s.set(key, *v);
                } else {
                    std::ostringstream os;
                    os.precision(17);
                    os << *v;
                    s.set(key, os.str());
                }
            }
        };
        set("store.root", f.store_root);
        set("store.name", f.store);
        set("corpus.dir", f.corpus);
        set("retrieve.k", f.k);
        set("retrieve.min_score", f.min_score);
        set("generation.backend", f.backend);
        set("generation.model", f.model);
        set("generation.temperature", f.temperature);
        set("generation.top_p", f.top_p);
        set(remote_cmd->parsed() ? "remote.endpoint" : "generation.endpoint", f.endpoint);
        set("chunk.max_tokens", f.chunk_max);
        set("chunk.overlap", f.chunk_overlap);
        set("chunk.mode", f.chunk_mode);
        set("embed.dimension", f.dimension);
        set("prompt.template_path", f.template_path);
        set("remote.store_name", f.remote_store);
        set("remote.upload_dir", f.upload_dir);
        set("remote.assistant_name", f.assistant_name);
        set("remote.poll_interval_s", f.poll_interval);
        set("remote.max_polls", f.max_polls);

        if (ingest_cmd->parsed()) return cmd_ingest(ctx);
        if (ask_cmd->parsed()) return cmd_ask(ctx, f.once);
        if (list_cmd->parsed()) return cmd_stores_list(ctx);
        if (delete_cmd->parsed()) return cmd_stores_delete(ctx, f.delete_name);
        if (sync_cmd->parsed()) return cmd_remote_sync(ctx);
        if (rask_cmd->parsed()) return cmd_remote_ask(ctx, f.once);
        err << app.help();
        return kUsage;
    } catch (const Error& e) {
        print_error(err, e);
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kOperational;
    }
}

}  // namespace ragforge::cli
