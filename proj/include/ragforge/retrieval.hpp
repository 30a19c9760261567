#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ragforge/embedding.hpp"
#include "ragforge/error.hpp"
#include "ragforge/vector_store.hpp"

namespace ragforge::retrieval {

struct ContextBlock {
    std::size_t citation_index = 0;
    std::string source_file;
    std::string chunk_text;
};

struct RetrievalResult {
    std::string question;
    std::vector<store::SearchHit> hits;  ///< Valid while the store is not mutated.
    std::vector<ContextBlock> context_blocks;
};

struct RetrieveOptions {
    std::size_t k = 4;
    double min_score = 0.0;
};

/// The question is embedded with `embedder`, which must be the store's embedder.
inline RetrievalResult retrieve(const store::VectorStore& st, const embed::Embedder& embedder,
                                const std::string& question, RetrieveOptions opts = {}) {
    const auto& m = st.manifest();
    if (embedder.id() != m.embedder_id || embedder.dimension() != m.dimension) {
        throw Error(ErrorKind::EmbedderMismatch, "query embedder '" + embedder.id() + "' (dimension " +
                                                     std::to_string(embedder.dimension()) + ") does not match store '" +
                                                     m.name + "' built with '" + m.embedder_id + "' (dimension " +
                                                     std::to_string(m.dimension) + ")");
    }
    RetrievalResult out;
    out.question = question;
    auto q = embedder.embed_one(question);
    out.hits = st.search(q.values, opts.k, opts.min_score);
    for (std::size_t i = 0; i < out.hits.size(); ++i) {
        const auto& r = *out.hits[i].record;
        out.context_blocks.push_back({i, r.source_file, r.chunk.text});
    }
    return out;
}

inline constexpr std::string_view kDefaultTemplate =
    "You are an expert assistant with access to the following context extracted from documents. "
    "Your job is to answer the user's question as accurately as possible, using the context below.\n"
    "\n"
    "Context:\n"
    "{context}\n"
    "\n"
    "Given this information, please provide a comprehensive and relevant answer to the following question:\n"
    "Question: {question}\n"
    "\n"
    "If the context does not contain enough information, clearly state that the information is not available "
    "in the context provided.\n"
    "If possible, provide a step-by-step explanation and highlight key details.\n";

inline constexpr std::string_view kNoContext = "NO CONTEXT RETRIEVED";

struct PromptTemplate {
    std::string text{kDefaultTemplate};
};

struct PromptBundle {
    std::string system_instructions;  ///< Leading slot-free paragraph of the template (may be empty).
    std::string context;
    std::string question;
    std::string user_message;  ///< Template remainder with slots filled.
    std::string rendered;      ///< Full prompt: system_instructions + blank line + user_message.
    std::size_t block_count = 0;
    std::string first_block_text;
};

inline std::string render_context(const std::vector<ContextBlock>& blocks) {
    if (blocks.empty()) return std::string(kNoContext);
    std::string out;
    for (const auto& b : blocks) {
        if (!out.empty()) out += "\n\n";
        out += "[" + std::to_string(b.citation_index) + "] (" + b.source_file + "): " + b.chunk_text;
    }
    return out;
}

namespace detail {

/// Single-pass substitution so slot markers inside the values are left alone.
inline std::string fill(std::string_view tpl, const std::string& context, const std::string& question) {
    std::string out;
    std::size_t i = 0;
    while (i < tpl.size()) {
        if (tpl.substr(i, 9) == "{context}") {
            out += context;
            i += 9;
        } else if (tpl.substr(i, 10) == "{question}") {
            out += question;
            i += 10;
        } else {
            out += tpl[i++];
        }
    }
    return out;
}

}  // namespace detail

/// `question` may differ from result.question when a transcript is prepended (see generation).
inline PromptBundle assemble_prompt(const RetrievalResult& result, const PromptTemplate& tpl, const std::string& question) {
    std::string_view t = tpl.text;
    if (t.find("{context}") == std::string_view::npos || t.find("{question}") == std::string_view::npos) {
        throw Error(ErrorKind::BadTemplate, "prompt template must contain both {context} and {question}");
    }
    PromptBundle b;
    b.context = render_context(result.context_blocks);
    b.question = question;
    b.block_count = result.context_blocks.size();
    if (!result.context_blocks.empty()) b.first_block_text = result.context_blocks.front().chunk_text;

    std::string_view body = t;
    auto para_end = t.find("\n\n");
    if (para_end != std::string_view::npos) {
        std::string_view head = t.substr(0, para_end);
        if (head.find('{') == std::string_view::npos) {
            b.system_instructions = std::string(head);
            body = t.substr(para_end + 2);
        }
    }
    b.user_message = detail::fill(body, b.context, b.question);
    b.rendered = b.system_instructions.empty() ? b.user_message : b.system_instructions + "\n\n" + b.user_message;
    return b;
}

inline PromptBundle assemble_prompt(const RetrievalResult& result, const PromptTemplate& tpl = {}) {
    return assemble_prompt(result, tpl, result.question);
}

/// "[i] source_file" per context block; repeated files keep their own index.
inline std::vector<std::string> citations_for(const RetrievalResult& result) {
    std::vector<std::string> out;
    out.reserve(result.context_blocks.size());
    for (const auto& b : result.context_blocks) {
        out.push_back("[" + std::to_string(b.citation_index) + "] " + b.source_file);
    }
    return out;
}

}  // namespace ragforge::retrieval
