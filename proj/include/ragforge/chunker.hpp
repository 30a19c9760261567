#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ragforge/error.hpp"
#include "ragforge/text.hpp"

namespace ragforge::chunk {

enum class Mode { Fixed, Semantic };

struct ChunkConfig {
    std::size_t max_chunk_tokens = 800;
    std::size_t overlap_tokens = 400;
    Mode mode = Mode::Fixed;

    void validate() const {
        if (max_chunk_tokens == 0) throw Error(ErrorKind::InvalidConfig, "max_chunk_tokens must be positive");
        if (overlap_tokens >= max_chunk_tokens) {
            throw Error(ErrorKind::InvalidConfig,
                        "overlap_tokens (" + std::to_string(overlap_tokens) + ") must be smaller than max_chunk_tokens (" +
                            std::to_string(max_chunk_tokens) + ")");
        }
    }
};

struct Chunk {
    std::string chunk_id;  ///< "doc_id:ordinal"
    std::string doc_id;
    std::size_t ordinal = 0;
    std::string text;
    std::size_t token_start = 0;
    std::size_t token_end = 0;

    std::size_t token_count() const noexcept { return token_end - token_start; }
};

/// Token proxy: number of maximal non-whitespace runs.
inline std::size_t count_tokens(std::string_view s) noexcept {
    std::size_t n = 0;
    bool in_token = false;
    for (char c : s) {
        bool sp = text::is_space(c);
        if (!sp && !in_token) ++n;
        in_token = !sp;
    }
    return n;
}

namespace detail {

struct Span {
    std::size_t start;
    std::size_t end;
};

/// Sliding windows over [0, n) with stride max - overlap; a tail window contained in its
/// predecessor is dropped.
inline std::vector<Span> fixed_spans(std::size_t n, std::size_t max, std::size_t overlap) {
    std::vector<Span> spans;
    const std::size_t stride = max - overlap;
    for (std::size_t start = 0; start < n; start += stride) {
        std::size_t end = std::min(start + max, n);
        if (!spans.empty() && end <= spans.back().end) break;
        spans.push_back({start, end});
    }
    return spans;
}

inline Chunk make_chunk(const std::vector<std::string_view>& toks, std::size_t base, Span span,
                        std::string_view doc_id, std::size_t ordinal) {
    Chunk c;
    c.doc_id = std::string(doc_id);
    c.ordinal = ordinal;
    c.chunk_id = c.doc_id + ":" + std::to_string(ordinal);
    c.token_start = base + span.start;
    c.token_end = base + span.end;
    for (std::size_t i = span.start; i < span.end; ++i) {
        if (i > span.start) c.text += ' ';
        c.text += toks[i];
    }
    return c;
}

}  // namespace detail

inline std::vector<Chunk> chunk_fixed(std::string_view text, const ChunkConfig& cfg, std::string_view doc_id = {}) {
    cfg.validate();
    auto toks = text::tokens(text);
    std::vector<Chunk> out;
    for (auto span : detail::fixed_spans(toks.size(), cfg.max_chunk_tokens, cfg.overlap_tokens)) {
        out.push_back(detail::make_chunk(toks, 0, span, doc_id, out.size()));
    }
    return out;
}

/// Paragraphs (split at blank lines) are merged greedily up to max_chunk_tokens.
/// An oversized paragraph is split on its own with the fixed-window rule.
inline std::vector<Chunk> chunk_semantic(std::string_view text, const ChunkConfig& cfg, std::string_view doc_id = {}) {
    cfg.validate();
    std::vector<std::vector<std::string_view>> paragraphs;
    std::vector<std::string_view> cur;
    for (auto line : text::split_lines(text)) {
        auto toks = text::tokens(line);
        if (toks.empty()) {
            if (!cur.empty()) paragraphs.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.insert(cur.end(), toks.begin(), toks.end());
        }
    }
    if (!cur.empty()) paragraphs.push_back(std::move(cur));

    std::vector<Chunk> out;
    std::vector<std::string_view> group;
    std::size_t group_start = 0;
    std::size_t offset = 0;
    auto flush = [&] {
        if (group.empty()) return;
        out.push_back(detail::make_chunk(group, group_start, {0, group.size()}, doc_id, out.size()));
        group.clear();
    };
    for (const auto& para : paragraphs) {
        if (para.size() > cfg.max_chunk_tokens) {
            flush();
            for (auto span : detail::fixed_spans(para.size(), cfg.max_chunk_tokens, cfg.overlap_tokens)) {
                out.push_back(detail::make_chunk(para, offset, span, doc_id, out.size()));
            }
        } else {
            if (!group.empty() && group.size() + para.size() > cfg.max_chunk_tokens) flush();
            if (group.empty()) group_start = offset;
            group.insert(group.end(), para.begin(), para.end());
        }
        offset += para.size();
    }
    flush();
    return out;
}

inline std::vector<Chunk> chunk_text(std::string_view text, const ChunkConfig& cfg, std::string_view doc_id = {}) {
    return cfg.mode == Mode::Semantic ? chunk_semantic(text, cfg, doc_id) : chunk_fixed(text, cfg, doc_id);
}

}  // namespace ragforge::chunk
