#include <gtest/gtest.h>

#include <random>
#include <set>
#include <utility>

#include "ragforge/chunker.hpp"
#include "support/test_support.hpp"

using namespace ragforge;
using chunk::ChunkConfig;

namespace {

using SpanList = std::vector<std::pair<std::size_t, std::size_t>>;

// Brute force: every stride position, then drop any window that sits inside another one.
SpanList oracle_spans(std::size_t n, std::size_t max, std::size_t overlap) {
    SpanList all;
    for (std::size_t i = 0; i * (max - overlap) < n; ++i) {
        std::size_t s = i * (max - overlap);
        all.emplace_back(s, std::min(s + max, n));
    }
    SpanList kept;
    for (std::size_t a = 0; a < all.size(); ++a) {
        bool inside = false;
        for (std::size_t b = 0; b < all.size(); ++b) {
            if (a != b && all[b].first <= all[a].first && all[a].second <= all[b].second &&
                (all[b] != all[a] || b < a)) {
                inside = true;
            }
        }
        if (!inside) kept.push_back(all[a]);
    }
    return kept;
}

SpanList spans_of(const std::vector<chunk::Chunk>& cs) {
    SpanList out;
    for (const auto& c : cs) out.emplace_back(c.token_start, c.token_end);
    return out;
}

std::string words(std::size_t n, const std::string& prefix = "t") {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += prefix + std::to_string(i);
    }
    return out;
}

ChunkConfig cfg(std::size_t max, std::size_t overlap, chunk::Mode mode = chunk::Mode::Fixed) {
    ChunkConfig c;
    c.max_chunk_tokens = max;
    c.overlap_tokens = overlap;
    c.mode = mode;
    return c;
}

}  // namespace

TEST(CountTokens, Basics) {
    EXPECT_EQ(chunk::count_tokens(""), 0u);
    EXPECT_EQ(chunk::count_tokens("a b  c"), 3u);
    EXPECT_EQ(chunk::count_tokens(" \t\n\r\v\f"), 0u);
    EXPECT_EQ(chunk::count_tokens("\fx\vy\r\nz "), 3u);
}

TEST(CountTokens, FixtureCorpus) {
    auto text = test::read_file(test::data_dir() / "fixtures" / "words1200.txt");
    EXPECT_EQ(chunk::count_tokens(text), 1200u);
}

TEST(ChunkFixed, ExactFit) {
    auto cs = chunk::chunk_fixed(words(800), ChunkConfig{}, "d");
    ASSERT_EQ(cs.size(), 1u);
    EXPECT_EQ(cs[0].token_start, 0u);
    EXPECT_EQ(cs[0].token_end, 800u);
    EXPECT_EQ(cs[0].chunk_id, "d:0");
}

TEST(ChunkFixed, TwelveHundredTokens) {
    auto text = test::read_file(test::data_dir() / "fixtures" / "words1200.txt");
    auto cs = chunk::chunk_fixed(text, ChunkConfig{}, "doc");
    EXPECT_EQ(spans_of(cs), (SpanList{{0, 800}, {400, 1200}}));
    EXPECT_EQ(spans_of(cs), oracle_spans(1200, 800, 400));
    EXPECT_EQ(cs[1].chunk_id, "doc:1");
    EXPECT_EQ(cs[1].doc_id, "doc");
    EXPECT_TRUE(cs[1].text.starts_with("w0400 w0401"));
    EXPECT_TRUE(cs[1].text.ends_with("w1199"));
}

TEST(ChunkFixed, EmptyText) {
    EXPECT_TRUE(chunk::chunk_fixed("", ChunkConfig{}).empty());
    EXPECT_TRUE(chunk::chunk_fixed("  \n\t ", ChunkConfig{}).empty());
}

TEST(ChunkFixed, InvalidConfig) {
    for (auto c : {cfg(400, 400), cfg(10, 11), cfg(0, 0)}) {
        try {
            chunk::chunk_fixed("a b c", c);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
        }
    }
}

TEST(ChunkFixed, TextRejoinedWithSingleSpaces) {
    auto cs = chunk::chunk_fixed("a\n\nb\t c", cfg(2, 1));
    ASSERT_EQ(cs.size(), 2u);
    EXPECT_EQ(cs[0].text, "a b");
    EXPECT_EQ(cs[1].text, "b c");
}

TEST(ChunkFixed, MatchesBruteForceOracle) {
    for (std::size_t n = 0; n <= 60; ++n) {
        for (std::size_t max = 1; max <= 12; ++max) {
            for (std::size_t ov = 0; ov < max; ++ov) {
                auto cs = chunk::chunk_fixed(words(n), cfg(max, ov));
                ASSERT_EQ(spans_of(cs), oracle_spans(n, max, ov)) << n << "/" << max << "/" << ov;
            }
        }
    }
}

TEST(ChunkSemantic, MergesSmallParagraphs) {
    std::string text = words(300, "a") + "\n\n" + words(300, "b");
    auto cs = chunk::chunk_semantic(text, ChunkConfig{});
    ASSERT_EQ(cs.size(), 1u);
    EXPECT_EQ(cs[0].token_count(), 600u);
}

TEST(ChunkSemantic, KeepsLargeParagraphsApart) {
    std::string text = words(500, "a") + "\n\n" + words(500, "b");
    auto cs = chunk::chunk_semantic(text, ChunkConfig{});
    EXPECT_EQ(spans_of(cs), (SpanList{{0, 500}, {500, 1000}}));
}

TEST(ChunkSemantic, SplitsOversizedParagraph) {
    auto cs = chunk::chunk_semantic(words(900), cfg(800, 400, chunk::Mode::Semantic));
    EXPECT_EQ(spans_of(cs), (SpanList{{0, 800}, {400, 900}}));
}

TEST(ChunkSemantic, WhitespaceOnlyLinesSeparateParagraphs) {
    auto cs = chunk::chunk_semantic("a b\n   \nc d", cfg(3, 0));
    EXPECT_EQ(spans_of(cs), (SpanList{{0, 2}, {2, 4}}));
}

TEST(ChunkSemantic, DispatchByMode) {
    std::string text = words(3) + "\n\n" + words(3);
    EXPECT_EQ(chunk::chunk_text(text, cfg(4, 2, chunk::Mode::Semantic)).size(), 2u);
    EXPECT_EQ(chunk::chunk_text(text, cfg(4, 2, chunk::Mode::Fixed)).size(), 2u);
    EXPECT_EQ(spans_of(chunk::chunk_text(text, cfg(4, 2, chunk::Mode::Fixed))), (SpanList{{0, 4}, {2, 6}}));
}

TEST(ChunkSemantic, MatchesGreedyOracle) {
    std::mt19937_64 rng(5);
    for (int iter = 0; iter < 200; ++iter) {
        std::size_t max = 2 + rng() % 20;
        std::size_t ov = rng() % max;
        std::vector<std::size_t> paras(1 + rng() % 8);
        std::string text;
        for (std::size_t p = 0; p < paras.size(); ++p) {
            paras[p] = 1 + rng() % (max * 2);
            if (p) text += "\n\n";
            text += words(paras[p]);
        }
        // Greedy merge oracle over paragraph lengths.
        SpanList expect;
        std::size_t off = 0, gs = 0, gl = 0;
        for (std::size_t len : paras) {
            if (len > max) {
                if (gl) expect.emplace_back(gs, gs + gl), gl = 0;
                for (auto [s, e] : oracle_spans(len, max, ov)) expect.emplace_back(off + s, off + e);
            } else {
                if (gl && gl + len > max) expect.emplace_back(gs, gs + gl), gl = 0;
                if (!gl) gs = off;
                gl += len;
            }
            off += len;
        }
        if (gl) expect.emplace_back(gs, gs + gl);
        ASSERT_EQ(spans_of(chunk::chunk_semantic(text, cfg(max, ov, chunk::Mode::Semantic))), expect) << iter;
    }
}

// Property suite shared by both modes.
TEST(ChunkProperties, CoverageOverlapMonotonicBound) {
    std::mt19937_64 rng(2024);
    for (int iter = 0; iter < 250; ++iter) {
        std::size_t max = 1 + rng() % 30;
        std::size_t ov = rng() % max;
        auto mode = iter % 2 ? chunk::Mode::Semantic : chunk::Mode::Fixed;
        std::string text = test::random_words(rng, 1 + rng() % 200, true);
        std::size_t n = chunk::count_tokens(text);
        auto c = cfg(max, ov, mode);
        auto cs = chunk::chunk_text(text, c, "doc");
        ASSERT_FALSE(cs.empty());

        std::vector<bool> covered(n, false);
        for (std::size_t i = 0; i < cs.size(); ++i) {
            const auto& ch = cs[i];
            EXPECT_EQ(ch.ordinal, i);
            EXPECT_EQ(ch.chunk_id, "doc:" + std::to_string(i));
            EXPECT_GE(ch.token_count(), 1u);
            EXPECT_LE(ch.token_count(), max);
            EXPECT_EQ(chunk::count_tokens(ch.text), ch.token_count());
            for (std::size_t t = ch.token_start; t < ch.token_end; ++t) covered[t] = true;
            if (i) {
                EXPECT_LT(cs[i - 1].token_start, ch.token_start);
                if (mode == chunk::Mode::Fixed && ch.token_count() == max) {
                    EXPECT_EQ(cs[i - 1].token_end - ch.token_start, ov);
                }
            }
        }
        EXPECT_EQ(std::count(covered.begin(), covered.end(), true), static_cast<long>(n));
        EXPECT_EQ(cs.front().token_start, 0u);
        EXPECT_EQ(cs.back().token_end, n);

        auto again = chunk::chunk_text(text, c, "doc");
        ASSERT_EQ(again.size(), cs.size());
        for (std::size_t i = 0; i < cs.size(); ++i) EXPECT_EQ(again[i].text, cs[i].text);
    }
}
