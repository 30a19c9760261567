// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Oracles here are written independently of the library code they check.

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ragforge/chunker.hpp"
#include "ragforge/cli.hpp"
#include "ragforge/embedding.hpp"
#include "ragforge/generation.hpp"
#include "ragforge/ingest.hpp"
#include "ragforge/pdf_writer.hpp"
#include "ragforge/remote_assistant.hpp"
#include "ragforge/retrieval.hpp"
#include "ragforge/testing/mock_server.hpp"
#include "ragforge/vector_store.hpp"
#include "support/test_support.hpp"

using namespace ragforge;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

/// Collects failure reasons for one criterion.
struct Check {
    std::vector<std::string> failures;
    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
};

template <typename F>
ErrorKind error_kind(F&& fn, bool& threw) {
    threw = false;
    try {
        fn();
    } catch (const Error& e) {
        threw = true;
        return e.kind();
    }
    return ErrorKind::IoError;
}

bool throws_kind(const std::function<void()>& fn, ErrorKind want) {
    bool threw = false;
    ErrorKind k = error_kind(fn, threw);
    return threw && k == want;
}

using Spans = std::vector<std::pair<std::size_t, std::size_t>>;

/// Every stride start, minus windows contained in another window.
Spans brute_force_spans(std::size_t n, std::size_t max, std::size_t overlap) {
    Spans all;
    for (std::size_t s = 0; s < n; s += max - overlap) all.emplace_back(s, std::min(s + max, n));
    Spans kept;
    for (std::size_t a = 0; a < all.size(); ++a) {
        bool contained = false;
        for (std::size_t b = 0; b < all.size(); ++b) {
            if (a != b && all[b].first <= all[a].first && all[a].second <= all[b].second) contained = true;
        }
        if (!contained) kept.push_back(all[a]);
    }
    return kept;
}

Spans spans_of(const std::vector<chunk::Chunk>& cs) {
    Spans out;
    for (const auto& c : cs) out.emplace_back(c.token_start, c.token_end);
    return out;
}

std::vector<double> unit_vector(std::mt19937_64& rng, std::size_t d) {
    std::normal_distribution<double> nd;
    std::vector<double> v(d);
    double n = 0;
    for (auto& x : v) {
        x = nd(rng);
        n += x * x;
    }
    for (auto& x : v) x /= std::sqrt(n);
    return v;
}

/// Naive cosine scorer; stable sort keeps the lower insertion index first on ties.
std::vector<std::size_t> naive_topk(const std::vector<std::vector<double>>& db, const std::vector<double>& q, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < db.size(); ++i) {
        double dot = 0, na = 0, nq = 0;
        for (std::size_t j = 0; j < q.size(); ++j) {
            dot += db[i][j] * q[j];
            na += db[i][j] * db[i][j];
            nq += q[j] * q[j];
        }
        scored.emplace_back((na == 0 || nq == 0) ? 0.0 : dot / std::sqrt(na * nq), i);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(scored[i].second);
    return out;
}

store::NewRecord record_for(std::vector<double> v, const std::string& embedder_id, std::size_t i) {
    store::NewRecord r;
    r.chunk.doc_id = "d" + std::to_string(i);
    r.chunk.chunk_id = r.chunk.doc_id + ":0";
    r.chunk.text = "record " + std::to_string(i);
    r.chunk.token_end = 2;
    r.source_file = "f" + std::to_string(i) + ".txt";
    r.embedding.values = std::move(v);
    r.embedding.embedder_id = embedder_id;
    return r;
}

std::string words(std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += (i ? " w" : "w") + std::to_string(i);
    return s;
}

// ---------------------------------------------------------------------------

void criterion_1(Check& c) {
    chunk::ChunkConfig defaults;
    c.expect(defaults.max_chunk_tokens == 800 && defaults.overlap_tokens == 400, "defaults are not 800/400");
    auto text = test::read_file(test::data_dir() / "fixtures" / "words1200.txt");
    c.expect(chunk::count_tokens(text) == 1200, "fixture is not 1200 tokens");
    auto two = spans_of(chunk::chunk_fixed(text, defaults, "doc"));
    c.expect(two == Spans({{0, 800}, {400, 1200}}), "1200 tokens did not give [0,800) [400,1200)");
    c.expect(two == brute_force_spans(1200, 800, 400), "1200-token spans differ from brute force");
    auto one = spans_of(chunk::chunk_fixed(words(800), defaults, "doc"));
    c.expect(one == Spans({{0, 800}}), "800 tokens did not give a single chunk");
    c.expect(one == brute_force_spans(800, 800, 400), "800-token spans differ from brute force");
}

void criterion_2(Check& c) {
    test::TempDir root;
    std::mt19937_64 rng(20240601);
    const std::size_t d = 256;
    auto st = store::get_or_create_store(root.path(), "oracle", d, "random-256");
    std::vector<std::vector<double>> db;
    std::vector<store::NewRecord> batch;
    for (std::size_t i = 0; i < 1000; ++i) {
        db.push_back(unit_vector(rng, d));
        batch.push_back(record_for(db.back(), "random-256", i));
    }
    st.add_records(std::move(batch));
    int agree = 0;
    for (int q = 0; q < 50; ++q) {
        auto query = unit_vector(rng, d);
        std::vector<std::size_t> got;
        for (const auto& h : st.search(query, 10)) got.push_back(static_cast<std::size_t>(h.record->insert_seq));
        if (got == naive_topk(db, query, 10)) ++agree;
    }
    c.expect(agree == 50, std::to_string(agree) + "/50 queries matched the naive scorer");
}

void criterion_3(Check& c) {
    test::TempDir root;
    std::mt19937_64 rng(77);
    const std::size_t d = 256;
    auto st = store::get_or_create_store(root.path(), "persist", d, "random-256");
    std::vector<store::NewRecord> batch;
    for (std::size_t i = 0; i < 100; ++i) batch.push_back(record_for(unit_vector(rng, d), "random-256", i));
    st.add_records(std::move(batch));
    st.persist();
    auto back = store::VectorStore::load(root.path(), "persist");
    c.expect(back.manifest() == st.manifest(), "manifest changed across persist/load");
    c.expect(back.records().size() == 100, "record count changed");
    for (std::size_t i = 0; i < std::min<std::size_t>(100, back.records().size()); ++i) {
        if (back.records()[i].embedding.values != st.records()[i].embedding.values) {
            c.expect(false, "embedding " + std::to_string(i) + " not bit-identical");
            break;
        }
    }
    int same = 0;
    for (int q = 0; q < 50; ++q) {
        auto query = unit_vector(rng, d);
        auto a = st.search(query, 10), b = back.search(query, 10);
        bool ok = a.size() == b.size();
        for (std::size_t i = 0; ok && i < a.size(); ++i) {
            ok = a[i].record->insert_seq == b[i].record->insert_seq &&
                 std::memcmp(&a[i].score, &b[i].score, sizeof(double)) == 0;
        }
        if (ok) ++same;
    }
    c.expect(same == 50, std::to_string(same) + "/50 queries identical after reload");
}

void criterion_4(Check& c) {
    std::istringstream in(test::read_file(test::data_dir() / "golden" / "hashbow8_rag.txt"));
    std::vector<double> golden;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line[0] != '#') golden.push_back(std::stod(line));
    }
    auto v = embed::reference_embed("retrieval augmented generation", 8);
    c.expect(golden.size() == 8, "golden file does not hold 8 values");
    c.expect(v.values.size() == 8, "embedding is not 8-dimensional");
    for (std::size_t i = 0; i < std::min(golden.size(), v.values.size()); ++i) {
        if (std::abs(golden[i] - v.values[i]) > 1e-12) c.expect(false, "component " + std::to_string(i) + " differs");
    }
    c.expect(v.embedder_id == "hashbow-8", "embedder id is " + v.embedder_id);
}

void criterion_5(Check& c) {
    test::TempDir tmp;
    auto corpus = test::data_dir() / "fixtures" / "planted";
    std::vector<std::string> base{"--store-root", (tmp / "stores").string(), "--store", "planted", "--backend", "offline"};
    auto args = base;
    args.insert(args.end(), {"--corpus", corpus.string(), "ingest"});
    auto ing = test::run_cli(args);
    c.expect(ing.code == 0, "ingest exited " + std::to_string(ing.code) + ": " + ing.err);

    auto questions = json::parse(test::read_file(test::data_dir() / "fixtures" / "planted_questions.json"));
    int correct = 0;
    for (const auto& q : questions) {
        auto a = base;
        a.insert(a.end(), {"ask", "--once", q["question"].get<std::string>()});
        auto r = test::run_cli(a);
        std::string want_source = "Sources: [0] " + q["file"].get<std::string>();
        std::string want_answer = "Based on [0]: " + q["fact"].get<std::string>();
        if (r.code == 0 && r.out.find(want_source) != std::string::npos && r.out.starts_with(want_answer)) {
            ++correct;
        }
    }
    c.expect(questions.size() == 10, "expected 10 planted questions");
    c.expect(correct == 10, std::to_string(correct) + "/10 planted facts cited as [0]");
}

void criterion_6(Check& c) {
    retrieval::RetrievalResult result;
    result.question = "What is alpha?";
    result.context_blocks = {{0, "a.pdf", "Alpha is the first letter."}};
    auto bundle = retrieval::assemble_prompt(result);

    testing::MockServer mock;
    gen::GenerationConfig chat;
    chat.backend = gen::Backend::ChatCompletions;
    chat.endpoint = mock.url();
    chat.api_key = "sk-acceptance";
    gen::generate(bundle, chat);
    auto chat_reqs = mock.find("POST", "/v1/chat/completions");
    c.expect(chat_reqs.size() == 1, "expected one chat request");
    if (!chat_reqs.empty()) {
        const auto& b = chat_reqs[0].json_body;
        c.expect(b.value("temperature", -1.0) == 0.7, "chat temperature is not 0.7");
        c.expect(b.value("top_p", -1.0) == 0.9, "chat top_p is not 0.9");
        c.expect(b.value("model", std::string{}) == "gpt-4o", "chat model is not gpt-4o");
        c.expect(b.contains("messages") && b["messages"].is_array(), "chat body lacks messages");
    }

    gen::GenerationConfig local;
    local.backend = gen::Backend::LocalModel;
    local.endpoint = mock.url();
    gen::generate(bundle, local);
    auto local_reqs = mock.find("POST", "/api/generate");
    c.expect(local_reqs.size() == 1, "expected one local request");
    if (!local_reqs.empty()) {
        const auto& b = local_reqs[0].json_body;
        c.expect(b.value("model", std::string{}) == "Llama3.1", "local model is not Llama3.1");
        c.expect(b.value("stream", true) == false, "local stream flag is not false");
        std::string prompt = b.value("prompt", std::string{});
        for (const char* fragment :
             {"You are an expert assistant with access to the following context extracted from documents.",
              "Given this information, please provide a comprehensive and relevant answer to the following question:",
              "If the context does not contain enough information, clearly state that the information is not "
              "available in the context provided.",
              "If possible, provide a step-by-step explanation and highlight key details."}) {
            c.expect(prompt.find(fragment) != std::string::npos, std::string("prompt lacks: ") + fragment);
        }
    }
}

void criterion_7(Check& c) {
    auto opts_for = [](const testing::MockServer& m) {
        remote::ClientOptions o;
        o.endpoint = m.url();
        o.api_key = "sk-acceptance";
        o.poll_interval = std::chrono::milliseconds(10);
        o.timeout = std::chrono::milliseconds(2000);
        return o;
    };
    {
        testing::MockServer mock;
        remote::AssistantClient client(opts_for(mock));
        auto a = client.ensure_vector_store("kb");
        auto b = client.ensure_vector_store("kb");
        c.expect(a.id == b.id, "ensure_vector_store returned different ids");
        c.expect(mock.count("POST", "/v1/vector_stores") == 1, "expected exactly one store create");
    }
    {
        testing::MockServer mock(test::scenario("failed_run"));
        remote::AssistantClient client(opts_for(mock));
        auto thread = client.create_thread("vs");
        c.expect(throws_kind([&] { client.ask_remote(thread, "asst", "q"); }, ErrorKind::RunFailed),
                 "failed run did not raise RunFailed");
    }
    {
        testing::MockServer mock(test::scenario("annotated_completion"));
        remote::AssistantClient client(opts_for(mock));
        auto thread = client.create_thread("vs");
        auto ans = client.ask_remote(thread, "asst", "How long is the warranty?");
        c.expect(ans.text.find("[0]") != std::string::npos, "answer lacks [0] marker: " + ans.text);
        c.expect(ans.text.find("\xE3\x80\x90") == std::string::npos, "annotation span was not replaced");
        c.expect(ans.citations == std::vector<std::string>{"[0] a.pdf"}, "citations are not [\"[0] a.pdf\"]");
    }
}

void criterion_8(Check& c) {
    test::TempDir tmp;
    auto empty = tmp / "empty";
    std::filesystem::create_directories(empty);
    auto r = test::run_cli({"--store-root", (tmp / "stores").string(), "--corpus", empty.string(), "ingest"});
    c.expect(r.code == 2, "empty corpus exited " + std::to_string(r.code));
    c.expect(r.err.find(empty.string()) != std::string::npos, "empty corpus error does not name the path");

    auto st = store::get_or_create_store(tmp / "stores", "guard", 8, "hashbow-8");
    auto foreign = record_for(std::vector<double>(8, 0.0), "other-8", 0);
    c.expect(throws_kind([&] { st.add_records({foreign}); }, ErrorKind::EmbedderMismatch),
             "insertion with a foreign embedder was accepted");
    c.expect(st.manifest().record_count == 0, "rejected insertion changed the store");
    c.expect(throws_kind([&] { retrieval::retrieve(st, embed::Embedder::reference(16), "q"); }, ErrorKind::EmbedderMismatch),
             "query with a foreign embedder was accepted");

    auto scan = tmp / "scan";
    test::write_file(scan / "scan.pdf", pdf::write_pdf({pdf::WriterPage{{}, true, false}}));
    c.expect(throws_kind([&] { ingest::extract_text(ingest::load_source(scan / "scan.pdf")); },
                         ErrorKind::UnsupportedPdfFeature),
             "image-only PDF did not raise UnsupportedPdfFeature");
    auto report = ingest::ingest_directory(scan);
    c.expect(report.documents.empty(), "image-only PDF produced a document");
    c.expect(report.failures.size() == 1 && report.failures[0].kind == ErrorKind::UnsupportedPdfFeature,
             "image-only PDF failure was not recorded");
}

void criterion_9(Check& c) {
    const int kCases = 250;
    std::mt19937_64 rng(909);

    int chunk_ok = 0;
    for (int i = 0; i < kCases; ++i) {
        std::size_t max = 1 + rng() % 40;
        std::size_t ov = rng() % max;
        chunk::ChunkConfig cfg;
        cfg.max_chunk_tokens = max;
        cfg.overlap_tokens = ov;
        cfg.mode = i % 2 ? chunk::Mode::Semantic : chunk::Mode::Fixed;
        std::string text = test::random_words(rng, 1 + rng() % 300, true);
        std::size_t n = chunk::count_tokens(text);
        auto cs = chunk::chunk_text(text, cfg, "p");
        std::vector<char> covered(n, 0);
        bool ok = !cs.empty();
        for (std::size_t k = 0; ok && k < cs.size(); ++k) {
            ok = cs[k].token_count() >= 1 && cs[k].token_count() <= max && cs[k].ordinal == k;
            for (std::size_t t = cs[k].token_start; ok && t < cs[k].token_end; ++t) covered[t] = 1;
            if (ok && k) {
                ok = cs[k - 1].token_start < cs[k].token_start;
                if (ok && cfg.mode == chunk::Mode::Fixed && cs[k].token_count() == max) {
                    ok = cs[k - 1].token_end - cs[k].token_start == ov;
                }
            }
        }
        ok = ok && std::all_of(covered.begin(), covered.end(), [](char x) { return x == 1; });
        if (ok) ++chunk_ok;
    }
    c.expect(chunk_ok == kCases, "chunk laws held in " + std::to_string(chunk_ok) + "/" + std::to_string(kCases));

    int clean_ok = 0;
    for (int i = 0; i < kCases; ++i) {
        ingest::CleanConfig cfg;
        cfg.lowercase = rng() % 2;
        std::string raw = test::random_words(rng, 1 + rng() % 60, true);
        auto once = ingest::clean_text(raw, cfg);
        if (ingest::clean_text(once, cfg) == once) ++clean_ok;
    }
    c.expect(clean_ok == kCases, "clean_text idempotent in " + std::to_string(clean_ok) + "/" + std::to_string(kCases));

    int echo_ok = 0;
    for (int i = 0; i < kCases; ++i) {
        retrieval::RetrievalResult r;
        r.question = test::random_words(rng, 4);
        for (std::size_t k = 0, n = rng() % 4; k < n; ++k) r.context_blocks.push_back({k, "f", test::random_words(rng, 8) + ". more"});
        auto b = retrieval::assemble_prompt(r);
        auto a1 = gen::generate(b, {});
        auto a2 = gen::generate(b, {});
        bool shape = r.context_blocks.empty() ? a1 == gen::kNotAvailable : a1.starts_with("Based on [0]: ");
        if (a1 == a2 && shape) ++echo_ok;
    }
    c.expect(echo_ok == kCases, "OfflineEcho deterministic in " + std::to_string(echo_ok) + "/" + std::to_string(kCases));

    test::TempDir root;
    auto embedder = embed::Embedder::reference(64);
    auto st = store::get_or_create_store(root.path(), "sess", 64, embedder.id());
    for (int i = 0; i < 5; ++i) {
        store::NewRecord r;
        r.chunk.text = test::random_words(rng, 10) + ".";
        r.chunk.doc_id = "d" + std::to_string(i);
        r.chunk.token_end = chunk::count_tokens(r.chunk.text);
        r.source_file = r.chunk.doc_id + ".txt";
        r.embedding = embedder.embed_one(r.chunk.text);
        st.add_records({r});
    }
    gen::GenerationConfig down;
    down.backend = gen::Backend::LocalModel;
    down.endpoint = "http://127.0.0.1:1";
    down.max_retries = 0;
    gen::ConversationSession session("prop", "sess");
    int session_ok = 0;
    std::size_t expected_turns = 0;
    for (int i = 0; i < kCases; ++i) {
        std::string q = test::random_words(rng, 1 + rng() % 6);
        bool fail = rng() % 4 == 0;
        try {
            gen::chat_turn(session, st, embedder, q, fail ? down : gen::GenerationConfig{});
            if (!fail) expected_turns += 2;
        } catch (const Error&) {
        }
        bool ok = session.turns().size() == expected_turns;
        for (std::size_t t = 0; ok && t < session.turns().size(); ++t) {
            ok = session.turns()[t].role == (t % 2 == 0 ? gen::Role::User : gen::Role::Assistant);
        }
        if (ok) ++session_ok;
    }
    c.expect(session_ok == kCases,
             "session alternation/atomicity held in " + std::to_string(session_ok) + "/" + std::to_string(kCases));
}

struct Criterion {
    int id;
    const char* title;
    double budget_s;  ///< 0 means no runtime bound
    void (*run)(Check&);
};

}  // namespace

int main() {
    const Criterion criteria[] = {
        {1, "chunking defaults and arithmetic", 1.0, criterion_1},
        {2, "search oracle equivalence (1000 x 256, 50 queries, k=10)", 5.0, criterion_2},
        {3, "persistence round-trip (100 records)", 2.0, criterion_3},
        {4, "reference embedder golden vector", 0.0, criterion_4},
        {5, "end-to-end planted facts via ask --once", 5.0, criterion_5},
        {6, "wire-contract defaults", 0.0, criterion_6},
        {7, "remote assistant flow", 2.0, criterion_7},
        {8, "robustness guards", 0.0, criterion_8},
        {9, "invariant property suites", 0.0, criterion_9},
    };
    int failed = 0;
    for (const auto& cr : criteria) {
        Check check;
        auto start = Clock::now();
        try {
            cr.run(check);
        } catch (const std::exception& e) {
            check.failures.push_back(std::string("unexpected exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(Clock::now() - start).count();
        if (cr.budget_s > 0 && secs >= cr.budget_s) {
            check.failures.push_back("took " + std::to_string(secs) + " s, budget " + std::to_string(cr.budget_s) + " s");
        }
        bool ok = check.failures.empty();
        if (!ok) ++failed;
        std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << cr.id << ": " << cr.title << " ("
                  << static_cast<long long>(secs * 1000) << " ms)";
        if (!ok) {
            std::cout << " -- ";
            for (std::size_t i = 0; i < check.failures.size(); ++i) std::cout << (i ? "; " : "") << check.failures[i];
        }
        std::cout << "\n";
    }
    std::cout << (9 - failed) << "/9 criteria passed\n";
    return failed == 0 ? 0 : 1;
}
