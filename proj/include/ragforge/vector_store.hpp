#pragma once

// Named on-disk vector stores with exact cosine top-k search.
//
// Layout under <root>/<name>/:
//   manifest.json  {"name","store_id","dimension","embedder_id","record_count","created_at"}
//   records.jsonl  one {"seq","chunk_id","doc_id","source_file","ordinal","token_start",
//                        "token_end","text","embedding"} object per line

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <shared_mutex>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ragforge/chunker.hpp"
#include "ragforge/embedding.hpp"
#include "ragforge/error.hpp"

namespace ragforge::store {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

struct StoreManifest {
    std::string name;
    std::string store_id;
    std::size_t dimension = 0;
    std::string embedder_id;
    std::size_t record_count = 0;
    std::string created_at;

    bool operator==(const StoreManifest&) const = default;
};

struct StoreRecord {
    chunk::Chunk chunk;
    std::string source_file;
    embed::EmbeddingVector embedding;
    std::uint64_t insert_seq = 0;
};

struct NewRecord {
    chunk::Chunk chunk;
    std::string source_file;
    embed::EmbeddingVector embedding;
};

struct SearchHit {
    const StoreRecord* record = nullptr;
    double score = 0.0;
};

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kRecordsFile = "records.jsonl";

namespace detail {

inline void check_name(const std::string& name) {
    if (name.empty()) {
        throw Error(ErrorKind::EmptyName,
                    "Error: 'vector_store_name' is not set. Please provide a valid vector store name.");
    }
    if (name == "." || name == ".." || name.find_first_of("/\\") != std::string::npos) {
        throw Error(ErrorKind::InvalidConfig, "store name '" + name + "' must not contain path separators");
    }
}

inline std::string utc_now_iso(std::time_t t) {
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline ordered_json manifest_json(const StoreManifest& m) {
    return ordered_json{{"name", m.name},       {"store_id", m.store_id},         {"dimension", m.dimension},
                        {"embedder_id", m.embedder_id}, {"record_count", m.record_count}, {"created_at", m.created_at}};
}

inline std::string record_line(const StoreRecord& r) {
    ordered_json j{{"seq", r.insert_seq},
                   {"chunk_id", r.chunk.chunk_id},
                   {"doc_id", r.chunk.doc_id},
                   {"source_file", r.source_file},
                   {"ordinal", r.chunk.ordinal},
                   {"token_start", r.chunk.token_start},
                   {"token_end", r.chunk.token_end},
                   {"text", r.chunk.text},
                   {"embedding", r.embedding.values}};
    // nlohmann emits the shortest decimal form that reparses to the identical double.
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

inline void write_atomic(const fs::path& target, const std::string& content) {
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::IoError, "cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw Error(ErrorKind::IoError, "write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot replace '" + target.string() + "': " + ec.message());
}

[[noreturn]] inline void corrupt(const fs::path& dir, const std::string& what) {
    throw Error(ErrorKind::CorruptStore, "store '" + dir.filename().string() + "' is corrupt: " + what);
}

inline StoreManifest read_manifest(const fs::path& dir) {
    fs::path p = dir / kManifestFile;
    std::ifstream in(p, std::ios::binary);
    if (!in) corrupt(dir, "missing manifest.json");
    StoreManifest m;
    try {
        auto j = nlohmann::json::parse(in);
        static const char* kKeys[] = {"name", "store_id", "dimension", "embedder_id", "record_count", "created_at"};
        if (!j.is_object() || j.size() != std::size(kKeys)) corrupt(dir, "manifest has unexpected keys");
        for (const char* k : kKeys) {
            if (!j.contains(k)) corrupt(dir, std::string("manifest lacks '") + k + "'");
        }
        m.name = j.at("name").get<std::string>();
        m.store_id = j.at("store_id").get<std::string>();
        m.dimension = j.at("dimension").get<std::size_t>();
        m.embedder_id = j.at("embedder_id").get<std::string>();
        m.record_count = j.at("record_count").get<std::size_t>();
        m.created_at = j.at("created_at").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        corrupt(dir, std::string("unreadable manifest: ") + e.what());
    }
    if (m.dimension == 0) corrupt(dir, "manifest dimension is 0");
    return m;
}

}  // namespace detail

/// One named store. Searches may run concurrently; mutations take an exclusive lock.
class VectorStore {
public:
    const StoreManifest& manifest() const noexcept { return manifest_; }
    const std::vector<StoreRecord>& records() const noexcept { return records_; }
    const fs::path& directory() const noexcept { return dir_; }

    /// Reuses the store called `name` under `root` or creates an empty one.
    static VectorStore get_or_create(const fs::path& root, const std::string& name, std::size_t dimension,
                                     const std::string& embedder_id) {
        detail::check_name(name);
        if (dimension == 0) throw Error(ErrorKind::InvalidConfig, "store dimension must be >= 1");
        fs::path dir = root / name;
        std::error_code ec;
        if (fs::exists(dir / kManifestFile, ec)) {
            VectorStore s = load(root, name);
            if (s.manifest_.dimension != dimension || s.manifest_.embedder_id != embedder_id) {
                throw Error(ErrorKind::ConfigMismatch,
                            "store '" + name + "' exists with " + s.manifest_.embedder_id + " (dimension " +
                                std::to_string(s.manifest_.dimension) + "), requested " + embedder_id +
                                " (dimension " + std::to_string(dimension) + ")");
            }
            return s;
        }
        fs::create_directories(dir, ec);
        if (ec) throw Error(ErrorKind::IoError, "cannot create '" + dir.string() + "': " + ec.message());
        auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        VectorStore s;
        s.dir_ = dir;
        s.manifest_.name = name;
        s.manifest_.store_id = name + "-" + std::to_string(static_cast<long long>(now));
        s.manifest_.dimension = dimension;
        s.manifest_.embedder_id = embedder_id;
        s.manifest_.created_at = detail::utc_now_iso(now);
        s.persist();
        return s;
    }

    static VectorStore load(const fs::path& root, const std::string& name) {
        detail::check_name(name);
        fs::path dir = root / name;
        std::error_code ec;
        if (!fs::is_directory(dir, ec)) throw Error(ErrorKind::NotFound, "store '" + name + "' not found under " + root.string());
        VectorStore s;
        s.dir_ = dir;
        s.manifest_ = detail::read_manifest(dir);
        if (s.manifest_.name != name) detail::corrupt(dir, "manifest name '" + s.manifest_.name + "' does not match directory");

        std::ifstream in(dir / kRecordsFile, std::ios::binary);
        if (!in) detail::corrupt(dir, "missing records.jsonl");
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            StoreRecord r;
            try {
                auto j = nlohmann::json::parse(line);
                r.insert_seq = j.at("seq").get<std::uint64_t>();
                r.chunk.chunk_id = j.at("chunk_id").get<std::string>();
                r.chunk.doc_id = j.at("doc_id").get<std::string>();
                r.source_file = j.at("source_file").get<std::string>();
                r.chunk.ordinal = j.at("ordinal").get<std::size_t>();
                r.chunk.token_start = j.at("token_start").get<std::size_t>();
                r.chunk.token_end = j.at("token_end").get<std::size_t>();
                r.chunk.text = j.at("text").get<std::string>();
                r.embedding.values = j.at("embedding").get<std::vector<double>>();
            } catch (const nlohmann::json::exception& e) {
                detail::corrupt(dir, "records.jsonl line " + std::to_string(lineno) + ": " + e.what());
            }
            r.embedding.embedder_id = s.manifest_.embedder_id;
            if (r.embedding.values.size() != s.manifest_.dimension) {
                detail::corrupt(dir, "records.jsonl line " + std::to_string(lineno) + " has wrong dimension");
            }
            if (!s.records_.empty() && r.insert_seq <= s.records_.back().insert_seq) {
                detail::corrupt(dir, "records.jsonl line " + std::to_string(lineno) + " has a non-increasing seq");
            }
            s.records_.push_back(std::move(r));
        }
        if (s.records_.size() != s.manifest_.record_count) {
            detail::corrupt(dir, "manifest says " + std::to_string(s.manifest_.record_count) + " records, found " +
                                     std::to_string(s.records_.size()));
        }
        return s;
    }

    /// Validates the whole batch before touching anything; appends and persists on success.
    std::vector<std::uint64_t> add_records(std::vector<NewRecord> batch) {
        std::unique_lock lock(*mutex_);
        for (const auto& r : batch) {
            if (r.embedding.embedder_id != manifest_.embedder_id) {
                throw Error(ErrorKind::EmbedderMismatch, "embedding from '" + r.embedding.embedder_id +
                                                             "' cannot be added to store built with '" +
                                                             manifest_.embedder_id + "'");
            }
            if (r.embedding.values.size() != manifest_.dimension) {
                throw Error(ErrorKind::DimensionMismatch,
                            "embedding has dimension " + std::to_string(r.embedding.values.size()) + ", store expects " +
                                std::to_string(manifest_.dimension));
            }
            for (double x : r.embedding.values) {
                if (!std::isfinite(x)) throw Error(ErrorKind::InvalidConfig, "embedding contains non-finite values");
            }
        }
        std::uint64_t next = records_.empty() ? 0 : records_.back().insert_seq + 1;
        std::vector<std::uint64_t> seqs;
        std::string lines;
        std::size_t before = records_.size();
        for (auto& r : batch) {
            StoreRecord rec{std::move(r.chunk), std::move(r.source_file), std::move(r.embedding), next++};
            lines += detail::record_line(rec);
            lines += '\n';
            seqs.push_back(rec.insert_seq);
            records_.push_back(std::move(rec));
        }
        try {
            {
                std::ofstream out(dir_ / kRecordsFile, std::ios::binary | std::ios::app);
                if (!out) throw Error(ErrorKind::IoError, "cannot append to records.jsonl");
                out << lines;
                out.flush();
                if (!out) throw Error(ErrorKind::IoError, "append to records.jsonl failed");
            }
            manifest_.record_count = records_.size();
            detail::write_atomic(dir_ / kManifestFile, detail::manifest_json(manifest_).dump(2) + "\n");
        } catch (...) {
            records_.resize(before);
            manifest_.record_count = before;
            throw;
        }
        return seqs;
    }

    /// Exact scan. Hits sorted by score descending, ties by smaller insert_seq.
    std::vector<SearchHit> search(std::span<const double> query, std::size_t k, double min_score = -1.0) const {
        std::shared_lock lock(*mutex_);
        if (query.size() != manifest_.dimension) {
            throw Error(ErrorKind::DimensionMismatch, "query has dimension " + std::to_string(query.size()) +
                                                          ", store expects " + std::to_string(manifest_.dimension));
        }
        if (k == 0) return {};
        std::vector<SearchHit> hits;
        hits.reserve(records_.size());
        for (const auto& r : records_) {
            double s = embed::cosine(query, r.embedding.values);
            if (s >= min_score) hits.push_back({&r, s});
        }
        auto better = [](const SearchHit& a, const SearchHit& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.record->insert_seq < b.record->insert_seq;
        };
        std::size_t take = std::min(k, hits.size());
        std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(take), hits.end(), better);
        hits.resize(take);
        return hits;
    }

    /// Rewrites both files from memory.
    void persist() {
        std::unique_lock lock(*mutex_);
        std::string lines;
        for (const auto& r : records_) {
            lines += detail::record_line(r);
            lines += '\n';
        }
        manifest_.record_count = records_.size();
        detail::write_atomic(dir_ / kRecordsFile, lines);
        detail::write_atomic(dir_ / kManifestFile, detail::manifest_json(manifest_).dump(2) + "\n");
    }

    bool contains_doc(const std::string& doc_id) const {
        std::shared_lock lock(*mutex_);
        return std::any_of(records_.begin(), records_.end(), [&](const StoreRecord& r) { return r.chunk.doc_id == doc_id; });
    }

private:
    VectorStore() = default;

    fs::path dir_;
    StoreManifest manifest_;
    std::vector<StoreRecord> records_;
    std::unique_ptr<std::shared_mutex> mutex_ = std::make_unique<std::shared_mutex>();
};

inline VectorStore get_or_create_store(const fs::path& root, const std::string& name, std::size_t dimension,
                                       const std::string& embedder_id) {
    return VectorStore::get_or_create(root, name, dimension, embedder_id);
}

/// Manifests of every store under `root`, sorted by name. A missing root has no stores.
inline std::vector<StoreManifest> list_stores(const fs::path& root) {
    std::vector<StoreManifest> out;
    std::error_code ec;
    if (!fs::is_directory(root, ec)) return out;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / kManifestFile)) {
            out.push_back(detail::read_manifest(entry.path()));
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return out;
}

inline void delete_store(const fs::path& root, const std::string& name) {
    detail::check_name(name);
    fs::path dir = root / name;
    std::error_code ec;
    if (!fs::exists(dir / kManifestFile, ec)) throw Error(ErrorKind::NotFound, "store '" + name + "' not found");
    fs::remove_all(dir, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot delete store '" + name + "': " + ec.message());
}

}  // namespace ragforge::store
