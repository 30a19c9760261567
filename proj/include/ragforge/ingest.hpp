#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ragforge/error.hpp"
#include "ragforge/pdf.hpp"
#include "ragforge/text.hpp"

namespace ragforge::ingest {

namespace fs = std::filesystem;

enum class SourceKind { PlainText, Pdf };

struct SourceDocument {
    fs::path path;
    SourceKind kind = SourceKind::PlainText;
    std::string bytes;
    std::string sha256;  ///< lowercase hex
};

struct DocumentMetadata {
    std::string source_file;
    std::optional<std::string> title;
    std::optional<std::string> author;
    std::optional<std::string> created_at;
    std::size_t page_count = 0;
    std::size_t byte_size = 0;
};

struct ExtractedDocument {
    std::string doc_id;
    DocumentMetadata metadata;
    std::vector<std::string> pages;
    std::string cleaned_text;
};

struct CleanConfig {
    bool lowercase = false;
    bool strip_repeated_lines = true;
    int min_repeat_pages = 3;
    bool collapse_whitespace = true;

    void validate() const {
        if (min_repeat_pages < 2) {
            throw Error(ErrorKind::InvalidConfig, "min_repeat_pages must be >= 2, got " + std::to_string(min_repeat_pages));
        }
    }
};

inline std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorKind::IoError, "sha256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xF];
    }
    return out;
}

/// Admitted extensions, case-insensitive. nullopt for anything else.
inline std::optional<SourceKind> kind_for(const fs::path& path) {
    std::string ext = text::case_fold(path.extension().string());
    if (ext == ".txt") return SourceKind::PlainText;
    if (ext == ".pdf") return SourceKind::Pdf;
    return std::nullopt;
}

inline SourceDocument load_source(const fs::path& path) {
    std::error_code ec;
    if (!fs::exists(path, ec)) throw Error(ErrorKind::NotFound, "file '" + path.string() + "' does not exist");
    if (!fs::is_regular_file(path, ec)) throw Error(ErrorKind::IoError, "'" + path.string() + "' is not a regular file");
    auto kind = kind_for(path);
    if (!kind) {
        throw Error(ErrorKind::UnsupportedKind,
                    "'" + path.filename().string() + "' has an unsupported extension (expected .txt or .pdf)");
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw Error(ErrorKind::IoError, "read failed for '" + path.string() + "'");
    SourceDocument doc;
    doc.path = path;
    doc.kind = *kind;
    doc.bytes = std::move(buf).str();
    doc.sha256 = sha256_hex(doc.bytes);
    return doc;
}

namespace detail {

/// Drops lines whose trimmed content occurs on at least `min_pages` distinct pages.
inline std::vector<std::string> strip_repeated(std::span<const std::string> pages, int min_pages) {
    std::map<std::string_view, int> page_hits;
    for (const auto& page : pages) {
        std::set<std::string_view> seen;
        for (auto line : text::split_lines(page)) {
            auto t = text::trim(line);
            if (!t.empty() && seen.insert(t).second) ++page_hits[t];
        }
    }
    std::vector<std::string> out;
    out.reserve(pages.size());
    for (const auto& page : pages) {
        std::string kept;
        bool first = true;
        for (auto line : text::split_lines(page)) {
            auto t = text::trim(line);
            if (!t.empty() && page_hits[t] >= min_pages) continue;
            if (!first) kept += '\n';
            kept += line;
            first = false;
        }
        out.push_back(std::move(kept));
    }
    return out;
}

inline std::string collapse(std::string_view s) { return text::join(text::tokens(s), " "); }

inline std::string clean_impl(std::string_view raw, const CleanConfig& cfg, std::span<const std::string> pages,
                              bool keep_paragraphs) {
    cfg.validate();
    std::string source;
    if (!pages.empty()) {
        std::vector<std::string> kept = cfg.strip_repeated_lines
                                            ? strip_repeated(pages, cfg.min_repeat_pages)
                                            : std::vector<std::string>(pages.begin(), pages.end());
        for (std::size_t i = 0; i < kept.size(); ++i) {
            if (i) source += "\n\n";
            source += kept[i];
        }
    } else {
        source.assign(raw);
    }
    if (cfg.lowercase) source = text::case_fold(source);
    if (!cfg.collapse_whitespace) return source;
    if (!keep_paragraphs) return collapse(source);

    // Collapse within paragraphs; paragraphs are separated by lines that are blank after trimming.
    std::string out;
    std::string para;
    auto flush = [&] {
        std::string c = collapse(para);
        if (!c.empty()) {
            if (!out.empty()) out += "\n\n";
            out += c;
        }
        para.clear();
    };
    for (auto line : text::split_lines(source)) {
        if (text::trim(line).empty()) {
            flush();
        } else {
            para += line;
            para += '\n';
        }
    }
    flush();
    return out;
}

}  // namespace detail

/// Normalizes text for chunking. When `pages` is non-empty it replaces `raw` as the source:
/// pages are joined with blank lines after repeated header/footer lines are removed.
inline std::string clean_text(std::string_view raw, const CleanConfig& cfg = {},
                              std::span<const std::string> pages = {}) {
    return detail::clean_impl(raw, cfg, pages, false);
}

/// Same normalization as clean_text, but blank-line paragraph breaks survive as "\n\n".
/// The token sequence is identical to clean_text's.
inline std::string clean_text_paragraphs(std::string_view raw, const CleanConfig& cfg = {},
                                         std::span<const std::string> pages = {}) {
    return detail::clean_impl(raw, cfg, pages, true);
}

inline DocumentMetadata extract_metadata(const SourceDocument& doc) {
    DocumentMetadata md;
    md.source_file = doc.path.filename().string();
    md.byte_size = doc.bytes.size();
    if (doc.kind == SourceKind::PlainText) {
        md.page_count = 1;
        return md;
    }
    auto [pages, info] = pdf::read_metadata(doc.bytes);
    md.page_count = pages;
    md.title = std::move(info.title);
    md.author = std::move(info.author);
    md.created_at = std::move(info.created_at);
    return md;
}

inline ExtractedDocument extract_text(const SourceDocument& doc, const CleanConfig& cfg = {}) {
    ExtractedDocument out;
    out.doc_id = doc.sha256;
    out.metadata.source_file = doc.path.filename().string();
    out.metadata.byte_size = doc.bytes.size();
    if (doc.kind == SourceKind::PlainText) {
        if (!text::valid_utf8(doc.bytes)) {
            throw Error(ErrorKind::EncodingError, "'" + out.metadata.source_file + "' is not valid UTF-8");
        }
        out.pages.push_back(doc.bytes);
        out.metadata.page_count = 1;
    } else {
        pdf::PdfText pt = pdf::extract(doc.bytes);
        out.pages = std::move(pt.pages);
        out.metadata.page_count = out.pages.size();
        out.metadata.title = std::move(pt.info.title);
        out.metadata.author = std::move(pt.info.author);
        out.metadata.created_at = std::move(pt.info.created_at);
    }
    out.cleaned_text = clean_text({}, cfg, out.pages);
    return out;
}

struct IngestFailure {
    std::string source_file;
    ErrorKind kind;
    std::string message;
};

struct IngestReport {
    std::vector<ExtractedDocument> documents;
    std::vector<IngestFailure> failures;
};

/// Admitted files directly inside `dir`, sorted by file name.
inline std::vector<fs::path> admitted_files(const fs::path& dir) {
    std::error_code ec;
    if (!fs::exists(dir, ec)) throw Error(ErrorKind::NotFound, "Directory '" + dir.string() + "' does not exist");
    if (!fs::is_directory(dir, ec)) throw Error(ErrorKind::NotFound, "'" + dir.string() + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && kind_for(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    return files;
}

/// Per-file failures are collected in the report; the call itself only fails when there is nothing to process.
inline IngestReport ingest_directory(const fs::path& dir, const CleanConfig& cfg = {}) {
    cfg.validate();
    auto files = admitted_files(dir);
    if (files.empty()) {
        throw Error(ErrorKind::EmptyDirectory,
                    "Directory '" + dir.string() + "' is empty. No .txt or .pdf files to ingest.");
    }
    struct Outcome {
        std::optional<ExtractedDocument> doc;
        std::optional<IngestFailure> failure;
    };
    std::vector<std::future<Outcome>> jobs;
    jobs.reserve(files.size());
    for (const auto& f : files) {
        jobs.push_back(std::async(std::launch::async, [f, cfg]() -> Outcome {
            try {
                return {extract_text(load_source(f), cfg), std::nullopt};
            } catch (const Error& e) {
                return {std::nullopt, IngestFailure{f.filename().string(), e.kind(), e.what()}};
            } catch (const std::exception& e) {
                return {std::nullopt, IngestFailure{f.filename().string(), ErrorKind::IoError, e.what()}};
            }
        }));
    }
    IngestReport report;
    for (auto& j : jobs) {
        Outcome o = j.get();
        if (o.doc) report.documents.push_back(std::move(*o.doc));
        if (o.failure) report.failures.push_back(std::move(*o.failure));
    }
    return report;
}

}  // namespace ragforge::ingest
