#pragma once

// Layered settings: built-in defaults < ragforge.toml < environment < command-line flags.
//
// The config file accepts the TOML subset the engine needs: [table] headers, `key = value`
// with basic/literal strings, integers, floats and booleans, and `#` comments.
// Keys are addressed flat as "table.key". Environment overrides use RAGFORGE_<TABLE>_<KEY>.

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ragforge/error.hpp"
#include "ragforge/text.hpp"

namespace ragforge::config {

namespace fs = std::filesystem;

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

inline EnvLookup process_env() {
    return [](const std::string& k) -> std::optional<std::string> {
        if (const char* v = std::getenv(k.c_str())) return std::string(v);
        return std::nullopt;
    };
}

struct KeySpec {
    const char* key;
    const char* default_value;
    const char* help;
};

inline const std::vector<KeySpec>& known_keys() {
    static const std::vector<KeySpec> keys = {
        {"store.root", "./stores", "directory holding local vector stores"},
        {"store.name", "default", "local vector store name"},
        {"corpus.dir", "./Data", "directory with .txt/.pdf sources for ingest"},
        {"chunk.max_tokens", "800", "maximum tokens per chunk"},
        {"chunk.overlap", "400", "tokens shared by consecutive fixed-mode chunks"},
        {"chunk.mode", "fixed", "fixed | semantic"},
        {"clean.lowercase", "false", "case-fold text during cleaning"},
        {"clean.strip_repeated_lines", "true", "drop header/footer lines repeated across pages"},
        {"clean.min_repeat_pages", "3", "pages a line must repeat on to be dropped"},
        {"embed.backend", "reference", "reference | remote"},
        {"embed.dimension", "256", "embedding dimension"},
        {"embed.endpoint", "", "remote embedding endpoint (remote backend)"},
        {"embed.model", "", "remote embedding model (remote backend)"},
        {"retrieve.k", "4", "number of chunks retrieved per question"},
        {"retrieve.min_score", "0.0", "minimum cosine score of retrieved chunks"},
        {"prompt.template_path", "", "file with a prompt template containing {context} and {question}"},
        {"generation.backend", "offline", "chat | local | offline"},
        {"generation.model", "", "model name (defaults: gpt-4o for chat, Llama3.1 for local)"},
        {"generation.temperature", "0.7", "sampling temperature in [0, 2]"},
        {"generation.top_p", "0.9", "nucleus sampling in (0, 1]"},
        {"generation.endpoint", "", "backend base URL (defaults per backend)"},
        {"generation.timeout_s", "60", "request timeout in seconds"},
        {"generation.max_retries", "2", "retries after a failed generation request"},
        {"remote.endpoint", "https://api.openai.com", "managed assistant API base URL"},
        {"remote.store_name", "", "remote vector store name"},
        {"remote.upload_dir", "./Upload", "directory of PDFs uploaded when the remote store is created"},
        {"remote.assistant_name", "RAG Assistant", "remote assistant name"},
        {"remote.description", "Answers questions from the uploaded PDF knowledge base.", "remote assistant description"},
        {"remote.instructions",
         "You are an expert assistant. Answer using the files provided through file search and cite them.",
         "remote assistant instructions"},
        {"remote.model", "gpt-4o", "remote assistant model"},
        {"remote.temperature", "0.7", "remote assistant temperature"},
        {"remote.top_p", "0.9", "remote assistant top_p"},
        {"remote.poll_interval_s", "1", "seconds between run status polls"},
        {"remote.max_polls", "120", "maximum run status polls"},
        {"remote.timeout_s", "60", "request timeout in seconds"},
    };
    return keys;
}

inline bool is_known(const std::string& key) {
    for (const auto& k : known_keys()) {
        if (key == k.key) return true;
    }
    return false;
}

inline std::string env_name(const std::string& key) {
    std::string out = "RAGFORGE_";
    for (char c : key) out += (c == '.') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

namespace detail {

[[noreturn]] inline void bad(const std::string& where, const std::string& what) {
    throw Error(ErrorKind::InvalidConfig, where + ": " + what);
}

inline std::string strip_comment(const std::string& line) {
    bool in_basic = false, in_literal = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (in_basic) {
            if (c == '\\') ++i;
            else if (c == '"') in_basic = false;
        } else if (in_literal) {
            if (c == '\'') in_literal = false;
        } else if (c == '"') {
            in_basic = true;
        } else if (c == '\'') {
            in_literal = true;
        } else if (c == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

inline std::string parse_value(std::string_view v, const std::string& where) {
    if (v.empty()) bad(where, "missing value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') bad(where, "unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            char c = v[i];
            if (c != '\\') {
                out += c;
                continue;
            }
            if (++i >= v.size() - 1) bad(where, "dangling escape");
            switch (v[i]) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: bad(where, std::string("unsupported escape \\") + v[i]);
            }
        }
        return out;
    }
    if (v.front() == '\'') {
        if (v.size() < 2 || v.back() != '\'') bad(where, "unterminated literal string");
        return std::string(v.substr(1, v.size() - 2));
    }
    if (v == "true" || v == "false") return std::string(v);
    // Numbers: allow '_' separators, reject everything else.
    std::string num;
    for (char c : v) {
        if (c == '_') continue;
        if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' || c == 'e' || c == 'E')) {
            bad(where, "unsupported value '" + std::string(v) + "' (quote strings)");
        }
        num += c;
    }
    return num;
}

}  // namespace detail

/// Flat "table.key" -> raw value map from the TOML subset.
inline std::map<std::string, std::string> parse_toml(std::string_view content, const std::string& origin = "config") {
    std::map<std::string, std::string> out;
    std::string table;
    std::size_t lineno = 0;
    std::istringstream in{std::string(content)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string where = origin + ":" + std::to_string(lineno);
        std::string line(text::trim(detail::strip_comment(raw)));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) detail::bad(where, "malformed table header");
            table = std::string(text::trim(std::string_view(line).substr(1, line.size() - 2)));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) detail::bad(where, "expected key = value");
        std::string key(text::trim(std::string_view(line).substr(0, eq)));
        std::string value = detail::parse_value(text::trim(std::string_view(line).substr(eq + 1)), where);
        std::string full = table.empty() ? key : table + "." + key;
        if (out.count(full)) detail::bad(where, "duplicate key '" + full + "'");
        out[full] = value;
    }
    return out;
}

/// KEY=VALUE lines; optional "export " prefix, quotes and # comments.
inline std::map<std::string, std::string> parse_dotenv(std::string_view content) {
    std::map<std::string, std::string> out;
    std::istringstream in{std::string(content)};
    std::string raw;
    while (std::getline(in, raw)) {
        std::string_view line = text::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (line.substr(0, 7) == "export ") line = text::trim(line.substr(7));
        auto eq = line.find('=');
        if (eq == std::string_view::npos) continue;
        std::string key(text::trim(line.substr(0, eq)));
        std::string_view value = text::trim(line.substr(eq + 1));
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
            value = value.substr(1, value.size() - 2);
        } else if (auto hash = value.find(" #"); hash != std::string_view::npos) {
            value = text::trim(value.substr(0, hash));
        }
        if (!key.empty()) out[key] = std::string(value);
    }
    return out;
}

inline std::optional<std::string> read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

/// Resolved key/value view with typed accessors that name the offending key on error.
class Settings {
public:
    /// Applies one layer; unknown keys are rejected.
    void apply(const std::map<std::string, std::string>& layer, const std::string& origin) {
        for (const auto& [k, v] : layer) {
            if (!is_known(k)) throw Error(ErrorKind::InvalidConfig, origin + ": unknown key '" + k + "'");
            values_[k] = v;
        }
    }

    void set(const std::string& key, const std::string& value) {
        if (!is_known(key)) throw Error(ErrorKind::InvalidConfig, "unknown key '" + key + "'");
        values_[key] = value;
    }

    std::string str(const std::string& key) const {
        auto it = values_.find(key);
        if (it != values_.end()) return it->second;
        for (const auto& k : known_keys()) {
            if (key == k.key) return k.default_value;
        }
        throw Error(ErrorKind::InvalidConfig, "unknown key '" + key + "'");
    }

    std::optional<std::string> opt(const std::string& key) const {
        std::string v = str(key);
        if (v.empty()) return std::nullopt;
        return v;
    }

    long long integer(const std::string& key, long long min_value) const {
        std::string v = str(key);
        long long out = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || p != v.data() + v.size()) {
            throw Error(ErrorKind::InvalidConfig, "'" + key + "' must be an integer, got '" + v + "'");
        }
        if (out < min_value) {
            throw Error(ErrorKind::InvalidConfig, "'" + key + "' must be >= " + std::to_string(min_value) + ", got " + v);
        }
        return out;
    }

    double real(const std::string& key) const {
        std::string v = str(key);
        try {
            std::size_t used = 0;
            double out = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return out;
        } catch (const std::exception&) {
            throw Error(ErrorKind::InvalidConfig, "'" + key + "' must be a number, got '" + v + "'");
        }
    }

    bool boolean(const std::string& key) const {
        std::string v = str(key);
        if (v == "true") return true;
        if (v == "false") return false;
        throw Error(ErrorKind::InvalidConfig, "'" + key + "' must be true or false, got '" + v + "'");
    }

    std::string choice(const std::string& key, const std::set<std::string>& allowed) const {
        std::string v = str(key);
        if (!allowed.count(v)) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            throw Error(ErrorKind::InvalidConfig, "'" + key + "' must be one of {" + list + "}, got '" + v + "'");
        }
        return v;
    }

private:
    std::map<std::string, std::string> values_;
};

/// Defaults, then the config file (if any), then RAGFORGE_* environment variables.
/// Flags are layered on top by the caller.
inline Settings load_settings(const std::optional<fs::path>& config_file, const EnvLookup& env) {
    Settings s;
    if (config_file) {
        auto content = read_file(*config_file);
        if (!content) throw Error(ErrorKind::InvalidConfig, "cannot read config file '" + config_file->string() + "'");
        s.apply(parse_toml(*content, config_file->string()), config_file->string());
    }
    for (const auto& k : known_keys()) {
        if (auto v = env(env_name(k.key))) s.set(k.key, *v);
    }
    return s;
}

/// OPENAI_API_KEY from the environment, else from a dotenv file.
inline std::optional<std::string> api_key(const EnvLookup& env, const std::optional<fs::path>& dotenv) {
    if (auto v = env("OPENAI_API_KEY"); v && !v->empty()) return v;
    if (dotenv) {
        if (auto content = read_file(*dotenv)) {
            auto vars = parse_dotenv(*content);
            auto it = vars.find("OPENAI_API_KEY");
            if (it != vars.end() && !it->second.empty()) return it->second;
        }
    }
    return std::nullopt;
}

}  // namespace ragforge::config
