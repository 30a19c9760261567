#pragma once

// Text extraction for a deliberately small PDF subset:
//   - classic cross-reference tables with a trailer dictionary (no xref/object streams)
//   - content streams unfiltered or FlateDecode
//   - text drawn with Tj, TJ, ' and " using single-byte fonts, decoded as WinAnsi
// Anything outside the subset raises UnsupportedPdfFeature; structural damage raises MalformedPdf.

#include <zlib.h>

#include <charconv>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ragforge/error.hpp"
#include "ragforge/text.hpp"

namespace ragforge::pdf {

struct Object;

struct Null {};
struct Name {
    std::string value;
    bool operator==(const Name&) const = default;
};
struct String {
    std::string bytes;
};
struct Ref {
    std::int64_t num = 0;
    std::int64_t gen = 0;
};
using Array = std::vector<Object>;
using Dict = std::vector<std::pair<std::string, Object>>;
struct Stream;

struct Object {
    using Value = std::variant<Null, bool, std::int64_t, double, String, Name, Array, Dict, Ref,
                               std::shared_ptr<Stream>>;
    Value value;

    template <typename T>
    const T* as() const noexcept { return std::get_if<T>(&value); }
    bool is_null() const noexcept { return std::holds_alternative<Null>(value); }
};

struct Stream {
    Dict dict;
    std::string raw;
};

inline const Object* dict_get(const Dict& d, std::string_view key) noexcept {
    for (const auto& [k, v] : d) {
        if (k == key) return &v;
    }
    return nullptr;
}

namespace detail {

[[noreturn]] inline void malformed(const std::string& what) {
    throw Error(ErrorKind::MalformedPdf, "malformed PDF: " + what);
}

[[noreturn]] inline void unsupported(const std::string& what) {
    throw Error(ErrorKind::UnsupportedPdfFeature, "unsupported PDF feature: " + what);
}

constexpr bool is_pdf_space(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\0';
}

constexpr bool is_delim(char c) noexcept {
    return c == '(' || c == ')' || c == '<' || c == '>' || c == '[' || c == ']' || c == '{' ||
           c == '}' || c == '/' || c == '%';
}

inline int hex_value(char c) noexcept {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

enum class TokKind { End, Int, Real, String, Name, ArrayOpen, ArrayClose, DictOpen, DictClose, Keyword };

struct Token {
    TokKind kind = TokKind::End;
    std::string text;
    std::int64_t ival = 0;
    double rval = 0.0;
};

/// Tokenizer shared by the file-structure parser and the content-stream interpreter.
class Lexer {
public:
    explicit Lexer(std::string_view data, std::size_t pos = 0) : data_(data), pos_(pos) {}

    std::size_t pos() const noexcept { return pos_; }
    void seek(std::size_t p) noexcept { pos_ = p; }
    std::string_view data() const noexcept { return data_; }

    void skip_space() {
        while (pos_ < data_.size()) {
            char c = data_[pos_];
            if (is_pdf_space(c)) {
                ++pos_;
            } else if (c == '%') {
                while (pos_ < data_.size() && data_[pos_] != '\n' && data_[pos_] != '\r') ++pos_;
            } else {
                break;
            }
        }
    }

    Token next() {
        skip_space();
        Token t;
        if (pos_ >= data_.size()) return t;
        char c = data_[pos_];
        switch (c) {
            case '[': ++pos_; t.kind = TokKind::ArrayOpen; return t;
            case ']': ++pos_; t.kind = TokKind::ArrayClose; return t;
            case '(': t.kind = TokKind::String; t.text = literal_string(); return t;
            case '/': t.kind = TokKind::Name; t.text = name(); return t;
            case '<':
                if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '<') {
                    pos_ += 2;
                    t.kind = TokKind::DictOpen;
                    return t;
                }
                t.kind = TokKind::String;
                t.text = hex_string();
                return t;
            case '>':
                if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '>') {
                    pos_ += 2;
                    t.kind = TokKind::DictClose;
                    return t;
                }
                malformed("stray '>'");
            case ')': malformed("stray ')'");
            case '{': case '}': ++pos_; t.kind = TokKind::Keyword; t.text = std::string(1, c); return t;
            default: break;
        }
        std::size_t start = pos_;
        while (pos_ < data_.size() && !is_pdf_space(data_[pos_]) && !is_delim(data_[pos_])) ++pos_;
        std::string_view word = data_.substr(start, pos_ - start);
        if (word.empty()) malformed("unexpected byte");
        if (number(word, t)) return t;
        t.kind = TokKind::Keyword;
        t.text = std::string(word);
        return t;
    }

private:
    static bool number(std::string_view w, Token& t) {
        char f = w.front();
        if (!(f == '+' || f == '-' || f == '.' || (f >= '0' && f <= '9'))) return false;
        std::string_view body = (f == '+') ? w.substr(1) : w;
        if (body.empty()) return false;
        if (body.find('.') == std::string_view::npos) {
            std::int64_t v = 0;
            auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
            if (ec != std::errc() || p != body.data() + body.size()) return false;
            t.kind = TokKind::Int;
            t.ival = v;
            t.rval = static_cast<double>(v);
            return true;
        }
        // PDF reals have no exponent; from_chars with fixed format accepts "-.5" only without the sign.
        bool neg = body.front() == '-';
        std::string_view mag = neg ? body.substr(1) : body;
        if (mag.empty()) return false;
        double v = 0.0;
        auto [p, ec] = std::from_chars(mag.data(), mag.data() + mag.size(), v, std::chars_format::fixed);
        if (ec != std::errc() || p != mag.data() + mag.size()) return false;
        t.kind = TokKind::Real;
        t.rval = neg ? -v : v;
        return true;
    }

    std::string name() {
        ++pos_;  // '/'
        std::string out;
        while (pos_ < data_.size() && !is_pdf_space(data_[pos_]) && !is_delim(data_[pos_])) {
            char c = data_[pos_];
            if (c == '#' && pos_ + 2 < data_.size() && hex_value(data_[pos_ + 1]) >= 0 &&
                hex_value(data_[pos_ + 2]) >= 0) {
                out += static_cast<char>(hex_value(data_[pos_ + 1]) * 16 + hex_value(data_[pos_ + 2]));
                pos_ += 3;
            } else {
                out += c;
                ++pos_;
            }
        }
        return out;
    }

    std::string literal_string() {
        ++pos_;  // '('
        std::string out;
        int depth = 1;
        while (pos_ < data_.size()) {
            char c = data_[pos_++];
            if (c == '(') {
                ++depth;
                out += c;
            } else if (c == ')') {
                if (--depth == 0) return out;
                out += c;
            } else if (c == '\\') {
                if (pos_ >= data_.size()) break;
                char e = data_[pos_++];
                switch (e) {
                    case 'n': out += '\n'; break;
                    case 'r': out += '\r'; break;
                    case 't': out += '\t'; break;
                    case 'b': out += '\b'; break;
                    case 'f': out += '\f'; break;
                    case '\r':
                        if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
                        break;
                    case '\n': break;
                    default:
                        if (e >= '0' && e <= '7') {
                            int v = e - '0';
                            for (int k = 0; k < 2 && pos_ < data_.size() && data_[pos_] >= '0' &&
                                            data_[pos_] <= '7';
                                 ++k) {
                                v = v * 8 + (data_[pos_++] - '0');
                            }
                            out += static_cast<char>(v & 0xFF);
                        } else {
                            out += e;
                        }
                }
            } else if (c == '\r') {
                if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
                out += '\n';
            } else {
                out += c;
            }
        }
        malformed("unterminated string");
    }

    std::string hex_string() {
        ++pos_;  // '<'
        std::string out;
        int hi = -1;
        while (pos_ < data_.size()) {
            char c = data_[pos_++];
            if (c == '>') {
                if (hi >= 0) out += static_cast<char>(hi * 16);
                return out;
            }
            if (is_pdf_space(c)) continue;
            int v = hex_value(c);
            if (v < 0) malformed("bad hex string");
            if (hi < 0) {
                hi = v;
            } else {
                out += static_cast<char>(hi * 16 + v);
                hi = -1;
            }
        }
        malformed("unterminated hex string");
    }

    std::string_view data_;
    std::size_t pos_;
};

/// Parses a direct object, including `num gen R` references, starting at `first`.
inline Object parse_object(Lexer& lx, Token first, int depth = 0) {
    if (depth > 64) malformed("nesting too deep");
    switch (first.kind) {
        case TokKind::Int: {
            // Look ahead for "gen R".
            std::size_t save = lx.pos();
            Token gen = lx.next();
            if (gen.kind == TokKind::Int) {
                Token r = lx.next();
                if (r.kind == TokKind::Keyword && r.text == "R") return Object{Ref{first.ival, gen.ival}};
            }
            lx.seek(save);
            return Object{first.ival};
        }
        case TokKind::Real: return Object{first.rval};
        case TokKind::String: return Object{String{std::move(first.text)}};
        case TokKind::Name: return Object{Name{std::move(first.text)}};
        case TokKind::ArrayOpen: {
            Array arr;
            for (;;) {
                Token t = lx.next();
                if (t.kind == TokKind::ArrayClose) break;
                if (t.kind == TokKind::End) malformed("unterminated array");
                arr.push_back(parse_object(lx, std::move(t), depth + 1));
            }
            return Object{std::move(arr)};
        }
        case TokKind::DictOpen: {
            Dict dict;
            for (;;) {
                Token k = lx.next();
                if (k.kind == TokKind::DictClose) break;
                if (k.kind != TokKind::Name) malformed("dictionary key is not a name");
                Token v = lx.next();
                if (v.kind == TokKind::End || v.kind == TokKind::DictClose) malformed("dictionary value missing");
                dict.emplace_back(std::move(k.text), parse_object(lx, std::move(v), depth + 1));
            }
            return Object{std::move(dict)};
        }
        case TokKind::Keyword:
            if (first.text == "true") return Object{true};
            if (first.text == "false") return Object{false};
            if (first.text == "null") return Object{Null{}};
            malformed("unexpected keyword '" + first.text + "'");
        default: malformed("unexpected token");
    }
}

inline std::string inflate(std::string_view in) {
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) malformed("zlib init failed");
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
    zs.avail_in = static_cast<uInt>(in.size());
    std::string out;
    char buf[16384];
    int rc = Z_OK;
    while (rc == Z_OK) {
        zs.next_out = reinterpret_cast<Bytef*>(buf);
        zs.avail_out = sizeof buf;
        rc = ::inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            malformed("corrupt Flate stream");
        }
        out.append(buf, sizeof buf - zs.avail_out);
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) break;  // truncated but usable
    }
    inflateEnd(&zs);
    return out;
}

// WinAnsiEncoding for 0x80..0x9F; the rest of the byte range maps to Latin-1.
inline constexpr std::uint16_t kWinAnsiHigh[32] = {
    0x20AC, 0x0020, 0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021, 0x02C6, 0x2030, 0x0160,
    0x2039, 0x0152, 0x0020, 0x017D, 0x0020, 0x0020, 0x2018, 0x2019, 0x201C, 0x201D, 0x2022,
    0x2013, 0x2014, 0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0x0020, 0x017E, 0x0178};

inline void append_winansi(std::string& out, std::string_view bytes) {
    for (char ch : bytes) {
        auto b = static_cast<unsigned char>(ch);
        if (b == '\t' || b == '\n' || b == '\r') {
            out += ' ';
        } else if (b < 0x20 || b == 0x7F) {
            out += ' ';
        } else if (b >= 0x80 && b <= 0x9F) {
            text::append_utf8(out, kWinAnsiHigh[b - 0x80]);
        } else {
            text::append_utf8(out, b);
        }
    }
}

/// Info-dictionary strings: UTF-16BE with BOM, otherwise treated as Latin-1.
inline std::string decode_text_string(std::string_view bytes) {
    std::string out;
    if (bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0xFE &&
        static_cast<unsigned char>(bytes[1]) == 0xFF) {
        for (std::size_t i = 2; i + 1 < bytes.size(); i += 2) {
            std::uint32_t u = (static_cast<unsigned char>(bytes[i]) << 8) | static_cast<unsigned char>(bytes[i + 1]);
            if (u >= 0xD800 && u <= 0xDBFF && i + 3 < bytes.size()) {
                std::uint32_t lo = (static_cast<unsigned char>(bytes[i + 2]) << 8) |
                                   static_cast<unsigned char>(bytes[i + 3]);
                if (lo >= 0xDC00 && lo <= 0xDFFF) {
                    text::append_utf8(out, 0x10000 + ((u - 0xD800) << 10) + (lo - 0xDC00));
                    i += 2;
                    continue;
                }
            }
            if (u >= 0xD800 && u <= 0xDFFF) u = 0xFFFD;
            text::append_utf8(out, u);
        }
        return out;
    }
    for (char ch : bytes) text::append_utf8(out, static_cast<unsigned char>(ch));
    return out;
}

}  // namespace detail

/// Parsed file structure: the object table plus the trailer.
class Document {
public:
    static Document parse(std::string_view bytes) {
        Document doc;
        doc.load(bytes);
        return doc;
    }

    const Dict& trailer() const noexcept { return trailer_; }

    /// Follows references (bounded) until a direct object is reached; unknown refs resolve to null.
    const Object& resolve(const Object& obj) const {
        const Object* cur = &obj;
        for (int hops = 0; hops < 32; ++hops) {
            const Ref* r = cur->as<Ref>();
            if (!r) return *cur;
            auto it = objects_.find(r->num);
            if (it == objects_.end()) return null_;
            cur = &it->second;
        }
        detail::malformed("reference chain too long");
    }

    const Dict* resolve_dict(const Object* obj) const {
        if (!obj) return nullptr;
        const Object& o = resolve(*obj);
        if (const Dict* d = o.as<Dict>()) return d;
        if (const auto* s = o.as<std::shared_ptr<Stream>>()) return &(*s)->dict;
        return nullptr;
    }

    bool encrypted() const noexcept { return dict_get(trailer_, "Encrypt") != nullptr; }

    /// Leaf page dictionaries in page-tree order, with inherited /Resources resolved.
    struct Page {
        const Dict* dict = nullptr;
        const Dict* resources = nullptr;
    };

    std::vector<Page> pages() const {
        const Dict* root = resolve_dict(dict_get(trailer_, "Root"));
        if (!root) detail::malformed("missing document catalog");
        const Dict* tree = resolve_dict(dict_get(*root, "Pages"));
        if (!tree) detail::malformed("missing page tree");
        std::vector<Page> out;
        std::set<const Dict*> seen;
        collect_pages(*tree, nullptr, out, seen, 0);
        return out;
    }

    /// Decoded bytes of a stream object.
    std::string stream_data(const Stream& s) const {
        const Object* filter = dict_get(s.dict, "Filter");
        std::vector<std::string> filters;
        if (filter) {
            const Object& f = resolve(*filter);
            if (const Name* n = f.as<Name>()) {
                filters.push_back(n->value);
            } else if (const Array* a = f.as<Array>()) {
                for (const auto& e : *a) {
                    const Name* n2 = resolve(e).as<Name>();
                    if (!n2) detail::malformed("filter entry is not a name");
                    filters.push_back(n2->value);
                }
            } else if (!f.is_null()) {
                detail::malformed("bad /Filter");
            }
        }
        if (filters.size() > 1) detail::unsupported("chained stream filters");
        if (filters.empty()) return s.raw;
        if (filters[0] != "FlateDecode" && filters[0] != "Fl") detail::unsupported("stream filter /" + filters[0]);
        if (const Dict* parms = resolve_dict(dict_get(s.dict, "DecodeParms"))) {
            if (const Object* pred = dict_get(*parms, "Predictor")) {
                const auto* v = resolve(*pred).as<std::int64_t>();
                if (v && *v > 1) detail::unsupported("Flate predictors");
            }
        }
        return detail::inflate(s.raw);
    }

private:
    void collect_pages(const Dict& node, const Dict* inherited, std::vector<Page>& out,
                       std::set<const Dict*>& seen, int depth) const {
        if (depth > 64 || !seen.insert(&node).second) detail::malformed("cyclic page tree");
        const Dict* res = resolve_dict(dict_get(node, "Resources"));
        if (!res) res = inherited;
        const Object* type = dict_get(node, "Type");
        const Name* tname = type ? resolve(*type).as<Name>() : nullptr;
        const Object* kids = dict_get(node, "Kids");
        bool is_leaf = tname ? tname->value == "Page" : kids == nullptr;
        if (is_leaf) {
            out.push_back(Page{&node, res});
            return;
        }
        if (!kids) detail::malformed("page tree node without /Kids");
        const Array* arr = resolve(*kids).as<Array>();
        if (!arr) detail::malformed("/Kids is not an array");
        for (const auto& kid : *arr) {
            const Dict* kd = resolve_dict(&kid);
            if (!kd) detail::malformed("page tree kid is not a dictionary");
            collect_pages(*kd, res, out, seen, depth + 1);
        }
    }

    void load(std::string_view bytes) {
        std::size_t header = bytes.substr(0, 1024).find("%PDF-");
        if (header == std::string_view::npos) detail::malformed("missing %PDF- header");
        detail::Lexer lx(bytes, header);
        bool have_trailer = false;
        for (;;) {
            detail::Token t = lx.next();
            if (t.kind == detail::TokKind::End) break;
            if (t.kind == detail::TokKind::Int) {
                detail::Token gen = lx.next();
                detail::Token kw = lx.next();
                if (gen.kind != detail::TokKind::Int || kw.kind != detail::TokKind::Keyword || kw.text != "obj") {
                    detail::malformed("expected 'obj'");
                }
                read_indirect(lx, t.ival);
            } else if (t.kind == detail::TokKind::Keyword && t.text == "xref") {
                skip_xref(lx);
            } else if (t.kind == detail::TokKind::Keyword && t.text == "trailer") {
                detail::Token d = lx.next();
                if (d.kind != detail::TokKind::DictOpen) detail::malformed("trailer is not a dictionary");
                Object o = detail::parse_object(lx, std::move(d));
                // Incremental updates append trailers; later keys win.
                for (auto& [k, v] : *o.as<Dict>()) {
                    bool replaced = false;
                    for (auto& [k2, v2] : trailer_) {
                        if (k2 == k) { v2 = v; replaced = true; }
                    }
                    if (!replaced) trailer_.emplace_back(k, v);
                }
                have_trailer = true;
            } else if (t.kind == detail::TokKind::Keyword && t.text == "startxref") {
                if (lx.next().kind != detail::TokKind::Int) detail::malformed("startxref without offset");
            } else {
                detail::malformed("unexpected top-level token");
            }
        }
        if (!have_trailer) {
            if (saw_xref_stream_) detail::unsupported("cross-reference streams");
            detail::malformed("missing trailer");
        }
        if (saw_object_stream_) detail::unsupported("object streams");
    }

    void skip_xref(detail::Lexer& lx) {
        // Subsections of "first count" followed by count entries "offset gen n|f".
        for (;;) {
            std::size_t save = lx.pos();
            detail::Token a = lx.next();
            if (a.kind != detail::TokKind::Int) {
                lx.seek(save);
                return;
            }
            detail::Token b = lx.next();
            if (b.kind != detail::TokKind::Int) detail::malformed("bad xref subsection");
            for (std::int64_t i = 0; i < b.ival; ++i) {
                detail::Token off = lx.next(), g = lx.next(), f = lx.next();
                if (off.kind != detail::TokKind::Int || g.kind != detail::TokKind::Int ||
                    f.kind != detail::TokKind::Keyword || (f.text != "n" && f.text != "f")) {
                    detail::malformed("bad xref entry");
                }
            }
        }
    }

    void read_indirect(detail::Lexer& lx, std::int64_t num) {
        detail::Token first = lx.next();
        if (first.kind == detail::TokKind::Keyword && first.text == "endobj") {
            objects_[num] = Object{Null{}};
            return;
        }
        Object obj = detail::parse_object(lx, std::move(first));
        std::size_t save = lx.pos();
        detail::Token kw = lx.next();
        if (kw.kind == detail::TokKind::Keyword && kw.text == "stream") {
            const Dict* d = obj.as<Dict>();
            if (!d) detail::malformed("stream without dictionary");
            auto stream = std::make_shared<Stream>();
            stream->dict = *d;
            std::string_view data = lx.data();
            std::size_t start = lx.pos();
            if (start < data.size() && data[start] == '\r') ++start;
            if (start < data.size() && data[start] == '\n') ++start;
            std::size_t end = std::string_view::npos;
            if (const Object* len = dict_get(*d, "Length")) {
                if (const auto* n = len->as<std::int64_t>()) {
                    std::size_t cand = start + static_cast<std::size_t>(*n);
                    if (*n >= 0 && cand <= data.size()) {
                        detail::Lexer probe(data, cand);
                        detail::Token e = probe.next();
                        if (e.kind == detail::TokKind::Keyword && e.text == "endstream") end = cand;
                    }
                }
            }
            if (end == std::string_view::npos) {
                std::size_t es = data.find("endstream", start);
                if (es == std::string_view::npos) detail::malformed("unterminated stream");
                end = es;
                if (end > start && data[end - 1] == '\n') --end;
                if (end > start && data[end - 1] == '\r') --end;
            }
            stream->raw = std::string(data.substr(start, end - start));
            std::size_t after = data.find("endstream", end);
            lx.seek(after + 9);
            if (const Object* type = dict_get(*d, "Type")) {
                if (const Name* n = type->as<Name>()) {
                    if (n->value == "ObjStm") saw_object_stream_ = true;
                    if (n->value == "XRef") saw_xref_stream_ = true;
                }
            }
            obj = Object{std::move(stream)};
            save = lx.pos();
            kw = lx.next();
        }
        if (!(kw.kind == detail::TokKind::Keyword && kw.text == "endobj")) {
            // Tolerate a missing endobj if another object or section follows.
            lx.seek(save);
        }
        objects_[num] = std::move(obj);
    }

    std::map<std::int64_t, Object> objects_;
    Dict trailer_;
    Object null_{};
    bool saw_object_stream_ = false;
    bool saw_xref_stream_ = false;
};

struct PdfInfo {
    std::optional<std::string> title;
    std::optional<std::string> author;
    std::optional<std::string> created_at;
};

struct PdfText {
    std::vector<std::string> pages;
    PdfInfo info;
};

namespace detail {

/// Runs one page's content stream, collecting shown text.
/// Lines break on T*, ', ", on Td/TD/Tm with vertical movement and at ET.
class ContentInterpreter {
public:
    ContentInterpreter(const Document& doc, const Dict* resources) : doc_(doc), resources_(resources) {}

    void run(std::string_view content) {
        Lexer lx(content);
        std::vector<Object> operands;
        for (;;) {
            Token t = lx.next();
            if (t.kind == TokKind::End) break;
            if (t.kind == TokKind::Keyword) {
                if (t.text == "BI") {
                    skip_inline_image(lx);
                    operands.clear();
                    continue;
                }
                if (t.text == "true" || t.text == "false" || t.text == "null") {
                    operands.push_back(parse_object(lx, std::move(t)));
                    continue;
                }
                apply(t.text, operands);
                operands.clear();
                continue;
            }
            if (t.kind == TokKind::Int) {
                // Content streams never contain references; avoid the "n g R" lookahead.
                operands.push_back(Object{t.ival});
                continue;
            }
            if (t.kind == TokKind::ArrayClose || t.kind == TokKind::DictClose) malformed("unbalanced content stream");
            operands.push_back(parse_object(lx, std::move(t)));
        }
    }

    std::string text() const {
        std::string out;
        for (const auto& line : lines_) {
            std::string_view l = text::trim(line);
            if (l.empty()) continue;
            if (!out.empty()) out += '\n';
            out += l;
        }
        std::string_view cur = text::trim(current_);
        if (!cur.empty()) {
            if (!out.empty()) out += '\n';
            out += cur;
        }
        return out;
    }

    std::size_t show_ops() const noexcept { return show_ops_; }

private:
    void newline() {
        lines_.push_back(std::move(current_));
        current_.clear();
    }

    void show(const std::string& bytes) {
        check_font();
        ++show_ops_;
        append_winansi(current_, bytes);
    }

    void check_font() {
        if (font_checked_) return;
        font_checked_ = true;
        if (!resources_ || font_name_.empty()) return;
        const Dict* fonts = doc_.resolve_dict(dict_get(*resources_, "Font"));
        if (!fonts) return;
        const Dict* font = doc_.resolve_dict(dict_get(*fonts, font_name_));
        if (!font) return;
        if (const Object* st = dict_get(*font, "Subtype")) {
            const Name* n = doc_.resolve(*st).as<Name>();
            if (n && (n->value == "Type0" || n->value == "Type3")) {
                unsupported("composite or Type3 font /" + font_name_);
            }
        }
    }

    static double num(const Object& o) {
        if (const auto* i = o.as<std::int64_t>()) return static_cast<double>(*i);
        if (const auto* d = o.as<double>()) return *d;
        malformed("numeric operand expected");
    }

    void apply(const std::string& op, const std::vector<Object>& args) {
        if (op == "Tj") {
            if (args.empty() || !args.back().as<String>()) malformed("Tj without string");
            show(args.back().as<String>()->bytes);
        } else if (op == "'") {
            if (args.empty() || !args.back().as<String>()) malformed("' without string");
            newline();
            show(args.back().as<String>()->bytes);
        } else if (op == "\"") {
            if (args.size() < 3 || !args.back().as<String>()) malformed("\" without string");
            newline();
            show(args.back().as<String>()->bytes);
        } else if (op == "TJ") {
            if (args.empty() || !args.back().as<Array>()) malformed("TJ without array");
            check_font();
            ++show_ops_;
            for (const auto& e : *args.back().as<Array>()) {
                if (const String* s = e.as<String>()) {
                    append_winansi(current_, s->bytes);
                } else if (num(e) <= -200.0) {
                    // A large negative adjustment is an inter-word gap.
                    if (!current_.empty() && current_.back() != ' ') current_ += ' ';
                }
            }
        } else if (op == "T*") {
            newline();
        } else if (op == "Td" || op == "TD") {
            if (args.size() < 2) malformed(op + " needs two operands");
            if (num(args[args.size() - 1]) != 0.0) {
                newline();
            } else if (num(args[args.size() - 2]) != 0.0 && !current_.empty() && current_.back() != ' ') {
                current_ += ' ';
            }
        } else if (op == "Tm") {
            if (!current_.empty()) newline();
        } else if (op == "ET") {
            newline();
        } else if (op == "Tf") {
            if (args.size() >= 2) {
                if (const Name* n = args[args.size() - 2].as<Name>()) {
                    font_name_ = n->value;
                    font_checked_ = false;
                }
            }
        }
    }

    static void skip_inline_image(Lexer& lx) {
        std::string_view d = lx.data();
        std::size_t p = lx.pos();
        // Dictionary part ends at the ID keyword; binary data runs to whitespace + EI.
        std::size_t id = d.find("ID", p);
        if (id == std::string_view::npos) malformed("inline image without ID");
        std::size_t q = id + 3;
        while (q + 2 <= d.size()) {
            std::size_t ei = d.find("EI", q);
            if (ei == std::string_view::npos) malformed("inline image without EI");
            bool before = ei > 0 && is_pdf_space(d[ei - 1]);
            bool after = ei + 2 == d.size() || is_pdf_space(d[ei + 2]);
            if (before && after) {
                lx.seek(ei + 2);
                return;
            }
            q = ei + 2;
        }
        malformed("inline image without EI");
    }

    const Document& doc_;
    const Dict* resources_;
    std::vector<std::string> lines_;
    std::string current_;
    std::string font_name_;
    bool font_checked_ = false;
    std::size_t show_ops_ = 0;
};

}  // namespace detail

inline PdfInfo read_info(const Document& doc) {
    PdfInfo info;
    const Dict* d = doc.resolve_dict(dict_get(doc.trailer(), "Info"));
    if (!d) return info;
    auto field = [&](std::string_view key) -> std::optional<std::string> {
        const Object* o = dict_get(*d, key);
        if (!o) return std::nullopt;
        const String* s = doc.resolve(*o).as<String>();
        if (!s) return std::nullopt;
        return detail::decode_text_string(s->bytes);
    };
    info.title = field("Title");
    info.author = field("Author");
    info.created_at = field("CreationDate");
    return info;
}

/// Page count and info dictionary only; content streams are not decoded.
inline std::pair<std::size_t, PdfInfo> read_metadata(std::string_view bytes) {
    Document doc = Document::parse(bytes);
    if (doc.encrypted()) detail::unsupported("encrypted document");
    return {doc.pages().size(), read_info(doc)};
}

/// Extracts per-page text. A document without a single text-showing operator
/// (scanned or image-only) is rejected rather than returned as empty pages.
inline PdfText extract(std::string_view bytes) {
    Document doc = Document::parse(bytes);
    if (doc.encrypted()) detail::unsupported("encrypted document");
    PdfText out;
    out.info = read_info(doc);
    std::size_t show_ops = 0;
    for (const auto& page : doc.pages()) {
        std::string content;
        if (const Object* c = dict_get(*page.dict, "Contents")) {
            const Object& co = doc.resolve(*c);
            std::vector<const Object*> parts;
            if (const Array* arr = co.as<Array>()) {
                for (const auto& e : *arr) parts.push_back(&doc.resolve(e));
            } else if (!co.is_null()) {
                parts.push_back(&co);
            }
            for (const Object* p : parts) {
                const auto* s = p->as<std::shared_ptr<Stream>>();
                if (!s) detail::malformed("page content is not a stream");
                content += doc.stream_data(**s);
                content += '\n';
            }
        }
        detail::ContentInterpreter interp(doc, page.resources);
        interp.run(content);
        show_ops += interp.show_ops();
        out.pages.push_back(interp.text());
    }
    if (out.pages.empty()) detail::malformed("document has no pages");
    if (show_ops == 0) detail::unsupported("no text-showing operators (image-only or scanned document)");
    return out;
}

}  // namespace ragforge::pdf
