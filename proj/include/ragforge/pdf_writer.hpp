#pragma once

// Minimal PDF writer emitting files inside the extractor's supported subset.
// Used to generate test fixtures and sample corpora instead of checking in binary blobs.

#include <zlib.h>

#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ragforge::pdf {

struct WriterPage {
    std::vector<std::string> lines;  ///< Latin-1 bytes, one Tj per line.
    bool image_only = false;         ///< Draw an image XObject and no text.
    bool use_tj_array = false;       ///< Emit words through a single TJ with gap adjustments.
};

struct WriterOptions {
    std::optional<std::string> title;
    std::optional<std::string> author;
    std::optional<std::string> creation_date;
    bool compress = false;
    bool encrypt_marker = false;  ///< Adds an /Encrypt trailer entry (content stays plain).
    std::string filter_override;  ///< Non-empty: declare this /Filter on content streams verbatim.
};

namespace detail {

inline std::string escape_pdf_string(std::string_view s) {
    std::string out = "(";
    for (char c : s) {
        if (c == '(' || c == ')' || c == '\\') out += '\\';
        out += c;
    }
    out += ')';
    return out;
}

inline std::string deflate(std::string_view in) {
    uLongf cap = compressBound(static_cast<uLong>(in.size()));
    std::string out(cap, '\0');
    if (compress2(reinterpret_cast<Bytef*>(out.data()), &cap, reinterpret_cast<const Bytef*>(in.data()),
                  static_cast<uLong>(in.size()), Z_BEST_COMPRESSION) != Z_OK) {
        return {};
    }
    out.resize(cap);
    return out;
}

}  // namespace detail

inline std::string write_pdf(const std::vector<WriterPage>& pages, const WriterOptions& opts = {}) {
    std::vector<std::string> objs;  // object i+1 body
    auto add = [&](std::string body) {
        objs.push_back(std::move(body));
        return static_cast<int>(objs.size());
    };
    auto stream_obj = [&](const std::string& content, const std::string& extra) {
        std::string data = content;
        std::string dict = extra;
        if (!opts.filter_override.empty()) {
            dict += " /Filter " + opts.filter_override;
        } else if (opts.compress) {
            data = detail::deflate(content);
            dict += " /Filter /FlateDecode";
        }
        return "<< /Length " + std::to_string(data.size()) + dict + " >>\nstream\n" + data + "\nendstream";
    };

    int catalog = add("");
    int tree = add("");
    int font = add("<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica /Encoding /WinAnsiEncoding >>");
    std::vector<int> page_ids;
    for (const auto& page : pages) {
        std::string content;
        std::string resources = "<< /Font << /F1 " + std::to_string(font) + " 0 R >>";
        if (page.image_only) {
            int img = add(stream_obj(std::string(4, '\x7f'),
                                     " /Type /XObject /Subtype /Image /Width 2 /Height 2 "
                                     "/ColorSpace /DeviceGray /BitsPerComponent 8"));
            resources += " /XObject << /Im1 " + std::to_string(img) + " 0 R >>";
            content = "q 200 0 0 200 100 400 cm /Im1 Do Q\n";
        } else {
            content = "BT\n/F1 12 Tf\n72 720 Td\n14 TL\n";
            for (std::size_t i = 0; i < page.lines.size(); ++i) {
                if (i) content += "T*\n";
                if (page.use_tj_array) {
                    content += "[";
                    std::size_t start = 0;
                    const std::string& l = page.lines[i];
                    while (start <= l.size()) {
                        std::size_t sp = l.find(' ', start);
                        std::string word = l.substr(start, sp == std::string::npos ? std::string::npos : sp - start);
                        content += detail::escape_pdf_string(word);
                        if (sp == std::string::npos) break;
                        content += " -250 ";
                        start = sp + 1;
                    }
                    content += "] TJ\n";
                } else {
                    content += detail::escape_pdf_string(page.lines[i]) + " Tj\n";
                }
            }
            content += "ET\n";
        }
        resources += " >>";
        int cs = add(stream_obj(content, ""));
        int pg = add("<< /Type /Page /Parent " + std::to_string(tree) + " 0 R /MediaBox [0 0 612 792] /Resources " +
                     resources + " /Contents " + std::to_string(cs) + " 0 R >>");
        page_ids.push_back(pg);
    }
    objs[catalog - 1] = "<< /Type /Catalog /Pages " + std::to_string(tree) + " 0 R >>";
    std::string kids;
    for (int id : page_ids) kids += std::to_string(id) + " 0 R ";
    objs[tree - 1] = "<< /Type /Pages /Kids [" + kids + "] /Count " + std::to_string(page_ids.size()) + " >>";

    int info = 0;
    if (opts.title || opts.author || opts.creation_date) {
        std::string d = "<<";
        if (opts.title) d += " /Title " + detail::escape_pdf_string(*opts.title);
        if (opts.author) d += " /Author " + detail::escape_pdf_string(*opts.author);
        if (opts.creation_date) d += " /CreationDate " + detail::escape_pdf_string(*opts.creation_date);
        info = add(d + " >>");
    }
    int encrypt = 0;
    if (opts.encrypt_marker) encrypt = add("<< /Filter /Standard /V 1 /R 2 /Length 40 >>");

    std::string out = "%PDF-1.4\n%\xE2\xE3\xCF\xD3\n";
    std::vector<std::size_t> offsets;
    for (std::size_t i = 0; i < objs.size(); ++i) {
        offsets.push_back(out.size());
        out += std::to_string(i + 1) + " 0 obj\n" + objs[i] + "\nendobj\n";
    }
    std::size_t xref = out.size();
    out += "xref\n0 " + std::to_string(objs.size() + 1) + "\n0000000000 65535 f \n";
    for (std::size_t off : offsets) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%010zu 00000 n \n", off);
        out += buf;
    }
    out += "trailer\n<< /Size " + std::to_string(objs.size() + 1) + " /Root " + std::to_string(catalog) + " 0 R";
    if (info) out += " /Info " + std::to_string(info) + " 0 R";
    if (encrypt) out += " /Encrypt " + std::to_string(encrypt) + " 0 R";
    out += " >>\nstartxref\n" + std::to_string(xref) + "\n%%EOF\n";
    return out;
}

/// Convenience: one text line per page.
inline std::string write_text_pdf(const std::vector<std::string>& page_texts, const WriterOptions& opts = {}) {
    std::vector<WriterPage> pages;
    for (const auto& t : page_texts) pages.push_back(WriterPage{{t}});
    return write_pdf(pages, opts);
}

}  // namespace ragforge::pdf
