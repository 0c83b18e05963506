#include "groupsearch/textproc.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>

namespace groupsearch {

namespace {

// ---------------------------------------------------------------------------
// UTF-8 <-> code points
// ---------------------------------------------------------------------------

// Decodes one code point starting at s[i]; advances i. Invalid sequences
// decode to U+FFFD and consume one byte, so normalization stays total.
char32_t decode_utf8(const std::string& s, std::size_t& i) {
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    unsigned char b0 = byte(i);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    auto cont = [&](std::size_t k) { return k < s.size() && (byte(k) & 0xC0) == 0x80; };
    if ((b0 & 0xE0) == 0xC0 && cont(i + 1)) {
        char32_t cp = ((b0 & 0x1Fu) << 6) | (byte(i + 1) & 0x3Fu);
        i += 2;
        return cp < 0x80 ? 0xFFFD : cp;
    }
    if ((b0 & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2)) {
        char32_t cp = ((b0 & 0x0Fu) << 12) | ((byte(i + 1) & 0x3Fu) << 6) | (byte(i + 2) & 0x3Fu);
        i += 3;
        return cp < 0x800 ? 0xFFFD : cp;
    }
    if ((b0 & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
        char32_t cp = ((b0 & 0x07u) << 18) | ((byte(i + 1) & 0x3Fu) << 12) |
                      ((byte(i + 2) & 0x3Fu) << 6) | (byte(i + 3) & 0x3Fu);
        i += 4;
        return (cp < 0x10000 || cp > 0x10FFFF) ? 0xFFFD : cp;
    }
    ++i;
    return 0xFFFD;
}

void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// ---------------------------------------------------------------------------
// Canonical composition (base letter + combining mark -> precomposed)
// ---------------------------------------------------------------------------

// Covers the Latin-1 composed outcomes for the common combining marks. Marks
// with no composition for their base are kept as-is, which keeps the pass
// idempotent.
char32_t compose(char32_t base, char32_t mark) {
    struct Entry {
        char32_t mark;
        const char* bases;     // ASCII bases, matched positionally
        const char32_t* outs;  // composed code points
    };
    static const char32_t grave[] = {0xC0, 0xC8, 0xCC, 0xD2, 0xD9, 0xE0, 0xE8, 0xEC, 0xF2, 0xF9};
    static const char32_t acute[] = {0xC1, 0xC9, 0xCD, 0xD3, 0xDA, 0xDD,
                                     0xE1, 0xE9, 0xED, 0xF3, 0xFA, 0xFD};
    static const char32_t circ[] = {0xC2, 0xCA, 0xCE, 0xD4, 0xDB, 0xE2, 0xEA, 0xEE, 0xF4, 0xFB};
    static const char32_t tilde[] = {0xC3, 0xD1, 0xD5, 0xE3, 0xF1, 0xF5};
    static const char32_t diaer[] = {0xC4, 0xCB, 0xCF, 0xD6, 0xDC,
                                     0xE4, 0xEB, 0xEF, 0xF6, 0xFC, 0xFF};
    static const char32_t ring[] = {0xC5, 0xE5};
    static const char32_t cedil[] = {0xC7, 0xE7};
    static const Entry table[] = {
        {0x0300, "AEIOUaeiou", grave},  {0x0301, "AEIOUYaeiouy", acute},
        {0x0302, "AEIOUaeiou", circ},   {0x0303, "ANOano", tilde},
        {0x0308, "AEIOUaeiouy", diaer}, {0x030A, "Aa", ring},
        {0x0327, "Cc", cedil},
    };
    for (const auto& e : table) {
        if (e.mark != mark) continue;
        for (const char* p = e.bases; *p; ++p) {
            if (static_cast<char32_t>(*p) == base) return e.outs[p - e.bases];
        }
    }
    return 0;  // no composition
}

// ---------------------------------------------------------------------------
// Simple case folding: ASCII, Latin-1, Latin Extended-A, Greek, Cyrillic.
// Locale-independent by construction.
// ---------------------------------------------------------------------------

char32_t fold_case(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    if (cp >= 0x100 && cp <= 0x137) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x14A && cp <= 0x177) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp == 0x178) return 0xFF;
    if (cp >= 0x179 && cp <= 0x17E) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
    if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
    if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
    return cp;
}

bool is_space_cp(char32_t cp) {
    switch (cp) {
        case 0x09:
        case 0x0A:
        case 0x0B:
        case 0x0C:
        case 0x0D:
        case 0x20:
        case 0x85:
        case 0xA0:
        case 0x1680:
        case 0x2028:
        case 0x2029:
        case 0x202F:
        case 0x205F:
        case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_punct_cp(char32_t cp) {
    if (cp < 0x80) {
        bool alnum = (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z');
        return cp >= 0x21 && cp <= 0x7E && !alnum;  // after folding; '@', '#', etc.
    }
    if (cp >= 0xA1 && cp <= 0xBF) return true;  // Latin-1 punctuation and symbols
    if (cp == 0xD7 || cp == 0xF7) return true;
    if (cp >= 0x2010 && cp <= 0x2027) return true;  // dashes, quotes, bullets
    if (cp >= 0x2030 && cp <= 0x205E) return true;
    if (cp >= 0x3001 && cp <= 0x303F) return true;  // CJK punctuation
    if (cp == 0xFFFD) return true;
    return false;
}

}  // namespace

std::string normalize(const std::string& text) {
    // Decode, compose combining marks, then fold.
    std::vector<char32_t> cps;
    cps.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) cps.push_back(decode_utf8(text, i));

    std::vector<char32_t> composed;
    composed.reserve(cps.size());
    for (char32_t cp : cps) {
        if (!composed.empty() && cp >= 0x0300 && cp <= 0x036F) {
            if (char32_t c = compose(composed.back(), cp); c != 0) {
                composed.back() = c;
                continue;
            }
        }
        composed.push_back(cp);
    }

    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char32_t cp : composed) {
        cp = fold_case(cp);
        if (is_space_cp(cp) || is_punct_cp(cp)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        encode_utf8(cp, out);
    }
    return out;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::string norm = normalize(text);
    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (start < norm.size()) {
        std::size_t end = norm.find(' ', start);
        if (end == std::string::npos) end = norm.size();
        if (end > start) tokens.push_back(norm.substr(start, end - start));
        start = end + 1;
    }
    return tokens;
}

ProcessedText process_text(const std::string& raw) {
    ProcessedText pt;
    pt.original = raw;
    pt.normalized = normalize(raw);
    std::size_t start = 0;
    while (start < pt.normalized.size()) {
        std::size_t end = pt.normalized.find(' ', start);
        if (end == std::string::npos) end = pt.normalized.size();
        if (end > start) pt.tokens.push_back(pt.normalized.substr(start, end - start));
        start = end + 1;
    }
    return pt;
}

std::vector<std::string> ProcessedQuery::unique_terms() const {
    std::set<std::string> terms(base.tokens.begin(), base.tokens.end());
    for (const auto& rw : rewrites) terms.insert(rw.tokens.begin(), rw.tokens.end());
    return {terms.begin(), terms.end()};
}

StopwordList::StopwordList(std::vector<std::string> words) {
    for (auto& w : words) {
        std::string n = normalize(w);
        if (!n.empty()) words_.insert(std::move(n));
    }
}

const StopwordList& StopwordList::builtin() {
    // Fixed 50-word list; data/stopwords.txt ships the same terms.
    static const StopwordList list(std::vector<std::string>{
        "a",    "an",   "and",  "are",  "as",    "at",   "be",   "but",  "by",   "can",
        "did",  "do",   "for",  "from", "had",   "has",  "have", "he",   "her",  "his",
        "how",  "i",    "in",   "is",   "it",    "its",  "my",   "no",   "not",  "of",
        "on",   "or",   "our",  "she",  "so",    "that", "the",  "their", "them", "then",
        "there", "they", "this", "to",  "was",   "we",   "were", "what", "when", "with"});
    return list;
}

StopwordList StopwordList::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open stopword list: " + path);
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) words.push_back(line);
    }
    return StopwordList(std::move(words));
}

ProcessedQuery preprocess_query(const std::string& raw, const StopwordList& stopwords) {
    ProcessedQuery q;
    q.base = process_text(raw);
    if (q.base.tokens.empty()) throw Error(ErrorCode::EmptyQuery, "query is empty after normalization");

    std::vector<std::string> stripped;
    for (const auto& t : q.base.tokens) {
        if (!stopwords.contains(t)) stripped.push_back(t);
    }
    if (!stripped.empty() && stripped != q.base.tokens) {
        ProcessedText rw;
        rw.original = raw;
        rw.tokens = stripped;
        for (std::size_t i = 0; i < stripped.size(); ++i) {
            if (i) rw.normalized.push_back(' ');
            rw.normalized += stripped[i];
        }
        q.rewrites.push_back(std::move(rw));
    }
    return q;
}

}  // namespace groupsearch
