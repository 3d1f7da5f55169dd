#ifndef GADFA_TOKENIZE_HPP
#define GADFA_TOKENIZE_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gadfa/util.hpp"

namespace gadfa {

enum class TokenMode { word, character, mixed };

struct TokenizerConfig {
    TokenMode mode = TokenMode::mixed;
    bool lowercase = false;
};

inline TokenMode token_mode_from_string(const std::string& s) {
    if (s == "word") return TokenMode::word;
    if (s == "char") return TokenMode::character;
    if (s == "mixed") return TokenMode::mixed;
    throw ValidationError("unknown tokenizer mode: '" + s + "'");
}

inline std::string to_string(TokenMode m) {
    switch (m) {
        case TokenMode::word: return "word";
        case TokenMode::character: return "char";
        default: return "mixed";
    }
}

namespace detail {

// Decodes one UTF-8 code point at position i, advancing i.
// Invalid byte sequences are a hard error: silently replacing them would
// corrupt per-character CJK tokenization downstream.
inline char32_t decode_utf8(std::string_view s, std::size_t& i) {
    const auto bad = [&] { throw ValidationError("invalid UTF-8 at byte offset " + std::to_string(i)); };
    const unsigned char b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len;
    char32_t cp;
    if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1Fu; }
    else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0Fu; }
    else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07u; }
    else { bad(); return 0; }
    if (i + static_cast<std::size_t>(len) > s.size()) bad();
    for (int k = 1; k < len; ++k) {
        const unsigned char b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
        if ((b & 0xC0) != 0x80) bad();
        cp = (cp << 6) | (b & 0x3Fu);
    }
    // overlong encodings and surrogates
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) bad();
    if (cp >= 0xD800 && cp <= 0xDFFF) bad();
    if (cp > 0x10FFFF) bad();
    i += static_cast<std::size_t>(len);
    return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
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

inline bool is_space_cp(char32_t c) {
    return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
           c == 0x00A0 || c == 0x3000 || (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029;
}

inline bool is_cjk_cp(char32_t c) {
    return (c >= 0x4E00 && c <= 0x9FFF) ||    // CJK Unified Ideographs
           (c >= 0x3400 && c <= 0x4DBF) ||    // Extension A
           (c >= 0x20000 && c <= 0x2CEAF) ||  // Extensions B..F
           (c >= 0xF900 && c <= 0xFAFF) ||    // Compatibility Ideographs
           (c >= 0x3040 && c <= 0x30FF) ||    // Hiragana / Katakana
           (c >= 0xAC00 && c <= 0xD7AF);      // Hangul syllables
}

// "Word constituent" for word/mixed modes: ASCII alphanumerics plus
// non-ASCII letters. Non-CJK symbols and punctuation break runs.
inline bool is_word_cp(char32_t c) {
    if (c < 0x80)
        return (c >= U'0' && c <= U'9') || (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
    if (is_space_cp(c)) return false;
    // general punctuation, CJK symbols, fullwidth forms
    if ((c >= 0x2000 && c <= 0x206F) || (c >= 0x3000 && c <= 0x303F) || (c >= 0xFF00 && c <= 0xFF0F) ||
        (c >= 0xFF1A && c <= 0xFF20) || (c >= 0xFF3B && c <= 0xFF40) || (c >= 0xFF5B && c <= 0xFF65))
        return false;
    return true;
}

inline char32_t lower_cp(char32_t c) {
    if (c >= U'A' && c <= U'Z') return c + 32;
    return c;
}

}  // namespace detail

// Deterministic segmentation of UTF-8 text.
//   word:  maximal runs of word constituents (whitespace and punctuation split).
//   char:  one token per non-whitespace character, punctuation included.
//   mixed: one token per CJK character, whole tokens for contiguous
//          Latin-letter and digit runs, punctuation as single tokens.
inline std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg = {}) {
    std::vector<std::string> tokens;
    std::string run;
    const auto flush = [&] {
        if (!run.empty()) {
            tokens.push_back(run);
            run.clear();
        }
    };
    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp = detail::decode_utf8(text, i);
        if (cfg.lowercase) cp = detail::lower_cp(cp);
        if (detail::is_space_cp(cp)) {
            flush();
            continue;
        }
        switch (cfg.mode) {
            case TokenMode::character: {
                std::string t;
                detail::append_utf8(t, cp);
                tokens.push_back(std::move(t));
                break;
            }
            case TokenMode::word: {
                if (detail::is_word_cp(cp)) {
                    detail::append_utf8(run, cp);
                } else {
                    flush();  // punctuation dropped in word mode
                }
                break;
            }
            case TokenMode::mixed: {
                const bool is_digit = cp >= U'0' && cp <= U'9';
                const bool is_latin = (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z');
                if (detail::is_cjk_cp(cp)) {
                    flush();
                    std::string t;
                    detail::append_utf8(t, cp);
                    tokens.push_back(std::move(t));
                } else if (is_latin || is_digit) {
                    detail::append_utf8(run, cp);
                } else {
                    flush();
                    std::string t;
                    detail::append_utf8(t, cp);
                    tokens.push_back(std::move(t));  // punctuation / symbol
                }
                break;
            }
        }
    }
    flush();
    return tokens;
}

// Validation pass used by the loaders; throws on malformed byte sequences.
inline void require_valid_utf8(std::string_view text, const std::string& what) {
    std::size_t i = 0;
    try {
        while (i < text.size()) detail::decode_utf8(text, i);
    } catch (const ValidationError& e) {
        throw ValidationError(what + ": " + e.what());
    }
}

}  // namespace gadfa

#endif
