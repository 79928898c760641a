#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pricelab/series.hpp"

namespace pricelab {

struct Measure {
    double magnitude = 0.0; // per item
    std::string unit;       // G, KG, ML or L
    int pack_count = 1;

    double total() const { return magnitude * pack_count; }
    bool operator==(const Measure&) const = default;
};

struct NormalizedDescription {
    std::vector<std::string> tokens;
    std::optional<Measure> volume;
    std::optional<Measure> weight;
    std::optional<double> percent;
    std::set<std::string> flags;

    bool operator==(const NormalizedDescription&) const = default;

    // Space-joined tokens; the string compared by the name matcher.
    std::string token_string() const {
        std::string out;
        for (const auto& t : tokens) {
            if (!out.empty()) out += ' ';
            out += t;
        }
        return out;
    }

    // Canonical text: measures, percent and flags first, then tokens.
    // normalize_description(serialize()) reproduces *this.
    std::string serialize() const {
        std::vector<std::string> words;
        auto measure_word = [](const Measure& m) {
            std::string w;
            if (m.pack_count != 1) w = std::to_string(m.pack_count) + "X";
            return w + format_fixed(m.magnitude) + m.unit;
        };
        if (volume) words.push_back(measure_word(*volume));
        if (weight) words.push_back(measure_word(*weight));
        if (percent) words.push_back(format_fixed(*percent) + "%");
        for (const auto& f : flags) words.push_back(f);
        for (const auto& t : tokens) words.push_back(t);
        std::string out;
        for (const auto& w : words) {
            if (!out.empty()) out += ' ';
            out += w;
        }
        return out;
    }
};

namespace detail {

// Minimal UTF-8 handling: ASCII plus the Polish diacritics that show up in
// retail product names. Other non-ASCII code points count as caseless letters.
struct CaseMap {
    char32_t lower;
    char32_t upper;
};
inline constexpr CaseMap polish_letters[] = {
    {U'ą', U'Ą'}, {U'ć', U'Ć'}, {U'ę', U'Ę'}, {U'ł', U'Ł'}, {U'ń', U'Ń'},
    {U'ó', U'Ó'}, {U'ś', U'Ś'}, {U'ź', U'Ź'}, {U'ż', U'Ż'},
};

inline std::u32string decode_utf8(std::string_view s) {
    std::u32string out;
    for (std::size_t i = 0; i < s.size();) {
        auto b = static_cast<unsigned char>(s[i]);
        int len = b < 0x80 ? 1 : (b >> 5) == 0x6 ? 2 : (b >> 4) == 0xE ? 3 : (b >> 3) == 0x1E ? 4 : 0;
        if (len == 0 || i + len > s.size()) {
            out.push_back(U' '); // invalid byte behaves like a separator
            ++i;
            continue;
        }
        char32_t cp = len == 1 ? b : len == 2 ? (b & 0x1F) : len == 3 ? (b & 0x0F) : (b & 0x07);
        bool ok = true;
        for (int k = 1; k < len; ++k) {
            auto c = static_cast<unsigned char>(s[i + k]);
            if ((c & 0xC0) != 0x80) ok = false;
            cp = (cp << 6) | (c & 0x3F);
        }
        out.push_back(ok ? cp : U' ');
        i += ok ? len : 1;
    }
    return out;
}

inline std::string encode_utf8(std::u32string_view s) {
    std::string out;
    for (char32_t cp : s) {
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        }
    }
    return out;
}

inline bool is_lower(char32_t c) {
    if (c >= U'a' && c <= U'z') return true;
    return std::any_of(std::begin(polish_letters), std::end(polish_letters), [c](auto m) { return m.lower == c; });
}
inline bool is_upper(char32_t c) {
    if (c >= U'A' && c <= U'Z') return true;
    return std::any_of(std::begin(polish_letters), std::end(polish_letters), [c](auto m) { return m.upper == c; });
}
inline bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }
// Non-ASCII letters outside the case table are kept as opaque letters;
// common punctuation blocks are not.
inline bool is_letter(char32_t c) {
    if (is_lower(c) || is_upper(c)) return true;
    if (c < 0xC0) return false;
    return !(c >= 0x2000 && c <= 0x2BFF) && !(c >= 0x3000 && c <= 0x303F);
}
inline char32_t to_upper(char32_t c) {
    if (c >= U'a' && c <= U'z') return c - 32;
    for (auto m : polish_letters)
        if (m.lower == c) return m.upper;
    return c;
}

// camelCase humps and letter->digit boundaries become spaces; then upper-case.
inline std::u32string split_and_upcase(std::u32string_view in) {
    std::u32string out;
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (i > 0) {
            char32_t prev = in[i - 1], cur = in[i];
            if ((is_lower(prev) && is_upper(cur)) || (is_letter(prev) && is_digit(cur))) out.push_back(U' ');
        }
        out.push_back(to_upper(in[i]));
    }
    return out;
}

// Keep letters, digits, '.'/',' between digits and '%' after a digit.
inline std::u32string strip_specials(std::u32string_view in) {
    std::u32string out;
    for (std::size_t i = 0; i < in.size(); ++i) {
        char32_t c = in[i];
        bool keep = is_letter(c) || is_digit(c);
        if (c == U'.' || c == U',')
            keep = i > 0 && i + 1 < in.size() && is_digit(in[i - 1]) && is_digit(in[i + 1]);
        if (c == U'%') {
            std::size_t j = i;
            while (j > 0 && in[j - 1] == U' ') --j;
            keep = j > 0 && is_digit(in[j - 1]);
        }
        out.push_back(keep ? c : U' ');
    }
    return out;
}

inline std::vector<std::string> split_words(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && s[i] == ' ') ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ') ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// Length of a leading "\d+([.,]\d+)?" number, or 0.
inline std::size_t number_prefix(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
    if (i == 0) return 0;
    if (i + 1 < s.size() && (s[i] == '.' || s[i] == ',') && s[i + 1] >= '0' && s[i + 1] <= '9') {
        ++i;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
    }
    return i;
}

inline bool is_number(std::string_view s) { return !s.empty() && number_prefix(s) == s.size(); }

inline double parse_magnitude(std::string_view s) {
    std::string t(s);
    std::replace(t.begin(), t.end(), ',', '.');
    double v = 0.0;
    std::from_chars(t.data(), t.data() + t.size(), v);
    return v;
}

inline constexpr std::string_view units[] = {"KG", "GR", "ML", "G", "L"};
inline constexpr std::string_view flag_words[] = {"UHT", "BIO"};

inline std::string_view unit_prefix(std::string_view s) {
    for (auto u : units)
        if (s.substr(0, u.size()) == u) return u;
    return {};
}
inline bool is_unit(std::string_view s) {
    return s == "%" || std::find(std::begin(units), std::end(units), s) != std::end(units);
}
inline std::string canonical_unit(std::string_view u) { return u == "GR" ? "G" : std::string(u); }
inline bool is_weight_unit(std::string_view u) { return u == "G" || u == "KG"; }

// "5 L" -> "5L", "4 X 100G" -> "4X100G".
inline std::vector<std::string> glue_measures(std::vector<std::string> words) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        std::string w = words[i];
        for (;;) {
            if (i + 1 < words.size() && is_number(w) && is_unit(words[i + 1])) {
                w += words[++i];
            } else if (i + 2 < words.size() && all_digits(w) && words[i + 1] == "X" && number_prefix(words[i + 2]) > 0) {
                w += "X" + words[i + 2];
                i += 2;
            } else if (i + 1 < words.size() && w.size() > 1 && w.back() == 'X' && all_digits(std::string_view(w).substr(0, w.size() - 1)) &&
                       number_prefix(words[i + 1]) > 0) {
                w += words[++i];
            } else {
                break;
            }
        }
        out.push_back(std::move(w));
    }
    return out;
}

struct Extraction {
    std::vector<std::string> tokens;
    std::optional<Measure> volume, weight;
    std::optional<double> percent, bare_percent;
    std::set<std::string> flags;

    void take_measure(Measure m) {
        auto& slot = is_weight_unit(m.unit) ? weight : volume;
        if (!slot) slot = std::move(m);
    }
};

inline void classify(const std::string& w, Extraction& ex) {
    std::string_view v(w);
    if (std::find(std::begin(flag_words), std::end(flag_words), v) != std::end(flag_words)) {
        ex.flags.insert(w);
        return;
    }
    std::size_t n = number_prefix(v);
    if (n > 0) {
        std::string_view rest = v.substr(n);
        double mag = parse_magnitude(v.substr(0, n));
        bool positive = mag > 0.0 && mag < 1e9;
        // pack: 4X100G
        if (positive && all_digits(v.substr(0, n)) && !rest.empty() && rest[0] == 'X') {
            std::string_view inner = rest.substr(1);
            std::size_t m = number_prefix(inner);
            if (m > 0) {
                auto u = unit_prefix(inner.substr(m));
                double per = parse_magnitude(inner.substr(0, m));
                if (!u.empty() && inner.size() == m + u.size() && per > 0.0 && mag <= 1e6) {
                    ex.take_measure({per, canonical_unit(u), static_cast<int>(mag)});
                    return;
                }
            }
        }
        if (positive && rest == "%") {
            if (!ex.percent) ex.percent = mag;
            return;
        }
        if (positive) {
            auto u = unit_prefix(rest);
            if (!u.empty()) {
                ex.take_measure({mag, canonical_unit(u), 1});
                if (rest.size() > u.size()) ex.tokens.emplace_back(rest.substr(u.size()));
                return;
            }
        }
        if (positive && rest.empty() && v.find_first_of(".,") != std::string_view::npos && mag <= 100.0) {
            if (!ex.bare_percent) ex.bare_percent = mag;
            return;
        }
    }
    // residual word: '.', ',' and '%' split it into plain tokens
    std::string piece;
    for (char c : w) {
        if (c == '.' || c == ',' || c == '%') {
            if (!piece.empty()) ex.tokens.push_back(std::move(piece));
            piece.clear();
        } else {
            piece += c;
        }
    }
    if (!piece.empty()) ex.tokens.push_back(std::move(piece));
}

inline Extraction extract_once(std::string_view raw) {
    auto text = encode_utf8(strip_specials(split_and_upcase(decode_utf8(raw))));
    Extraction ex;
    for (const auto& w : glue_measures(split_words(text))) classify(w, ex);
    return ex;
}

} // namespace detail

// Upper-cases, splits camelCase, drops special characters and moves measures
// (volume, weight, packs, percent) and flags into structured fields. The
// extraction step is repeated until the token list is a fixpoint.
inline NormalizedDescription normalize_description(std::string_view raw) {
    NormalizedDescription out;
    std::optional<double> bare_percent;
    std::string text(raw);
    for (int round = 0; round < 16; ++round) {
        auto ex = detail::extract_once(text);
        if (!out.volume) out.volume = ex.volume;
        if (!out.weight) out.weight = ex.weight;
        if (!out.percent) out.percent = ex.percent;
        if (!bare_percent) bare_percent = ex.bare_percent;
        out.flags.insert(ex.flags.begin(), ex.flags.end());
        bool stable = round > 0 && ex.tokens == out.tokens;
        out.tokens = std::move(ex.tokens);
        if (stable) break;
        text = out.token_string();
    }
    if (!out.percent) out.percent = bare_percent;
    return out;
}

} // namespace pricelab
