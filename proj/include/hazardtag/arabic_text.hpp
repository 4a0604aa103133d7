#ifndef HAZARDTAG_ARABIC_TEXT_HPP
#define HAZARDTAG_ARABIC_TEXT_HPP

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hazardtag/utf8.hpp"

// Rule-based Arabic preprocessing: normalization, tokenization, light
// (affix-stripping) stemming and word n-grams. Everything here is a pure
// function over immutable inputs.

namespace hazardtag {

namespace detail {

// Tashkeel and related combining marks dropped by normalize().
inline bool is_arabic_diacritic(char32_t cp) {
  return (cp >= 0x0610 && cp <= 0x061A) ||  // Quranic annotation signs
         (cp >= 0x064B && cp <= 0x065F) ||  // fathatan .. wavy hamza below
         cp == 0x0670;                      // superscript (dagger) alef
}

inline constexpr char32_t kTatweel = 0x0640;
inline constexpr char32_t kAlef = 0x0627;

inline bool is_alef_variant(char32_t cp) {
  return cp == 0x0622 || cp == 0x0623 || cp == 0x0625;  // آ أ إ
}

inline bool is_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

// Punctuation emitted as single-character tokens.
inline bool is_punct(char32_t cp) {
  switch (cp) {
    case U'.': case U',': case U'!': case U':': case U';':
    case U'?': case U'"': case U'\'': case U'(': case U')':
    case U'[': case U']': case U'{': case U'}':
    case 0x060C:  // ، Arabic comma
    case 0x061B:  // ؛ Arabic semicolon
    case 0x061F:  // ؟ Arabic question mark
    case 0x00AB:  // «
    case 0x00BB:  // »
    case 0x2018: case 0x2019: case 0x201C: case 0x201D:
      return true;
    default:
      return false;
  }
}

inline bool is_digit(char32_t cp) {
  return (cp >= U'0' && cp <= U'9') || (cp >= 0x0660 && cp <= 0x0669) ||
         (cp >= 0x06F0 && cp <= 0x06F9);
}

// Sentence boundaries used by the prepare pipeline.
inline bool is_sentence_end(char32_t cp) {
  return cp == U'.' || cp == U'!' || cp == U'?' || cp == 0x061F ||
         cp == 0x06D4;  // ۔ Arabic full stop
}

}  // namespace detail

// Removes diacritics and tatweel, folds alef variants (أ إ آ) to bare alef,
// leaves everything else (including ة) untouched. Idempotent.
inline std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    char32_t cp;
    pos += utf8::decode(text, pos, cp);
    if (detail::is_arabic_diacritic(cp) || cp == detail::kTatweel) continue;
    utf8::append(out, detail::is_alef_variant(cp) ? detail::kAlef : cp);
  }
  return out;
}

struct Token {
  std::string surface;
  std::size_t start = 0;  // byte offsets into the normalized text
  std::size_t end = 0;    // exclusive
};

// Whitespace splits; punctuation becomes single-character tokens; digit runs
// (ASCII or Arabic-Indic) stay together; any other run of codepoints is one
// token. Offsets satisfy surface == text.substr(start, end - start).
inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t pos = 0;
  std::size_t run_start = std::string::npos;
  bool run_is_digits = false;

  auto flush = [&](std::size_t end_pos) {
    if (run_start == std::string::npos) return;
    tokens.push_back({std::string(text.substr(run_start, end_pos - run_start)),
                      run_start, end_pos});
    run_start = std::string::npos;
  };

  while (pos < text.size()) {
    char32_t cp;
    const std::size_t len = utf8::decode(text, pos, cp);
    if (detail::is_space(cp)) {
      flush(pos);
    } else if (detail::is_punct(cp)) {
      flush(pos);
      tokens.push_back(
          {std::string(text.substr(pos, len)), pos, pos + len});
    } else if (detail::is_digit(cp)) {
      if (run_start != std::string::npos && !run_is_digits) flush(pos);
      if (run_start == std::string::npos) {
        run_start = pos;
        run_is_digits = true;
      }
    } else {
      if (run_start != std::string::npos && run_is_digits) flush(pos);
      if (run_start == std::string::npos) {
        run_start = pos;
        run_is_digits = false;
      }
    }
    pos += len;
  }
  flush(pos);
  return tokens;
}

// Affix table for the light stemmer. Rules apply longest-first; a rule is
// skipped when stripping would leave fewer than min_stem_length codepoints.
struct StemRuleTable {
  std::vector<std::u32string> prefixes;
  std::vector<std::u32string> suffixes;
  std::size_t min_stem_length = 2;

  void sort_rules() {
    auto longer_first = [](const std::u32string& a, const std::u32string& b) {
      if (a.size() != b.size()) return a.size() > b.size();
      return a < b;
    };
    std::sort(prefixes.begin(), prefixes.end(), longer_first);
    std::sort(suffixes.begin(), suffixes.end(), longer_first);
  }

  static StemRuleTable defaults() {
    StemRuleTable t;
    for (const char* p : {"ال", "وال", "بال", "كال", "فال", "لل",
                          "و", "ب", "ك", "ف"})
      t.prefixes.push_back(utf8::to_u32(p));
    for (const char* s : {"ات", "ون", "ين", "ان", "ها", "هم",
                          "ة", "ه", "ي"})
      t.suffixes.push_back(utf8::to_u32(s));
    t.sort_rules();
    return t;
  }
};

// One line per rule: "prefix X", "suffix X" or "min_stem_length K".
// Blank lines and lines starting with '#' are skipped.
inline StemRuleTable load_stem_rules(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stem rules file: " + path);
  StemRuleTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string kind, value;
    ss >> kind >> value;
    if (kind == "prefix" && !value.empty()) {
      t.prefixes.push_back(utf8::to_u32(value));
    } else if (kind == "suffix" && !value.empty()) {
      t.suffixes.push_back(utf8::to_u32(value));
    } else if (kind == "min_stem_length" && !value.empty()) {
      t.min_stem_length = std::stoul(value);
    } else {
      throw std::runtime_error("stem rules: bad line " +
                               std::to_string(lineno) + ": " + line);
    }
  }
  t.sort_rules();
  return t;
}

// Strips at most one prefix then at most one suffix, longest rule first.
inline std::string stem(std::string_view token, const StemRuleTable& rules) {
  std::u32string t = utf8::to_u32(token);
  for (const auto& p : rules.prefixes) {
    if (t.size() >= p.size() + rules.min_stem_length &&
        t.compare(0, p.size(), p) == 0) {
      t.erase(0, p.size());
      break;
    }
  }
  for (const auto& s : rules.suffixes) {
    if (t.size() >= s.size() + rules.min_stem_length &&
        t.compare(t.size() - s.size(), s.size(), s) == 0) {
      t.erase(t.size() - s.size());
      break;
    }
  }
  return utf8::from_u32(t);
}

// Space-joined word n-grams, sliding window of width n, stride 1.
inline std::vector<std::string> ngrams(const std::vector<std::string>& tokens,
                                       std::size_t n) {
  if (n == 0) throw std::invalid_argument("ngrams: n must be >= 1");
  std::vector<std::string> out;
  if (tokens.size() < n) return out;
  out.reserve(tokens.size() - n + 1);
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string g = tokens[i];
    for (std::size_t j = 1; j < n; ++j) {
      g += ' ';
      g += tokens[i + j];
    }
    out.push_back(std::move(g));
  }
  return out;
}

// Cuts text into sentences after . ! ? ؟ ۔ or at newlines; the boundary
// mark stays with its sentence. Segments that are only whitespace vanish.
inline std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0, seg_start = 0;
  bool has_content = false;
  auto flush = [&](std::size_t end_pos) {
    if (has_content)
      out.emplace_back(text.substr(seg_start, end_pos - seg_start));
    seg_start = end_pos;
    has_content = false;
  };
  while (pos < text.size()) {
    char32_t cp;
    const std::size_t len = utf8::decode(text, pos, cp);
    if (cp == U'\n') {
      flush(pos);
      seg_start = pos + len;
    } else if (detail::is_sentence_end(cp)) {
      has_content = true;
      flush(pos + len);
    } else if (!detail::is_space(cp)) {
      has_content = true;
    }
    pos += len;
  }
  flush(pos);
  return out;
}

}  // namespace hazardtag

#endif  // HAZARDTAG_ARABIC_TEXT_HPP
