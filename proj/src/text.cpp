#include "empatheval/text.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <stdexcept>
#include <unordered_set>

#include <openssl/evp.h>

namespace empatheval {

namespace {

struct CodePoint {
  char32_t value;
  std::size_t length;
};

// Lenient UTF-8 decode: an invalid lead byte is returned as a 1-byte code point.
CodePoint decode(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) return {b0, 1};
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = cont(1);
    if (c1 >= 0) return {static_cast<char32_t>(((b0 & 0x1F) << 6) | c1), 2};
  } else if ((b0 & 0xF0) == 0xE0) {
    const int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) return {static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2), 3};
  } else if ((b0 & 0xF8) == 0xF0) {
    const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0)
      return {static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3), 4};
  }
  return {b0, 1};
}

bool is_space(char32_t c) {
  switch (c) {
    case U' ': case U'\t': case U'\n': case U'\v': case U'\f': case U'\r':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
           (c >= 0x7B && c <= 0x7E);
  }
  switch (c) {
    case 0xA1: case 0xAB: case 0xBB: case 0xBF:                  // ¡ « » ¿
    case 0x2013: case 0x2014:                                    // en dash, em dash
    case 0x2018: case 0x2019: case 0x201C: case 0x201D:          // ‘ ’ “ ”
    case 0x2026:                                                 // …
      return true;
    default:
      return false;
  }
}

void append_lowered(std::string& out, std::string_view bytes) {
  for (char ch : bytes) out.push_back(ch >= 'A' && ch <= 'Z' ? static_cast<char>(ch - 'A' + 'a') : ch);
}

void split_word(std::string_view word, TokenSequence& out) {
  std::vector<CodePoint> cps;
  std::vector<std::size_t> offsets;
  for (std::size_t i = 0; i < word.size();) {
    const auto cp = decode(word, i);
    cps.push_back(cp);
    offsets.push_back(i);
    i += cp.length;
  }
  std::size_t lo = 0, hi = cps.size();
  while (lo < hi && is_punct(cps[lo].value)) ++lo;
  while (hi > lo && is_punct(cps[hi - 1].value)) --hi;

  auto emit = [&](std::size_t k) { out.emplace_back(word.substr(offsets[k], cps[k].length)); };
  for (std::size_t k = 0; k < lo; ++k) emit(k);
  if (lo < hi) {
    std::string core;
    const std::size_t end = hi < cps.size() ? offsets[hi] : word.size();
    append_lowered(core, word.substr(offsets[lo], end - offsets[lo]));
    out.push_back(std::move(core));
  }
  for (std::size_t k = hi; k < cps.size(); ++k) emit(k);
}

// Common English function words plus the contractions the tokenizer keeps whole.
const std::unordered_set<std::string_view>& stopwords() {
  static const std::unordered_set<std::string_view> words = {
      "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are", "as",
      "at", "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can",
      "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for", "from", "further",
      "had", "has", "have", "having", "he", "her", "here", "hers", "herself", "him", "himself", "his",
      "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just", "me", "more", "most", "my",
      "myself", "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "our",
      "ours", "ourselves", "out", "over", "own", "same", "she", "should", "so", "some", "such", "than",
      "that", "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this",
      "those", "through", "to", "too", "under", "until", "up", "very", "was", "we", "were", "what",
      "when", "where", "which", "while", "who", "whom", "why", "will", "with", "would", "you", "your",
      "yours", "yourself", "yourselves", "i'm", "i've", "i'd", "i'll", "you're", "you've", "you'd",
      "you'll", "it's", "that's", "there's", "he's", "she's", "we're", "they're", "don't", "doesn't",
      "didn't", "isn't", "wasn't", "aren't", "weren't", "can't", "won't", "wouldn't", "couldn't",
      "shouldn't", "haven't", "hasn't", "hadn't", "let's", "also", "really", "well", "oh", "yeah",
  };
  return words;
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
  TokenSequence out;
  std::size_t word_start = std::string_view::npos;
  for (std::size_t i = 0; i < text.size();) {
    const auto cp = decode(text, i);
    if (is_space(cp.value)) {
      if (word_start != std::string_view::npos) {
        split_word(text.substr(word_start, i - word_start), out);
        word_start = std::string_view::npos;
      }
    } else if (word_start == std::string_view::npos) {
      word_start = i;
    }
    i += cp.length;
  }
  if (word_start != std::string_view::npos) split_word(text.substr(word_start), out);
  return out;
}

bool is_punctuation_token(std::string_view token) {
  if (token.empty()) return false;
  for (std::size_t i = 0; i < token.size();) {
    const auto cp = decode(token, i);
    if (!is_punct(cp.value)) return false;
    i += cp.length;
  }
  return true;
}

bool is_stopword(std::string_view token) { return stopwords().contains(token); }

TokenSequence content_words(const TokenSequence& tokens) {
  TokenSequence out;
  for (const auto& t : tokens)
    if (!is_stopword(t) && !is_punctuation_token(t)) out.push_back(t);
  return out;
}

std::string join_tokens(const TokenSequence& tokens, std::size_t begin, std::size_t end) {
  end = std::min(end, tokens.size());
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0x0F]);
  }
  return out;
}

}  // namespace empatheval
