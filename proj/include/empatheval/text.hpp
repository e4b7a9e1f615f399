#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace empatheval {

/// Tokens produced by `tokenize`. Every metric and the lexicon operate on
/// this form, so n-grams mean the same thing everywhere.
using TokenSequence = std::vector<std::string>;

/// Canonical tokenizer.
///
/// Lowercases ASCII letters, splits on ASCII and Unicode whitespace, and peels
/// leading/trailing punctuation off each word as one token per character.
/// Word-internal punctuation stays ("i'm", "e-mail"). Never emits empty tokens.
TokenSequence tokenize(std::string_view text);

/// True when every character of `token` is punctuation.
bool is_punctuation_token(std::string_view token);

/// Version of the embedded stopword list. Bumping it changes relevance scores.
inline constexpr std::string_view kStopwordListVersion = "stopwords-en-v1";

bool is_stopword(std::string_view token);

/// Tokens that are neither stopwords nor pure punctuation.
TokenSequence content_words(const TokenSequence& tokens);

/// Space-joined tokens, used for display and as map keys.
std::string join_tokens(const TokenSequence& tokens, std::size_t begin = 0, std::size_t end = std::string::npos);

/// 64-bit FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(std::string_view bytes);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

}  // namespace empatheval
