#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "empatheval/behavior.hpp"
#include "empatheval/corpus.hpp"
#include "empatheval/stats.hpp"
#include "empatheval/text.hpp"

namespace empatheval {

struct LexiconEntry {
  TokenSequence phrase;  // 1-3 canonical tokens
  BehaviorType behavior = BehaviorType::Mirroring;
  double weight = 1.0;  // (0, 1]

  friend bool operator==(const LexiconEntry&, const LexiconEntry&) = default;
};

/// Weighted phrase lexicon over the five positive behaviour types.
class Lexicon {
 public:
  explicit Lexicon(std::string version = "unversioned");

  /// Validates and adds; throws MalformedEntry, WeightOutOfRange or DuplicatePhrase.
  void add(LexiconEntry entry, std::size_t line_no = 0);

  const std::vector<LexiconEntry>& entries() const noexcept { return entries_; }
  const std::string& version() const noexcept { return version_; }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }

  /// Indices of entries whose phrase starts with `token`.
  std::span<const std::size_t> starting_with(const std::string& token) const;

 private:
  std::string version_;
  std::vector<LexiconEntry> entries_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_first_token_;
};

/// TSV with header "phrase<TAB>behavior<TAB>weight" and an optional fourth
/// "log_odds" column (builder output). The version is "lex-" plus the first
/// 12 hex digits of the file's SHA-256.
Lexicon load_lexicon(const std::filesystem::path& path);
Lexicon parse_lexicon(std::istream& in, std::string version = "unversioned");

struct PhraseMatch {
  std::size_t entry = 0;  // index into Lexicon::entries()
  std::size_t start = 0;  // token index

  friend bool operator==(const PhraseMatch&, const PhraseMatch&) = default;
};

/// Greedy left-to-right longest match, run separately per behaviour so spans
/// of one behaviour never overlap. Sorted by start, then behaviour order.
std::vector<PhraseMatch> match_phrases(const TokenSequence& tokens, const Lexicon& lexicon);

/// Cosine similarity of content-word count vectors (stopwords and punctuation
/// removed); 0 when either side has no content words.
double relevance(const TokenSequence& response, const TokenSequence& history);

inline constexpr double kDefaultRelevanceThreshold = 0.05;
inline constexpr double kSaturationConstant = 1.0;

struct LexiconScore {
  std::array<double, 5> raw{};         // indexed like kPositiveBehaviors
  std::array<double, 5> normalized{};  // raw / (raw + 1)
  double relevance = 0.0;
  double gate = 0.0;  // 0 below the threshold, else relevance
  double overall = 0.0;
  std::vector<PhraseMatch> matches;
};

/// Scores a response: per-behaviour raw sums of match weights, saturated to
/// raw/(raw+1), averaged over the five behaviours and multiplied by the
/// relevance gate.
LexiconScore lexicon_score(std::string_view response_text, std::span<const Utterance> history,
                           const Lexicon& lexicon, double relevance_threshold = kDefaultRelevanceThreshold);

/// The final combination step, exposed so the formula can be checked on its own.
double combine_lexicon_score(const std::array<double, 5>& raw, double relevance, double relevance_threshold,
                             std::array<double, 5>* normalized = nullptr, double* gate = nullptr);

struct LexiconResponseScore {
  std::string dialogue_id;
  std::string model_id;
  LexiconScore score;
};

std::vector<LexiconResponseScore> score_all_lexicon(const DialogueSet& dialogues, const ResponseTable& responses,
                                                    const Lexicon& lexicon,
                                                    double relevance_threshold = kDefaultRelevanceThreshold);

/// Mean (population SD) of `overall` per model.
std::map<std::string, AggregateStat> aggregate_lexicon(std::span<const LexiconResponseScore> scores);

/// JSONL: {"dialogue_id","model_id","overall","relevance","raw":{...},"normalized":{...}}.
void write_lexicon_jsonl(std::ostream& out, std::span<const LexiconResponseScore> scores);
/// Reads back dialogue/model/overall/relevance/raw/normalized (matches are not exported).
std::vector<LexiconResponseScore> read_lexicon_jsonl(std::istream& in);

// ---------------------------------------------------------------------------
// builder

struct LexiconCandidate {
  TokenSequence phrase;
  /// Absent when seed co-occurrence is tied; such rows need a human decision.
  std::optional<BehaviorType> behavior;
  double weight = 0.0;
  double log_odds = 0.0;
};

struct LexiconBuildOptions {
  std::size_t top_k = 50;
  std::size_t max_n = 3;
  /// Minimum occurrences in the positive corpus.
  std::size_t min_count = 1;
};

/// Mines n-grams (n <= 3, no punctuation tokens) that are over-represented in
/// `positives` relative to `background`:
///   log_odds = ln(((c_pos + 1) / (N_pos + 1)) / ((c_bg + 1) / (N_bg + 1)))
/// with N the total n-gram count of the same order in each corpus. Only
/// log_odds > 0 survive. Each candidate goes to the behaviour whose seed
/// phrases co-occur with it in the most positive responses; ties stay
/// unassigned. The top_k per behaviour (and top_k unassigned) are kept and
/// weighted 0.01 + 0.99 * (log_odds - min) / (max - min) over the kept set.
std::vector<LexiconCandidate> build_lexicon(std::span<const std::string> positives,
                                            std::span<const std::string> background,
                                            const std::map<BehaviorType, std::vector<std::string>>& seeds,
                                            const LexiconBuildOptions& options = {});

/// Builder TSV: header "phrase<TAB>behavior<TAB>weight<TAB>log_odds";
/// unassigned rows carry behavior "unassigned".
void write_lexicon_candidates(std::ostream& out, std::span<const LexiconCandidate> candidates);

/// Seeds TSV: "phrase<TAB>behavior" per line, optional header.
std::map<BehaviorType, std::vector<std::string>> parse_seed_phrases(std::istream& in);

}  // namespace empatheval
