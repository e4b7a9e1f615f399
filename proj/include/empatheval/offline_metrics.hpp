#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "empatheval/corpus.hpp"
#include "empatheval/stats.hpp"
#include "empatheval/text.hpp"

namespace empatheval {

/// Sentence-level BLEU of `candidate` against a single `reference`.
///
/// Geometric mean of clipped n-gram precisions for n = 1..max_n times the
/// brevity penalty min(1, exp(1 - |ref|/|cand|)). For n >= 2, an order whose
/// clipped count is zero uses (0 + 1) / (total + 1) instead, which also covers
/// candidates shorter than n (total = 0 gives 1). A zero unigram match gives 0.
/// Empty candidate gives 0; empty reference throws EmptyReference.
double sentence_bleu(const TokenSequence& candidate, const TokenSequence& reference, std::size_t max_n = 4);

/// Unique n-grams over total n-grams; 0 when there are no n-grams.
double distinct_n(const TokenSequence& tokens, std::size_t n);

/// exp of the negated mean natural-log probability.
double perplexity(std::span<const double> token_logprobs);

/// Per-response offline scores. BLEU is absent for the gold ("human") rows and
/// perplexity is absent when the response carries no logprobs.
struct OfflineScores {
  std::string dialogue_id;
  std::string model_id;
  std::optional<double> perplexity;
  std::optional<double> bleu;
  double distinct_1 = 0.0;

  friend bool operator==(const OfflineScores&, const OfflineScores&) = default;
};

struct OfflineAggregate {
  std::optional<AggregateStat> perplexity;
  std::optional<AggregateStat> bleu;
  std::optional<AggregateStat> distinct_1;

  friend bool operator==(const OfflineAggregate&, const OfflineAggregate&) = default;
};

/// Gold reference for BLEU: the "human" response when present, otherwise the
/// dialogue's final supporter turn. Throws MissingReference when neither exists.
std::string gold_reference(const Dialogue& dialogue, const ResponseTable& responses);

/// Scores every response, dialogue order first, then model order.
std::vector<OfflineScores> score_offline(const DialogueSet& dialogues, const ResponseTable& responses);

/// Per-model mean (population SD) of already computed per-response scores.
std::map<std::string, OfflineAggregate> aggregate_offline_scores(std::span<const OfflineScores> scores);

std::map<std::string, OfflineAggregate> aggregate_offline(const DialogueSet& dialogues,
                                                          const ResponseTable& responses);

/// CSV with header `dialogue_id,model_id,perplexity,bleu,distinct_1`; absent
/// values are empty fields. Numbers use the shortest round-trip form.
void write_offline_csv(std::ostream& out, std::span<const OfflineScores> scores);
std::vector<OfflineScores> read_offline_csv(std::istream& in);

}  // namespace empatheval
