#include "empatheval/offline_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "empatheval/errors.hpp"
#include "empatheval/format.hpp"

namespace empatheval {

namespace {

// n-gram -> count. Tokens are joined with the unit separator '\x1f', so
// ("a b","c") and ("a","b c") stay distinct for hand-built sequences.
std::unordered_map<std::string, std::size_t> ngram_counts(const TokenSequence& tokens, std::size_t n) {
  std::unordered_map<std::string, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (std::size_t k = 0; k < n; ++k) {
      if (k > 0) key.push_back('\x1f');
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

double sentence_bleu(const TokenSequence& candidate, const TokenSequence& reference, std::size_t max_n) {
  if (reference.empty()) throw EmptyReference();
  if (max_n == 0) throw std::invalid_argument("sentence_bleu: max_n must be >= 1");
  if (candidate.empty()) return 0.0;

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    const auto cand = ngram_counts(candidate, n);
    const auto ref = ngram_counts(reference, n);
    const std::size_t total = candidate.size() >= n ? candidate.size() - n + 1 : 0;
    std::size_t clipped = 0;
    for (const auto& [gram, count] : cand) {
      const auto it = ref.find(gram);
      if (it != ref.end()) clipped += std::min(count, it->second);
    }
    double precision;
    if (clipped == 0) {
      if (n == 1) return 0.0;
      precision = 1.0 / static_cast<double>(total + 1);
    } else {
      precision = static_cast<double>(clipped) / static_cast<double>(total);
    }
    log_sum += std::log(precision);
  }
  const double ratio = static_cast<double>(reference.size()) / static_cast<double>(candidate.size());
  const double brevity = std::min(1.0, std::exp(1.0 - ratio));
  return brevity * std::exp(log_sum / static_cast<double>(max_n));
}

double distinct_n(const TokenSequence& tokens, std::size_t n) {
  if (n == 0) throw std::invalid_argument("distinct_n: n must be >= 1");
  if (tokens.size() < n) return 0.0;
  const auto counts = ngram_counts(tokens, n);
  return static_cast<double>(counts.size()) / static_cast<double>(tokens.size() - n + 1);
}

double perplexity(std::span<const double> token_logprobs) {
  if (token_logprobs.empty()) throw EmptyLogprobs();
  double sum = 0.0;
  for (double lp : token_logprobs) {
    if (!std::isfinite(lp)) throw NonFinite(lp);
    sum += lp;
  }
  return std::exp(-sum / static_cast<double>(token_logprobs.size()));
}

std::string gold_reference(const Dialogue& dialogue, const ResponseTable& responses) {
  if (const auto* human = responses.find(dialogue.id, kHumanModel)) return human->text;
  if (auto gold = dialogue.gold_reply()) return *gold;
  throw MissingReference(dialogue.id);
}

std::vector<OfflineScores> score_offline(const DialogueSet& dialogues, const ResponseTable& responses) {
  std::vector<OfflineScores> out;
  for (const auto& d : dialogues.dialogues()) {
    const auto rows = responses.for_dialogue(d.id);
    if (rows.empty()) continue;
    std::optional<TokenSequence> reference;
    for (const auto* r : rows) {
      OfflineScores s{d.id, r->model_id, std::nullopt, std::nullopt, 0.0};
      const auto tokens = tokenize(r->text);
      s.distinct_1 = distinct_n(tokens, 1);
      if (r->token_logprobs && !r->token_logprobs->empty()) {
        std::vector<double> lps;
        lps.reserve(r->token_logprobs->size());
        for (const auto& t : *r->token_logprobs) lps.push_back(t.logprob);
        s.perplexity = perplexity(lps);
      }
      if (r->model_id != kHumanModel) {
        if (!reference) reference = tokenize(gold_reference(d, responses));
        s.bleu = reference->empty() ? 0.0 : sentence_bleu(tokens, *reference);
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::map<std::string, OfflineAggregate> aggregate_offline_scores(std::span<const OfflineScores> scores) {
  struct Columns {
    std::vector<double> perplexity, bleu, distinct_1;
  };
  std::map<std::string, Columns> by_model;
  for (const auto& s : scores) {
    auto& c = by_model[s.model_id];
    if (s.perplexity) c.perplexity.push_back(*s.perplexity);
    if (s.bleu) c.bleu.push_back(*s.bleu);
    c.distinct_1.push_back(s.distinct_1);
  }
  std::map<std::string, OfflineAggregate> out;
  for (const auto& [model, c] : by_model)
    out.emplace(model, OfflineAggregate{aggregate(c.perplexity), aggregate(c.bleu), aggregate(c.distinct_1)});
  return out;
}

std::map<std::string, OfflineAggregate> aggregate_offline(const DialogueSet& dialogues,
                                                          const ResponseTable& responses) {
  const auto scores = score_offline(dialogues, responses);
  return aggregate_offline_scores(scores);
}

void write_offline_csv(std::ostream& out, std::span<const OfflineScores> scores) {
  out << "dialogue_id,model_id,perplexity,bleu,distinct_1\n";
  for (const auto& s : scores) {
    out << csv_field(s.dialogue_id) << ',' << csv_field(s.model_id) << ','
        << (s.perplexity ? format_roundtrip(*s.perplexity) : "") << ','
        << (s.bleu ? format_roundtrip(*s.bleu) : "") << ',' << format_roundtrip(s.distinct_1) << '\n';
  }
}

std::vector<OfflineScores> read_offline_csv(std::istream& in) {
  std::vector<OfflineScores> out;
  std::string line;
  std::size_t line_no = 0;
  auto number = [&](const std::string& field, const char* name) {
    const auto v = parse_double(field);
    if (!v) throw MalformedRecord(line_no, std::string("bad ") + name + " value '" + field + "'");
    return *v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "dialogue_id,model_id,perplexity,bleu,distinct_1")
        throw MalformedRecord(line_no, "unexpected offline CSV header");
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw MalformedRecord(line_no, "expected 5 columns");
    OfflineScores s{f[0], f[1], std::nullopt, std::nullopt, number(f[4], "distinct_1")};
    if (!f[2].empty()) s.perplexity = number(f[2], "perplexity");
    if (!f[3].empty()) s.bleu = number(f[3], "bleu");
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace empatheval
