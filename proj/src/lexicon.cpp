#include "empatheval/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "empatheval/errors.hpp"
#include "empatheval/format.hpp"

namespace empatheval {

using json = nlohmann::json;

namespace {

constexpr std::size_t kMaxPhraseTokens = 3;

std::size_t positive_index(BehaviorType b) {
  for (std::size_t i = 0; i < kPositiveBehaviors.size(); ++i)
    if (kPositiveBehaviors[i] == b) return i;
  return kPositiveBehaviors.size();
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

bool phrase_at(const TokenSequence& tokens, std::size_t pos, const TokenSequence& phrase) {
  if (pos + phrase.size() > tokens.size()) return false;
  return std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(pos));
}

bool contains_phrase(const TokenSequence& tokens, const TokenSequence& phrase) {
  if (phrase.empty()) return false;
  for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i)
    if (phrase_at(tokens, i, phrase)) return true;
  return false;
}

TokenSequence history_tokens(std::span<const Utterance> history) {
  TokenSequence out;
  for (const auto& u : history) {
    auto t = tokenize(u.text);
    out.insert(out.end(), std::make_move_iterator(t.begin()), std::make_move_iterator(t.end()));
  }
  return out;
}

}  // namespace

Lexicon::Lexicon(std::string version) : version_(std::move(version)) {}

void Lexicon::add(LexiconEntry entry, std::size_t line_no) {
  if (entry.phrase.empty()) throw MalformedEntry(line_no, "phrase is empty");
  if (entry.phrase.size() > kMaxPhraseTokens) throw MalformedEntry(line_no, "phrase is longer than 3 tokens");
  if (!is_positive(entry.behavior)) throw MalformedEntry(line_no, "lexicon behaviors must be one of the positive five");
  if (!(entry.weight > 0.0 && entry.weight <= 1.0)) throw WeightOutOfRange(entry.weight, line_no);
  for (auto idx : starting_with(entry.phrase.front())) {
    const auto& e = entries_[idx];
    if (e.behavior == entry.behavior && e.phrase == entry.phrase)
      throw DuplicatePhrase(join_tokens(entry.phrase), std::string(behavior_id(entry.behavior)), line_no);
  }
  by_first_token_[entry.phrase.front()].push_back(entries_.size());
  entries_.push_back(std::move(entry));
}

std::span<const std::size_t> Lexicon::starting_with(const std::string& token) const {
  const auto it = by_first_token_.find(token);
  if (it == by_first_token_.end()) return {};
  return it->second;
}

Lexicon parse_lexicon(std::istream& in, std::string version) {
  Lexicon lexicon(std::move(version));
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (!have_header) {
      const bool ok = fields.size() >= 3 && fields.size() <= 4 && fields[0] == "phrase" && fields[1] == "behavior" &&
                      fields[2] == "weight" && (fields.size() == 3 || fields[3] == "log_odds");
      if (!ok) throw MalformedEntry(line_no, "expected header 'phrase<TAB>behavior<TAB>weight'");
      have_header = true;
      continue;
    }
    if (fields.size() < 3 || fields.size() > 4) throw MalformedEntry(line_no, "expected 3 or 4 tab-separated fields");
    const auto behavior = parse_behavior_id(fields[1]);
    if (!behavior || !is_positive(*behavior)) throw MalformedEntry(line_no, "unknown behavior '" + fields[1] + "'");
    const auto weight = parse_double(fields[2]);
    if (!weight) throw MalformedEntry(line_no, "weight '" + fields[2] + "' is not a number");
    lexicon.add({tokenize(fields[0]), *behavior, *weight}, line_no);
  }
  return lexicon;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("FileNotFound", "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto bytes = buf.str();
  std::istringstream parse_in(bytes);
  return parse_lexicon(parse_in, "lex-" + sha256_hex(bytes).substr(0, 12));
}

std::vector<PhraseMatch> match_phrases(const TokenSequence& tokens, const Lexicon& lexicon) {
  std::vector<std::pair<std::size_t, PhraseMatch>> tagged;  // (behaviour index, match)
  const auto& entries = lexicon.entries();
  for (std::size_t b = 0; b < kPositiveBehaviors.size(); ++b) {
    const auto behavior = kPositiveBehaviors[b];
    for (std::size_t pos = 0; pos < tokens.size();) {
      std::optional<std::size_t> best;
      for (auto idx : lexicon.starting_with(tokens[pos])) {
        const auto& e = entries[idx];
        if (e.behavior != behavior || !phrase_at(tokens, pos, e.phrase)) continue;
        if (!best || e.phrase.size() > entries[*best].phrase.size()) best = idx;
      }
      if (best) {
        tagged.push_back({b, {*best, pos}});
        pos += entries[*best].phrase.size();
      } else {
        ++pos;
      }
    }
  }
  std::stable_sort(tagged.begin(), tagged.end(), [](const auto& a, const auto& b) {
    return a.second.start != b.second.start ? a.second.start < b.second.start : a.first < b.first;
  });
  std::vector<PhraseMatch> out;
  out.reserve(tagged.size());
  for (const auto& t : tagged) out.push_back(t.second);
  return out;
}

double relevance(const TokenSequence& response, const TokenSequence& history) {
  std::map<std::string, double> a, b;
  for (const auto& t : content_words(response)) a[t] += 1.0;
  for (const auto& t : content_words(history)) b[t] += 1.0;
  if (a.empty() || b.empty()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [w, c] : a) {
    na += c * c;
    if (const auto it = b.find(w); it != b.end()) dot += c * it->second;
  }
  for (const auto& [w, c] : b) nb += c * c;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

double combine_lexicon_score(const std::array<double, 5>& raw, double relevance_value, double relevance_threshold,
                             std::array<double, 5>* normalized, double* gate) {
  std::array<double, 5> norm{};
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    norm[i] = raw[i] / (raw[i] + kSaturationConstant);
    sum += norm[i];
  }
  const double g = relevance_value < relevance_threshold ? 0.0 : relevance_value;
  if (normalized) *normalized = norm;
  if (gate) *gate = g;
  return g * (sum / static_cast<double>(raw.size()));
}

LexiconScore lexicon_score(std::string_view response_text, std::span<const Utterance> history,
                           const Lexicon& lexicon, double relevance_threshold) {
  LexiconScore score;
  const auto tokens = tokenize(response_text);
  score.matches = match_phrases(tokens, lexicon);
  for (const auto& m : score.matches) {
    const auto& e = lexicon.entries()[m.entry];
    score.raw[positive_index(e.behavior)] += e.weight;
  }
  score.relevance = relevance(tokens, history_tokens(history));
  score.overall = combine_lexicon_score(score.raw, score.relevance, relevance_threshold, &score.normalized, &score.gate);
  return score;
}

std::vector<LexiconResponseScore> score_all_lexicon(const DialogueSet& dialogues, const ResponseTable& responses,
                                                    const Lexicon& lexicon, double relevance_threshold) {
  std::vector<LexiconResponseScore> out;
  for (const auto& d : dialogues.dialogues())
    for (const auto* r : responses.for_dialogue(d.id))
      out.push_back({d.id, r->model_id, lexicon_score(r->text, d.history(), lexicon, relevance_threshold)});
  return out;
}

std::map<std::string, AggregateStat> aggregate_lexicon(std::span<const LexiconResponseScore> scores) {
  std::map<std::string, std::vector<double>> by_model;
  for (const auto& s : scores) by_model[s.model_id].push_back(s.score.overall);
  std::map<std::string, AggregateStat> out;
  for (const auto& [model, values] : by_model) out.emplace(model, *aggregate(values));
  return out;
}

void write_lexicon_jsonl(std::ostream& out, std::span<const LexiconResponseScore> scores) {
  for (const auto& s : scores) {
    json raw = json::object(), norm = json::object();
    for (std::size_t i = 0; i < kPositiveBehaviors.size(); ++i) {
      raw[std::string(behavior_id(kPositiveBehaviors[i]))] = s.score.raw[i];
      norm[std::string(behavior_id(kPositiveBehaviors[i]))] = s.score.normalized[i];
    }
    out << json{{"dialogue_id", s.dialogue_id}, {"model_id", s.model_id}, {"overall", s.score.overall},
                {"relevance", s.score.relevance}, {"raw", raw}, {"normalized", norm}}
               .dump()
        << '\n';
  }
}

std::vector<LexiconResponseScore> read_lexicon_jsonl(std::istream& in) {
  std::vector<LexiconResponseScore> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      LexiconResponseScore s;
      s.dialogue_id = j.at("dialogue_id").get<std::string>();
      s.model_id = j.at("model_id").get<std::string>();
      s.score.overall = j.at("overall").get<double>();
      s.score.relevance = j.value("relevance", 0.0);
      for (std::size_t i = 0; i < kPositiveBehaviors.size(); ++i) {
        const std::string key(behavior_id(kPositiveBehaviors[i]));
        if (j.contains("raw")) s.score.raw[i] = j["raw"].value(key, 0.0);
        if (j.contains("normalized")) s.score.normalized[i] = j["normalized"].value(key, 0.0);
      }
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw MalformedRecord(line_no, e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<LexiconCandidate> build_lexicon(std::span<const std::string> positives,
                                            std::span<const std::string> background,
                                            const std::map<BehaviorType, std::vector<std::string>>& seeds,
                                            const LexiconBuildOptions& options) {
  if (positives.empty()) throw EmptyCorpus("positive");
  if (background.empty()) throw EmptyCorpus("background");
  const std::size_t max_n = std::clamp<std::size_t>(options.max_n, 1, kMaxPhraseTokens);

  struct Counts {
    std::map<std::string, std::size_t> grams;
    std::array<std::size_t, kMaxPhraseTokens + 1> totals{};
  };
  auto count = [&](std::span<const std::string> texts, std::vector<std::set<std::string>>* per_doc) {
    Counts c;
    for (const auto& text : texts) {
      const auto tokens = tokenize(text);
      std::set<std::string> present;
      for (std::size_t n = 1; n <= max_n; ++n) {
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
          ++c.totals[n];
          const bool has_punct = std::any_of(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                             tokens.begin() + static_cast<std::ptrdiff_t>(i + n),
                                             [](const std::string& t) { return is_punctuation_token(t); });
          if (has_punct) continue;
          auto key = join_tokens(tokens, i, i + n);
          ++c.grams[key];
          if (per_doc) present.insert(std::move(key));
        }
      }
      if (per_doc) per_doc->push_back(std::move(present));
    }
    return c;
  };
  std::vector<std::set<std::string>> pos_docs;
  const auto pos = count(positives, &pos_docs);
  const auto bg = count(background, nullptr);

  // Which behaviours' seeds occur in each positive response.
  std::vector<std::set<BehaviorType>> doc_seeds(positives.size());
  for (std::size_t d = 0; d < positives.size(); ++d) {
    const auto tokens = tokenize(positives[d]);
    for (const auto& [behavior, phrases] : seeds)
      for (const auto& phrase : phrases)
        if (contains_phrase(tokens, tokenize(phrase))) {
          doc_seeds[d].insert(behavior);
          break;
        }
  }

  std::map<std::optional<BehaviorType>, std::vector<LexiconCandidate>> pools;
  for (const auto& [gram, c_pos] : pos.grams) {
    if (c_pos < options.min_count) continue;
    const auto n = static_cast<std::size_t>(std::count(gram.begin(), gram.end(), ' ')) + 1;
    const auto bg_it = bg.grams.find(gram);
    const double c_bg = bg_it == bg.grams.end() ? 0.0 : static_cast<double>(bg_it->second);
    const double p_pos = (static_cast<double>(c_pos) + 1.0) / (static_cast<double>(pos.totals[n]) + 1.0);
    const double p_bg = (c_bg + 1.0) / (static_cast<double>(bg.totals[n]) + 1.0);
    const double log_odds = std::log(p_pos / p_bg);
    if (!(log_odds > 0.0)) continue;

    std::map<BehaviorType, std::size_t> co;
    for (std::size_t d = 0; d < pos_docs.size(); ++d)
      if (pos_docs[d].contains(gram))
        for (auto b : doc_seeds[d]) ++co[b];
    std::optional<BehaviorType> assigned;
    std::size_t best = 0;
    bool tied = false;
    for (const auto& [b, k] : co) {
      if (k > best) {
        best = k;
        assigned = b;
        tied = false;
      } else if (k == best) {
        tied = true;
      }
    }
    if (tied || best == 0) assigned.reset();
    pools[assigned].push_back({tokenize(gram), assigned, 0.0, log_odds});
  }

  std::vector<LexiconCandidate> kept;
  auto take = [&](std::optional<BehaviorType> key) {
    auto it = pools.find(key);
    if (it == pools.end()) return;
    auto& pool = it->second;
    std::sort(pool.begin(), pool.end(), [](const LexiconCandidate& a, const LexiconCandidate& b) {
      if (a.log_odds != b.log_odds) return a.log_odds > b.log_odds;
      if (a.phrase.size() != b.phrase.size()) return a.phrase.size() < b.phrase.size();
      return a.phrase < b.phrase;
    });
    for (std::size_t i = 0; i < pool.size() && i < options.top_k; ++i) kept.push_back(pool[i]);
  };
  for (auto b : kPositiveBehaviors) take(b);
  take(std::nullopt);

  if (!kept.empty()) {
    const auto [lo, hi] = std::minmax_element(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      return a.log_odds < b.log_odds;
    });
    const double min = lo->log_odds, max = hi->log_odds;
    for (auto& c : kept) c.weight = max > min ? 0.01 + 0.99 * (c.log_odds - min) / (max - min) : 1.0;
  }
  return kept;
}

void write_lexicon_candidates(std::ostream& out, std::span<const LexiconCandidate> candidates) {
  out << "phrase\tbehavior\tweight\tlog_odds\n";
  for (const auto& c : candidates) {
    out << join_tokens(c.phrase) << '\t' << (c.behavior ? behavior_id(*c.behavior) : "unassigned") << '\t'
        << format_fixed(c.weight, 4) << '\t' << format_fixed(c.log_odds, 6) << '\n';
  }
}

std::map<BehaviorType, std::vector<std::string>> parse_seed_phrases(std::istream& in) {
  std::map<BehaviorType, std::vector<std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.starts_with('#')) continue;
    const auto fields = split_tabs(line);
    if (line_no == 1 && fields.size() == 2 && fields[0] == "phrase" && fields[1] == "behavior") continue;
    if (fields.size() != 2) throw MalformedEntry(line_no, "expected 'phrase<TAB>behavior'");
    const auto behavior = parse_behavior_id(fields[1]);
    if (!behavior || !is_positive(*behavior)) throw MalformedEntry(line_no, "unknown behavior '" + fields[1] + "'");
    out[*behavior].push_back(fields[0]);
  }
  return out;
}

}  // namespace empatheval
