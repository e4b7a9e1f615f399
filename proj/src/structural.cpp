#include "empatheval/structural.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <regex>
#include <set>

#include <json.hpp>

#include "empatheval/errors.hpp"
#include "empatheval/parallel.hpp"
#include "empatheval/text.hpp"

namespace empatheval {

using json = nlohmann::json;

namespace {

std::string render_history(std::span<const Utterance> history) {
  std::string out;
  for (const auto& u : history) {
    out += u.role == Role::Seeker ? "Seeker: " : "Supporter: ";
    out += u.text;
    out += '\n';
  }
  return out;
}

std::string_view dimension_question(StructuralDimension dim) {
  switch (dim) {
    case StructuralDimension::EmotionalReaction:
      return "Does the response react emotionally, addressing the emotional concerns of the seeker "
             "(warmth, compassion, concern)?";
    case StructuralDimension::Interpretation:
      return "Does the response show understanding, reaffirming and understanding the issues the seeker "
             "describes (e.g. by naming what the seeker feels or experiences)?";
    case StructuralDimension::Exploration:
      return "Does the response explore, asking questions for deeper understanding of the seeker's situation?";
  }
  return {};
}

std::optional<StructuralLevel> level_from_word(std::string word) {
  std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return std::tolower(c); });
  if (word == "no") return StructuralLevel::No;
  if (word == "weak") return StructuralLevel::Weak;
  if (word == "strong") return StructuralLevel::Strong;
  return std::nullopt;
}

std::optional<StructuralDimension> dimension_from_key(std::string key) {
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
  if (key.starts_with("emotional")) return StructuralDimension::EmotionalReaction;
  if (key == "interpretation") return StructuralDimension::Interpretation;
  if (key == "exploration") return StructuralDimension::Exploration;
  return std::nullopt;
}

const std::regex& keyed_pattern() {
  static const std::regex re(R"((emotional[ _-]*reaction|interpretation|exploration)\**\s*[:=-]\s*\**\s*([A-Za-z]+))",
                             std::regex::icase);
  return re;
}

const std::regex& bare_pattern() {
  static const std::regex re(R"(\b(no|weak|strong)\b)", std::regex::icase);
  return re;
}

// Cue phrases in canonical token form.
using CueList = std::vector<TokenSequence>;

CueList make_cues(std::initializer_list<std::string_view> phrases) {
  CueList cues;
  for (auto p : phrases) cues.push_back(tokenize(p));
  return cues;
}

const CueList& cues_for(StructuralDimension dim) {
  static const CueList emotional = make_cues({
      "sorry", "so sorry", "awful", "terrible", "horrible", "oh no", "that sucks", "so sad", "sad to hear",
      "heartbreaking", "wow", "congratulations", "congrats", "that's great", "that's wonderful", "that's amazing",
      "glad to hear", "happy for you", "proud of you", "i feel for you", "my heart goes out", "yikes", "ugh",
      "how exciting", "!"});
  static const CueList interpretation = make_cues({
      "it sounds like", "sounds like", "i understand", "i can understand", "i can imagine", "i can only imagine",
      "that must be", "must have been", "must be", "i know how", "i know what", "i've been there",
      "i have been there", "it seems", "seems like", "you must feel", "you feel", "i get it", "makes sense",
      "i would feel", "i'd feel", "going through", "i would be", "i'd be"});
  static const CueList exploration = make_cues({
      "?", "tell me more", "what happened", "how do you feel", "how are you", "how did", "what did", "did you",
      "do you", "have you", "are you", "would you like", "can you share", "want to talk"});
  switch (dim) {
    case StructuralDimension::EmotionalReaction: return emotional;
    case StructuralDimension::Interpretation: return interpretation;
    case StructuralDimension::Exploration: return exploration;
  }
  return emotional;
}

bool matches_at(const TokenSequence& tokens, std::size_t pos, const TokenSequence& phrase) {
  if (phrase.empty() || pos + phrase.size() > tokens.size()) return false;
  return std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(pos));
}

StructuralLevel level_for_count(std::size_t cues) {
  if (cues == 0) return StructuralLevel::No;
  return cues == 1 ? StructuralLevel::Weak : StructuralLevel::Strong;
}

constexpr std::string_view kFormatReminder =
    "\n\nYour previous answer could not be read. Reply with exactly these three lines and nothing else:\n"
    "emotional_reaction: <no|weak|strong>\ninterpretation: <no|weak|strong>\nexploration: <no|weak|strong>";

constexpr std::string_view kSingleFormatReminder =
    "\n\nYour previous answer could not be read. Reply with exactly one word: no, weak, or strong.";

constexpr std::string_view kSystemPrompt = "You are a careful annotator of empathy in supportive conversations.";

}  // namespace

std::string_view dimension_id(StructuralDimension dim) {
  switch (dim) {
    case StructuralDimension::EmotionalReaction: return "emotional_reaction";
    case StructuralDimension::Interpretation: return "interpretation";
    case StructuralDimension::Exploration: return "exploration";
  }
  return {};
}

std::string_view dimension_display_name(StructuralDimension dim) {
  switch (dim) {
    case StructuralDimension::EmotionalReaction: return "Emotional Reaction";
    case StructuralDimension::Interpretation: return "Interpretation";
    case StructuralDimension::Exploration: return "Exploration";
  }
  return {};
}

std::string_view level_name(StructuralLevel level) {
  switch (level) {
    case StructuralLevel::No: return "no";
    case StructuralLevel::Weak: return "weak";
    case StructuralLevel::Strong: return "strong";
  }
  return {};
}

std::string build_structural_prompt(std::span<const Utterance> history, std::string_view response,
                                    std::string_view version) {
  std::string p;
  p += "[template ";
  p += version;
  p += "]\n";
  p += "Rate how empathetic a candidate supporter response is, given the conversation so far.\n\n";
  p += "Dialog history:\n";
  p += render_history(history);
  p += "\nCandidate supporter response:\n";
  p += response;
  p += "\n\nRate the candidate response on three dimensions. For each one answer no, weak, or strong.\n";
  for (auto dim : kStructuralDimensions) {
    p += "- ";
    p += dimension_id(dim);
    p += ": ";
    p += dimension_question(dim);
    p += '\n';
  }
  p += "\nOutput exactly three lines and nothing else:\n";
  for (auto dim : kStructuralDimensions) {
    p += dimension_id(dim);
    p += ": <no|weak|strong>\n";
  }
  return p;
}

std::string build_structural_dimension_prompt(std::span<const Utterance> history, std::string_view response,
                                              StructuralDimension dim, std::string_view version) {
  std::string p;
  p += "[template ";
  p += version;
  p += "/";
  p += dimension_id(dim);
  p += "]\n";
  p += "Rate how empathetic a candidate supporter response is, given the conversation so far.\n\n";
  p += "Dialog history:\n";
  p += render_history(history);
  p += "\nCandidate supporter response:\n";
  p += response;
  p += "\n\n";
  p += dimension_question(dim);
  p += "\nAnswer with exactly one word: no, weak, or strong.\n";
  return p;
}

StructuralLevels parse_structural_labels(std::string_view raw) {
  const std::string text(raw);
  std::array<std::optional<std::string>, 3> keyed;
  std::size_t keyed_found = 0;
  for (std::sregex_iterator it(text.begin(), text.end(), keyed_pattern()), end; it != end; ++it) {
    const auto dim = dimension_from_key((*it)[1].str());
    if (!dim) continue;
    auto& slot = keyed[static_cast<std::size_t>(*dim)];
    if (!slot) {
      slot = (*it)[2].str();
      ++keyed_found;
    }
  }
  if (keyed_found == 3) {
    StructuralLevels levels{};
    for (std::size_t i = 0; i < 3; ++i) {
      const auto level = level_from_word(*keyed[i]);
      if (!level) throw Unparseable(text, 3, "label '" + *keyed[i] + "' is not one of no/weak/strong");
      levels[i] = *level;
    }
    return levels;
  }

  std::vector<StructuralLevel> bare;
  for (std::sregex_iterator it(text.begin(), text.end(), bare_pattern()), end; it != end; ++it)
    bare.push_back(*level_from_word((*it)[1].str()));
  if (bare.size() != 3) throw Unparseable(text, bare.size(), "expected 3 labels");
  return {bare[0], bare[1], bare[2]};
}

StructuralLevel parse_structural_label(std::string_view raw) {
  const std::string text(raw);
  std::vector<StructuralLevel> found;
  for (std::sregex_iterator it(text.begin(), text.end(), bare_pattern()), end; it != end; ++it)
    found.push_back(*level_from_word((*it)[1].str()));
  if (found.size() != 1) throw Unparseable(text, found.size(), "expected 1 label");
  return found.front();
}

std::string render_structural_labels(const StructuralLevels& levels) {
  std::string out;
  for (auto dim : kStructuralDimensions) {
    if (!out.empty()) out += '\n';
    out += dimension_id(dim);
    out += ": ";
    out += level_name(at(levels, dim));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::size_t HeuristicStructuralBackend::cue_count(std::string_view response, StructuralDimension dim) {
  const auto tokens = tokenize(response);
  const auto& cues = cues_for(dim);
  std::set<std::size_t> hit;
  for (std::size_t pos = 0; pos < tokens.size();) {
    std::size_t best = cues.size();
    for (std::size_t c = 0; c < cues.size(); ++c)
      if (matches_at(tokens, pos, cues[c]) && (best == cues.size() || cues[c].size() > cues[best].size())) best = c;
    if (best == cues.size()) {
      ++pos;
    } else {
      hit.insert(best);
      pos += cues[best].size();
    }
  }
  return hit.size();
}

StructuralJudgement HeuristicStructuralBackend::classify(std::span<const Utterance>, std::string_view response) {
  StructuralJudgement j;
  for (auto dim : kStructuralDimensions) at(j.levels, dim) = level_for_count(cue_count(response, dim));
  return j;
}

LlmStructuralBackend::LlmStructuralBackend(Judge& judge, LlmStructuralOptions options)
    : judge_(judge), options_(std::move(options)) {}

StructuralJudgement LlmStructuralBackend::classify(std::span<const Utterance> history, std::string_view response) {
  auto ask = [&](const std::string& prompt, std::string_view reminder, auto parse) {
    for (int attempt = 0;; ++attempt) {
      JudgeRequest req;
      req.model_name = options_.model_name;
      req.max_tokens = options_.max_tokens;
      req.prompt_version = options_.prompt_version;
      req.messages.push_back({MessageRole::System, std::string(kSystemPrompt)});
      req.messages.push_back({MessageRole::User, attempt == 0 ? prompt : prompt + std::string(reminder)});
      auto reply = judge_.complete(req);
      try {
        return std::make_pair(parse(reply.text), std::move(reply.text));
      } catch (const Unparseable&) {
        if (attempt >= options_.retry_budget) throw;
      }
    }
  };

  StructuralJudgement out;
  if (!options_.per_dimension) {
    auto [levels, raw] = ask(build_structural_prompt(history, response, options_.prompt_version), kFormatReminder,
                             [](const std::string& t) { return parse_structural_labels(t); });
    out.levels = levels;
    out.rationale = std::move(raw);
    return out;
  }
  std::string rationale;
  for (auto dim : kStructuralDimensions) {
    auto [level, raw] =
        ask(build_structural_dimension_prompt(history, response, dim, options_.prompt_version),
            kSingleFormatReminder, [](const std::string& t) { return parse_structural_label(t); });
    at(out.levels, dim) = level;
    if (!rationale.empty()) rationale += '\n';
    rationale += std::string(dimension_id(dim)) + ": " + raw;
  }
  out.rationale = std::move(rationale);
  return out;
}

StructuralScore classify_structural(const Dialogue& dialogue, const ModelResponse& response,
                                    StructuralBackend& backend) {
  auto judgement = backend.classify(dialogue.history(), response.text);
  return {dialogue.id, response.model_id, judgement.levels, std::move(judgement.rationale)};
}

std::vector<StructuralScore> classify_all_structural(const DialogueSet& dialogues, const ResponseTable& responses,
                                                     StructuralBackend& backend) {
  std::vector<std::pair<const Dialogue*, const ModelResponse*>> work;
  for (const auto& d : dialogues.dialogues())
    for (const auto* r : responses.for_dialogue(d.id)) work.emplace_back(&d, r);

  std::vector<StructuralScore> out(work.size());
  parallel_for(work.size(), backend.parallelism(),
               [&](std::size_t i) { out[i] = classify_structural(*work[i].first, *work[i].second, backend); });
  return out;
}

std::map<std::string, StructuralAggregate> aggregate_structural(std::span<const StructuralScore> scores) {
  std::map<std::string, std::array<std::vector<double>, 3>> by_model;
  for (const auto& s : scores)
    for (std::size_t d = 0; d < 3; ++d) by_model[s.model_id][d].push_back(static_cast<int>(s.levels[d]));
  std::map<std::string, StructuralAggregate> out;
  for (const auto& [model, columns] : by_model) {
    StructuralAggregate agg{};
    for (std::size_t d = 0; d < 3; ++d) agg[d] = *aggregate(columns[d]);
    out.emplace(model, agg);
  }
  return out;
}

void write_structural_jsonl(std::ostream& out, std::span<const StructuralScore> scores) {
  for (const auto& s : scores) {
    json j{{"dialogue_id", s.dialogue_id}, {"model_id", s.model_id}};
    for (auto dim : kStructuralDimensions) j[std::string(dimension_id(dim))] = static_cast<int>(at(s.levels, dim));
    out << j.dump() << '\n';
  }
}

std::vector<StructuralScore> read_structural_jsonl(std::istream& in) {
  std::vector<StructuralScore> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      StructuralScore s;
      s.dialogue_id = j.at("dialogue_id").get<std::string>();
      s.model_id = j.at("model_id").get<std::string>();
      for (auto dim : kStructuralDimensions) {
        const int v = j.at(std::string(dimension_id(dim))).get<int>();
        if (v < 0 || v > 2) throw MalformedRecord(line_no, "structural level must be 0, 1 or 2");
        at(s.levels, dim) = static_cast<StructuralLevel>(v);
      }
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw MalformedRecord(line_no, e.what());
    }
  }
  return out;
}

}  // namespace empatheval
