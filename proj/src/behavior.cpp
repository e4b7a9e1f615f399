#include "empatheval/behavior.hpp"

#include <istream>
#include <ostream>
#include <regex>
#include <stdexcept>

#include <json.hpp>

#include "empatheval/errors.hpp"
#include "empatheval/parallel.hpp"

namespace empatheval {

using json = nlohmann::json;

namespace {

std::string number_word(std::size_t n) {
  static constexpr std::array<std::string_view, 21> words = {
      "zero",  "one",    "two",    "three",    "four",     "five",    "six",
      "seven", "eight",  "nine",   "ten",      "eleven",   "twelve",  "thirteen",
      "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen", "twenty"};
  return n < words.size() ? std::string(words[n]) : std::to_string(n);
}

std::string render_history(std::span<const Utterance> history) {
  std::string out;
  for (const auto& u : history) {
    out += u.role == Role::Seeker ? "User: " : "Listener: ";
    out += u.text;
    out += '\n';
  }
  return out;
}

constexpr std::string_view kOutputInstruction =
    "Please make sure to provide the output only as 'yes' or 'no' for each response.";

std::string format_reminder(std::size_t n) {
  std::string r = "\n\nYour previous answer could not be read. Reply with exactly " + std::to_string(n) +
                  (n == 1 ? " line" : " lines") + " and nothing else";
  r += n == 1 ? ": yes or no." : ", line k being 'Assistant k: yes' or 'Assistant k: no'.";
  return r;
}

}  // namespace

std::string_view behavior_id(BehaviorType b) {
  switch (b) {
    case BehaviorType::Mirroring: return "mirroring";
    case BehaviorType::EmpathicConcern: return "empathic_concern";
    case BehaviorType::Consolation: return "consolation";
    case BehaviorType::AltruisticHelping: return "altruistic_helping";
    case BehaviorType::PerspectiveTaking: return "perspective_taking";
    case BehaviorType::Judgmental: return "judgmental";
    case BehaviorType::Apathetic: return "apathetic";
  }
  return {};
}

std::optional<BehaviorType> parse_behavior_id(std::string_view id) {
  for (auto b : kAllBehaviors)
    if (behavior_id(b) == id) return b;
  return std::nullopt;
}

std::string_view behavior_display_name(BehaviorType b) {
  switch (b) {
    case BehaviorType::Mirroring: return "Mirroring";
    case BehaviorType::EmpathicConcern: return "Empathic Concern";
    case BehaviorType::Consolation: return "Consolation";
    case BehaviorType::AltruisticHelping: return "Altruistic Helping";
    case BehaviorType::PerspectiveTaking: return "Perspective Taking";
    case BehaviorType::Judgmental: return "Judgmental";
    case BehaviorType::Apathetic: return "Apathetic";
  }
  return {};
}

std::string_view behavior_prompt_term(BehaviorType b) {
  switch (b) {
    case BehaviorType::Mirroring: return "mirroring";
    case BehaviorType::EmpathicConcern: return "empathetic concern";
    case BehaviorType::Consolation: return "consolation";
    case BehaviorType::AltruisticHelping: return "altruistic helping";
    case BehaviorType::PerspectiveTaking: return "perspective-taking";
    case BehaviorType::Judgmental: return "judgmental";
    case BehaviorType::Apathetic: return "apathetic";
  }
  return {};
}

std::string_view behavior_definition(BehaviorType b) {
  switch (b) {
    case BehaviorType::Mirroring:
      return "reflecting the other person's emotional tone and expressions back to them, so their feelings "
             "are shared.";
    case BehaviorType::EmpathicConcern:
      return "warmth and care directed at the other person, prompted by their wellbeing or need.";
    case BehaviorType::Consolation:
      return "offering comfort or reassurance to someone who is distressed.";
    case BehaviorType::AltruisticHelping:
      return "offering practical help or advice for the other person's benefit, expecting nothing back.";
    case BehaviorType::PerspectiveTaking:
      return "imagining the situation from the other person's point of view and responding from there.";
    case BehaviorType::Judgmental:
      return "criticising, blaming or moralising about the other person or their choices.";
    case BehaviorType::Apathetic:
      return "indifference or lack of interest in the other person's feelings or situation.";
  }
  return {};
}

std::string build_behavior_prompt(BehaviorType behavior, std::span<const Utterance> history,
                                  std::span<const CandidateResponse> responses, bool batch,
                                  const BehaviorPromptOptions& options) {
  if (responses.empty()) throw std::invalid_argument("build_behavior_prompt: responses must be non-empty");
  if (!batch && responses.size() != 1)
    throw std::invalid_argument("build_behavior_prompt: single mode takes exactly one response");

  const std::string term = "'" + std::string(behavior_prompt_term(behavior)) + "'";
  std::string p;
  p += "[template ";
  p += options.version;
  p += "]\n";
  if (responses.size() == 1) {
    p += "You will be given a dialog history and a response from an assistant. Please identify whether the "
         "response indicates the presence of " +
         term + " characteristic in it in relation to the user utterances in the dialog history.\n";
  } else {
    p += "You will be given a dialog history and responses from " + number_word(responses.size()) +
         " different assistants. Please identify whether the responses indicate the presence of " + term +
         " characteristic in them in relation to the user utterances in the dialog history.\n";
  }
  if (options.include_definitions) {
    p += "Definition of " + term + ": ";
    p += behavior_definition(behavior);
    p += '\n';
  }
  p += "\nDialog history:\n";
  p += render_history(history);
  p += '\n';
  for (std::size_t i = 0; i < responses.size(); ++i) {
    p += "Assistant " + std::to_string(i + 1) + ": ";
    p += responses[i].text;
    p += '\n';
  }
  p += '\n';
  p += kOutputInstruction;
  return p;
}

std::vector<VerdictToken> scan_verdicts(std::string_view raw) {
  static const std::regex word(R"(\b(yes|no)\b)", std::regex::icase);
  std::vector<VerdictToken> out;
  std::size_t start = 0;
  while (start <= raw.size()) {
    auto end = raw.find('\n', start);
    if (end == std::string_view::npos) end = raw.size();
    const std::string line(raw.substr(start, end - start));
    for (std::sregex_iterator it(line.begin(), line.end(), word), last; it != last; ++it) {
      const auto w = (*it)[1].str();
      out.push_back({w.size() == 3, line});
    }
    start = end + 1;
  }
  return out;
}

std::vector<bool> parse_verdicts(std::string_view raw, std::size_t expected) {
  if (expected == 0) throw std::invalid_argument("parse_verdicts: expected must be >= 1");
  const auto tokens = scan_verdicts(raw);
  if (tokens.size() != expected)
    throw Unparseable(std::string(raw), tokens.size(), "expected " + std::to_string(expected) + " yes/no verdicts");
  std::vector<bool> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.value);
  return out;
}

std::string render_verdicts(const std::vector<bool>& verdicts) {
  std::string out;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (i > 0) out += '\n';
    out += std::to_string(i + 1) + ". " + (verdicts[i] ? "yes" : "no");
  }
  return out;
}

std::vector<JudgeVerdict> judge_behavior(const Dialogue& dialogue, std::span<const CandidateResponse> responses,
                                         BehaviorType behavior, Judge& judge, const BehaviorJudgeOptions& options) {
  auto ask = [&](std::span<const CandidateResponse> group) {
    const auto prompt = build_behavior_prompt(behavior, dialogue.history(), group, true, options.prompt);
    for (int attempt = 0;; ++attempt) {
      JudgeRequest req;
      req.model_name = options.model_name;
      req.max_tokens = options.max_tokens;
      req.prompt_version = options.prompt.version;
      req.messages.push_back({MessageRole::User, attempt == 0 ? prompt : prompt + format_reminder(group.size())});
      const auto reply = judge.complete(req);
      const auto tokens = scan_verdicts(reply.text);
      if (tokens.size() == group.size()) {
        std::vector<JudgeVerdict> out;
        for (std::size_t i = 0; i < group.size(); ++i)
          out.push_back({dialogue.id, group[i].model_id, behavior, tokens[i].value, tokens[i].line,
                         options.prompt.version});
        return out;
      }
      if (attempt >= options.retry_budget)
        throw Unparseable(reply.text, tokens.size(), "expected " + std::to_string(group.size()) + " yes/no verdicts");
    }
  };

  if (options.mode == JudgeMode::Batch) return ask(responses);
  std::vector<JudgeVerdict> out;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    auto one = ask(responses.subspan(i, 1));
    out.push_back(std::move(one.front()));
  }
  return out;
}

std::vector<JudgeVerdict> judge_all_behaviors(const DialogueSet& dialogues, const ResponseTable& responses,
                                              std::span<const BehaviorType> behaviors, Judge& judge,
                                              const BehaviorJudgeOptions& options) {
  struct Task {
    const Dialogue* dialogue;
    BehaviorType behavior;
    std::size_t group;  // index into groups
    std::size_t offset;
    std::size_t count;
  };
  std::vector<std::vector<CandidateResponse>> groups;
  std::vector<Task> tasks;
  for (const auto& d : dialogues.dialogues()) {
    std::vector<CandidateResponse> group;
    for (const auto* r : responses.for_dialogue(d.id)) group.push_back({r->model_id, r->text});
    if (group.empty()) continue;
    groups.push_back(std::move(group));
    const auto& g = groups.back();
    for (auto b : behaviors) {
      if (options.mode == JudgeMode::Batch) {
        tasks.push_back({&d, b, groups.size() - 1, 0, g.size()});
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) tasks.push_back({&d, b, groups.size() - 1, i, 1});
      }
    }
  }

  std::vector<std::vector<JudgeVerdict>> results(tasks.size());
  parallel_for(tasks.size(), judge.parallelism(), [&](std::size_t i) {
    const auto& t = tasks[i];
    std::span<const CandidateResponse> group(groups[t.group]);
    results[i] = judge_behavior(*t.dialogue, group.subspan(t.offset, t.count), t.behavior, judge, options);
  });

  std::vector<JudgeVerdict> out;
  for (auto& r : results)
    for (auto& v : r) out.push_back(std::move(v));
  return out;
}

BehaviorProportions aggregate_behavior(std::span<const JudgeVerdict> verdicts) {
  BehaviorProportions out;
  for (const auto& v : verdicts) {
    auto& cell = out[v.model_id][v.behavior];
    ++cell.total;
    if (v.verdict) ++cell.yes;
  }
  return out;
}

void write_verdicts_jsonl(std::ostream& out, std::span<const JudgeVerdict> verdicts) {
  for (const auto& v : verdicts) {
    out << json{{"dialogue_id", v.dialogue_id}, {"model_id", v.model_id}, {"behavior", behavior_id(v.behavior)},
                {"verdict", v.verdict}, {"raw", v.raw}, {"prompt_version", v.prompt_version}}
               .dump()
        << '\n';
  }
}

std::vector<JudgeVerdict> read_verdicts_jsonl(std::istream& in) {
  std::vector<JudgeVerdict> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      const auto behavior = parse_behavior_id(j.at("behavior").get<std::string>());
      if (!behavior) throw MalformedRecord(line_no, "unknown behavior '" + j.at("behavior").get<std::string>() + "'");
      out.push_back({j.at("dialogue_id").get<std::string>(), j.at("model_id").get<std::string>(), *behavior,
                     j.at("verdict").get<bool>(), j.value("raw", std::string{}),
                     j.value("prompt_version", std::string{})});
    } catch (const json::exception& e) {
      throw MalformedRecord(line_no, e.what());
    }
  }
  return out;
}

}  // namespace empatheval
