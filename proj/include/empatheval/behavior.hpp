#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "empatheval/corpus.hpp"
#include "empatheval/judge_client.hpp"

namespace empatheval {

/// The five empathetic behaviour types followed by the two negative probes.
enum class BehaviorType {
  Mirroring,
  EmpathicConcern,
  Consolation,
  AltruisticHelping,
  PerspectiveTaking,
  Judgmental,
  Apathetic,
};

inline constexpr std::array<BehaviorType, 7> kAllBehaviors = {
    BehaviorType::Mirroring,         BehaviorType::EmpathicConcern, BehaviorType::Consolation,
    BehaviorType::AltruisticHelping, BehaviorType::PerspectiveTaking, BehaviorType::Judgmental,
    BehaviorType::Apathetic};

inline constexpr std::array<BehaviorType, 5> kPositiveBehaviors = {
    BehaviorType::Mirroring, BehaviorType::EmpathicConcern, BehaviorType::Consolation,
    BehaviorType::AltruisticHelping, BehaviorType::PerspectiveTaking};

inline constexpr std::array<BehaviorType, 2> kNegativeBehaviors = {BehaviorType::Judgmental,
                                                                   BehaviorType::Apathetic};

constexpr bool is_positive(BehaviorType b) { return b != BehaviorType::Judgmental && b != BehaviorType::Apathetic; }

/// File/CLI id: "mirroring", "empathic_concern", ..., "judgmental", "apathetic".
std::string_view behavior_id(BehaviorType b);
std::optional<BehaviorType> parse_behavior_id(std::string_view id);
std::string_view behavior_display_name(BehaviorType b);
/// Term substituted into the judge prompt's quoted slot.
std::string_view behavior_prompt_term(BehaviorType b);
std::string_view behavior_definition(BehaviorType b);

inline constexpr std::string_view kBehaviorPromptVersion = "behavior-v1";

struct CandidateResponse {
  std::string model_id;
  std::string text;
};

struct BehaviorPromptOptions {
  /// Adds a short definition of the behaviour under the instruction.
  bool include_definitions = true;
  std::string version = std::string(kBehaviorPromptVersion);
};

/// Judge prompt. Responses are shown as "Assistant 1..N" in the given order;
/// model ids never reach the judge. `batch = false` requires exactly one response.
std::string build_behavior_prompt(BehaviorType behavior, std::span<const Utterance> history,
                                  std::span<const CandidateResponse> responses, bool batch,
                                  const BehaviorPromptOptions& options = {});

/// One recognised yes/no token and the output line it came from.
struct VerdictToken {
  bool value = false;
  std::string line;
};

/// Every whole-word yes/no (any case) in reading order.
std::vector<VerdictToken> scan_verdicts(std::string_view raw);

/// Exactly `expected` verdicts in order, or Unparseable.
std::vector<bool> parse_verdicts(std::string_view raw, std::size_t expected);

/// "1. yes\n2. no\n..." as a well-behaved judge would answer.
std::string render_verdicts(const std::vector<bool>& verdicts);

struct JudgeVerdict {
  std::string dialogue_id;
  std::string model_id;
  BehaviorType behavior = BehaviorType::Mirroring;
  bool verdict = false;
  /// The unedited output line that produced the verdict.
  std::string raw;
  std::string prompt_version;

  friend bool operator==(const JudgeVerdict&, const JudgeVerdict&) = default;
};

enum class JudgeMode { Single, Batch };

struct BehaviorJudgeOptions {
  std::string model_name = "gpt-3.5-turbo";
  JudgeMode mode = JudgeMode::Single;
  BehaviorPromptOptions prompt;
  int retry_budget = 2;
  int max_tokens = 256;
};

/// Verdicts for one dialogue and behaviour, in the order of `responses`.
/// Batch mode makes one judge call for all responses; single mode one per response.
std::vector<JudgeVerdict> judge_behavior(const Dialogue& dialogue, std::span<const CandidateResponse> responses,
                                         BehaviorType behavior, Judge& judge,
                                         const BehaviorJudgeOptions& options = {});

/// Runs judge_behavior over every dialogue and behaviour, up to
/// judge.parallelism() calls at once. Output order: dialogue, behaviour, model.
std::vector<JudgeVerdict> judge_all_behaviors(const DialogueSet& dialogues, const ResponseTable& responses,
                                              std::span<const BehaviorType> behaviors, Judge& judge,
                                              const BehaviorJudgeOptions& options = {});

struct ProportionCell {
  std::size_t yes = 0;
  std::size_t total = 0;

  double proportion() const { return total == 0 ? 0.0 : static_cast<double>(yes) / static_cast<double>(total); }
  friend bool operator==(const ProportionCell&, const ProportionCell&) = default;
};

/// model_id -> behaviour -> counts.
using BehaviorProportions = std::map<std::string, std::map<BehaviorType, ProportionCell>>;

BehaviorProportions aggregate_behavior(std::span<const JudgeVerdict> verdicts);

/// JSONL: {"dialogue_id","model_id","behavior","verdict","raw","prompt_version"}.
void write_verdicts_jsonl(std::ostream& out, std::span<const JudgeVerdict> verdicts);
std::vector<JudgeVerdict> read_verdicts_jsonl(std::istream& in);

}  // namespace empatheval
