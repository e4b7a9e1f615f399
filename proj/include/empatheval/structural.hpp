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
#include "empatheval/stats.hpp"

namespace empatheval {

enum class StructuralDimension { EmotionalReaction = 0, Interpretation = 1, Exploration = 2 };

inline constexpr std::array<StructuralDimension, 3> kStructuralDimensions = {
    StructuralDimension::EmotionalReaction, StructuralDimension::Interpretation, StructuralDimension::Exploration};

/// Snake-case id used in prompts and exported files ("emotional_reaction", ...).
std::string_view dimension_id(StructuralDimension dim);
std::string_view dimension_display_name(StructuralDimension dim);

enum class StructuralLevel : int { No = 0, Weak = 1, Strong = 2 };

std::string_view level_name(StructuralLevel level);

/// Levels indexed by StructuralDimension.
using StructuralLevels = std::array<StructuralLevel, 3>;

inline StructuralLevel& at(StructuralLevels& levels, StructuralDimension dim) {
  return levels[static_cast<std::size_t>(dim)];
}
inline StructuralLevel at(const StructuralLevels& levels, StructuralDimension dim) {
  return levels[static_cast<std::size_t>(dim)];
}

struct StructuralScore {
  std::string dialogue_id;
  std::string model_id;
  StructuralLevels levels{};
  std::optional<std::string> rationale;

  friend bool operator==(const StructuralScore&, const StructuralScore&) = default;
};

inline constexpr std::string_view kStructuralPromptVersion = "structural-v1";

/// Judge prompt asking for all three dimensions at once. The version string
/// is embedded so a template change always changes the prompt (and cache key).
std::string build_structural_prompt(std::span<const Utterance> history, std::string_view response,
                                    std::string_view version = kStructuralPromptVersion);

/// Variant asking for a single dimension.
std::string build_structural_dimension_prompt(std::span<const Utterance> history, std::string_view response,
                                              StructuralDimension dim,
                                              std::string_view version = kStructuralPromptVersion);

/// Extracts the three labels in dimension order. Accepts keyed lines
/// ("interpretation: weak") anywhere in the text, or else exactly three bare
/// no/weak/strong words. Throws Unparseable otherwise.
StructuralLevels parse_structural_labels(std::string_view raw);

/// Single-label variant for per-dimension prompts.
StructuralLevel parse_structural_label(std::string_view raw);

/// Canonical text form, parseable by parse_structural_labels.
std::string render_structural_labels(const StructuralLevels& levels);

struct StructuralJudgement {
  StructuralLevels levels{};
  std::optional<std::string> rationale;
};

class StructuralBackend {
 public:
  virtual ~StructuralBackend() = default;
  virtual StructuralJudgement classify(std::span<const Utterance> history, std::string_view response) = 0;
  virtual std::size_t parallelism() const { return 1; }
  virtual std::string name() const = 0;
};

/// Deterministic cue-phrase backend. Counts distinct cues per dimension
/// (greedy longest match, so "it sounds like" is one cue): 0 -> No, 1 -> Weak,
/// 2+ -> Strong.
class HeuristicStructuralBackend final : public StructuralBackend {
 public:
  StructuralJudgement classify(std::span<const Utterance> history, std::string_view response) override;
  std::string name() const override { return "heuristic"; }

  /// Distinct cues found in `response` for one dimension.
  static std::size_t cue_count(std::string_view response, StructuralDimension dim);
};

struct LlmStructuralOptions {
  std::string model_name = "gpt-3.5-turbo";
  /// One judge call per dimension instead of one call for all three.
  bool per_dimension = false;
  /// Re-asks with a stricter format reminder after unparseable output.
  int retry_budget = 2;
  int max_tokens = 64;
  std::string prompt_version = std::string(kStructuralPromptVersion);
};

class LlmStructuralBackend final : public StructuralBackend {
 public:
  LlmStructuralBackend(Judge& judge, LlmStructuralOptions options = {});

  StructuralJudgement classify(std::span<const Utterance> history, std::string_view response) override;
  std::size_t parallelism() const override { return judge_.parallelism(); }
  std::string name() const override { return "llm"; }

 private:
  Judge& judge_;
  LlmStructuralOptions options_;
};

StructuralScore classify_structural(const Dialogue& dialogue, const ModelResponse& response,
                                    StructuralBackend& backend);

/// Classifies every response (dialogue order, then model order), running up
/// to backend.parallelism() classifications at once.
std::vector<StructuralScore> classify_all_structural(const DialogueSet& dialogues, const ResponseTable& responses,
                                                     StructuralBackend& backend);

using StructuralAggregate = std::array<AggregateStat, 3>;

/// Mean and population SD of the 0/1/2 encodings per model and dimension.
std::map<std::string, StructuralAggregate> aggregate_structural(std::span<const StructuralScore> scores);

/// JSONL: {"dialogue_id","model_id","emotional_reaction","interpretation","exploration"}.
void write_structural_jsonl(std::ostream& out, std::span<const StructuralScore> scores);
std::vector<StructuralScore> read_structural_jsonl(std::istream& in);

}  // namespace empatheval
