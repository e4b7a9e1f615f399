#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace empatheval {

/// Model id under which the gold supporter reply is carried.
inline constexpr std::string_view kHumanModel = "human";

enum class Role { Seeker, Supporter };
enum class Split { Train, Valid, Test };

std::string_view to_string(Role role);
std::string_view to_string(Split split);

struct Utterance {
  Role role = Role::Seeker;
  std::string text;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct Dialogue {
  std::string id;
  std::string emotion_class;
  std::vector<Utterance> utterances;
  Split split = Split::Test;

  /// Turns shown to evaluators. When the dialogue ends on a supporter turn,
  /// that turn is the slot candidate responses fill, so it is left out;
  /// otherwise the whole dialogue is history.
  std::span<const Utterance> history() const;

  /// The final supporter turn when the dialogue ends on one.
  std::optional<std::string> gold_reply() const;

  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

/// Ordered, id-indexed collection of dialogues plus the declared label set.
class DialogueSet {
 public:
  DialogueSet() = default;
  explicit DialogueSet(std::set<std::string> emotion_labels);

  /// Validates the dialogue against every invariant; throws on violation.
  void add(Dialogue dialogue, std::size_t line_no = 0);

  const std::vector<Dialogue>& dialogues() const noexcept { return dialogues_; }
  const std::set<std::string>& emotion_labels() const noexcept { return emotion_labels_; }
  std::size_t size() const noexcept { return dialogues_.size(); }
  bool empty() const noexcept { return dialogues_.empty(); }

  const Dialogue* find(std::string_view id) const;

  friend bool operator==(const DialogueSet& a, const DialogueSet& b) {
    return a.emotion_labels_ == b.emotion_labels_ && a.dialogues_ == b.dialogues_;
  }

 private:
  std::vector<Dialogue> dialogues_;
  std::set<std::string> emotion_labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Reads the JSON-Lines corpus format: a header record declaring
/// `emotion_labels`, then one dialogue record per line. Blank lines are skipped.
DialogueSet load_dialogues(const std::filesystem::path& path);
DialogueSet parse_dialogues(std::istream& in);

/// Writes the corpus format back out; `parse_dialogues(serialize(x)) == x`.
std::string serialize(const DialogueSet& dialogues);

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;  // natural log

  friend bool operator==(const TokenLogprob&, const TokenLogprob&) = default;
};

struct ModelResponse {
  std::string dialogue_id;
  std::string model_id;
  std::string text;
  std::optional<std::vector<TokenLogprob>> token_logprobs;

  friend bool operator==(const ModelResponse&, const ModelResponse&) = default;
};

/// Candidate responses keyed by (dialogue_id, model_id).
class ResponseTable {
 public:
  /// Throws DuplicateEntry for a second response with the same key.
  void add(ModelResponse response, std::size_t line_no = 0);

  const ModelResponse* find(std::string_view dialogue_id, std::string_view model_id) const;

  /// Models in order of first appearance.
  const std::vector<std::string>& model_ids() const noexcept { return model_ids_; }
  bool has_model(std::string_view model_id) const;
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// Responses to one dialogue, in model order.
  std::vector<const ModelResponse*> for_dialogue(std::string_view dialogue_id) const;

 private:
  std::map<std::pair<std::string, std::string>, ModelResponse, std::less<>> entries_;
  std::vector<std::string> model_ids_;
};

/// Reads the JSON-Lines response format, checking every dialogue reference
/// against `dialogues`.
ResponseTable load_responses(const std::filesystem::path& path, const DialogueSet& dialogues);
ResponseTable parse_responses(std::istream& in, const DialogueSet& dialogues);

/// Model order for reports: "human" first when present, then first-appearance order.
std::vector<std::string> report_model_order(const std::vector<std::string>& model_ids);

struct Coverage {
  std::size_t covered = 0;
  std::size_t missing = 0;

  friend bool operator==(const Coverage&, const Coverage&) = default;
};

/// Per model, how many dialogues it answered and how many it skipped.
std::map<std::string, Coverage> coverage_report(const DialogueSet& dialogues, const ResponseTable& responses);

}  // namespace empatheval
