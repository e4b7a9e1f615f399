#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "empatheval/corpus.hpp"
#include "empatheval/stats.hpp"

namespace empatheval {

enum class QuestionLevel { Utterance, Dialogue };
enum class Polarity { Positive, Negative };

std::string_view to_string(QuestionLevel level);
std::string_view to_string(Polarity polarity);

struct Question {
  std::string id;
  QuestionLevel level = QuestionLevel::Utterance;
  std::string text;
  Polarity polarity = Polarity::Positive;
};

/// The built-in questionnaire, ids q01..q14, in printed order. Utterance-level
/// items are answered once per candidate response, dialogue-level items once
/// per dialogue.
const std::vector<Question>& questionnaire();
const Question* find_question(std::string_view id);

struct LikertRating {
  std::string session_id;
  std::string rater_id;
  std::string dialogue_id;
  std::optional<std::string> model_id;  // absent for dialogue-level items
  std::string question_id;
  int value = 0;          // 1 = Strongly Disagree .. 5 = Strongly Agree
  std::string timestamp;  // filled with the current UTC time when empty

  friend bool operator==(const LikertRating&, const LikertRating&) = default;
};

struct MaskedResponse {
  std::string label;  // "A", "B", ...
  std::string model_id;
};

struct SessionTask {
  std::string dialogue_id;
  std::vector<MaskedResponse> mask;
};

struct Session {
  std::string id;
  std::string rater_id;
  std::vector<SessionTask> tasks;
};

/// Append-only JSONL journal of sessions and ratings. Opening an existing
/// journal replays it. Writes are serialized and fsync'ed before returning;
/// readers see a consistent prefix.
class RatingStore {
 public:
  /// `dialogues`/`responses` (optional) are used to validate references and
  /// to build session masks; they must outlive the store.
  explicit RatingStore(std::filesystem::path journal, const DialogueSet* dialogues = nullptr,
                       const ResponseTable* responses = nullptr);
  ~RatingStore();

  RatingStore(const RatingStore&) = delete;
  RatingStore& operator=(const RatingStore&) = delete;

  /// New session over `dialogue_ids` (all corpus dialogues when empty). Each
  /// task's responses are shuffled and relabelled A, B, ... with a seed derived
  /// from session and dialogue ids; the mapping is journaled.
  Session create_session(const std::string& rater_id, std::vector<std::string> dialogue_ids = {});
  std::optional<Session> find_session(const std::string& session_id) const;
  std::vector<Session> sessions() const;

  /// Validates and persists; returns the stored id ("r000001", ...).
  /// Without `overwrite`, a second rating for the same
  /// (session, rater, dialogue, model, question) is RejectedDuplicate.
  std::string record_rating(LikertRating rating, bool overwrite = false);

  /// Effective ratings (overwrites applied), in first-arrival order.
  std::vector<LikertRating> ratings() const;

  const std::filesystem::path& journal_path() const noexcept { return journal_; }

 private:
  using Key = std::tuple<std::string, std::string, std::string, std::string, std::string>;
  static Key key_of(const LikertRating& r);

  void replay();
  void append_line(const std::string& line);
  void apply_rating(LikertRating rating, bool overwrite);

  std::filesystem::path journal_;
  const DialogueSet* dialogues_;
  const ResponseTable* responses_;
  int fd_ = -1;
  mutable std::shared_mutex mu_;
  std::vector<Session> sessions_;
  std::vector<LikertRating> ratings_;
  std::map<Key, std::size_t> index_;
  std::size_t next_rating_ = 1;
};

struct QuestionStat {
  std::optional<std::string> model_id;
  std::string question_id;
  AggregateStat stat;
  /// 6 - mean, for negative-polarity questions only.
  std::optional<double> reversed_mean;
};

struct RatingAggregate {
  /// Ordered by model id (dialogue-level first), then questionnaire order.
  std::vector<QuestionStat> cells;
  /// Pairwise exact agreement per question; absent when no item has two raters.
  std::map<std::string, std::optional<double>> agreement;
};

RatingAggregate aggregate_ratings(std::span<const LikertRating> ratings);
RatingAggregate aggregate_ratings(const RatingStore& store);

nlohmann::json to_json(const RatingAggregate& aggregate);
RatingAggregate rating_aggregate_from_json(const nlohmann::json& j);

void write_ratings_csv(std::ostream& out, std::span<const LikertRating> ratings);
void write_rating_aggregate_csv(std::ostream& out, const RatingAggregate& aggregate);

/// The next task of a session with at least one unanswered item, as the JSON
/// the annotation UI renders. Never contains model ids.
nlohmann::json next_task_view(const RatingStore& store, const Session& session, const DialogueSet& dialogues,
                              const ResponseTable& responses);

struct AnnotationServerOptions {
  std::string host = "127.0.0.1";
  int port = 8787;  // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;
};

/// HTTP API for raters:
///   GET  /api/questionnaire
///   POST /api/session                  {"rater_id", "dialogue_ids"?}
///   GET  /api/session/{id}/next-task
///   POST /api/rating                   {"session_id","dialogue_id","response_label"?,"question_id","value","overwrite"?}
///   GET  /api/aggregates
/// Errors are {"code","message"} with a 4xx status.
class AnnotationServer {
 public:
  AnnotationServer(RatingStore& store, const DialogueSet& dialogues, const ResponseTable& responses,
                   AnnotationServerOptions options = {});
  ~AnnotationServer();

  /// Binds the socket; returns the bound port.
  int bind();
  /// Serves until stop(); call bind() first.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace empatheval
