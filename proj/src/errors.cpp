#include "empatheval/errors.hpp"

#include <string>

namespace empatheval {

namespace {

std::string at_line(std::size_t line_no) {
  return line_no == 0 ? std::string{} : " (line " + std::to_string(line_no) + ")";
}

std::string clip(const std::string& s, std::size_t max_len = 200) {
  return s.size() <= max_len ? s : s.substr(0, max_len) + "...";
}

}  // namespace

Error::Error(std::string code, const std::string& message, ErrorKind kind)
    : std::runtime_error(code + ": " + message), code_(std::move(code)), kind_(kind) {}

MalformedRecord::MalformedRecord(std::size_t line_no, const std::string& reason)
    : Error("MalformedRecord", "line " + std::to_string(line_no) + ": " + reason),
      line_no_(line_no),
      reason_(reason) {}

DuplicateId::DuplicateId(const std::string& id, std::size_t line_no)
    : Error("DuplicateId", "dialogue id '" + id + "' appears twice" + at_line(line_no)), line_no_(line_no) {}

UnknownEmotion::UnknownEmotion(const std::string& label, std::size_t line_no)
    : Error("UnknownEmotion", "emotion '" + label + "' is not in the declared label set" + at_line(line_no)),
      line_no_(line_no) {}

UnknownDialogue::UnknownDialogue(const std::string& dialogue_id, std::size_t line_no)
    : Error("UnknownDialogue", "no dialogue with id '" + dialogue_id + "'" + at_line(line_no)), line_no_(line_no) {}

DuplicateEntry::DuplicateEntry(const std::string& dialogue_id, const std::string& model_id, std::size_t line_no)
    : Error("DuplicateEntry",
            "second response for (" + dialogue_id + ", " + model_id + ")" + at_line(line_no)),
      line_no_(line_no) {}

EmptyReference::EmptyReference() : Error("EmptyReference", "reference token sequence is empty") {}

EmptyLogprobs::EmptyLogprobs() : Error("EmptyLogprobs", "perplexity needs at least one token logprob") {}

NonFinite::NonFinite(double value)
    : Error("NonFinite", "logprob " + std::to_string(value) + " is not finite"), value_(value) {}

MissingReference::MissingReference(const std::string& dialogue_id)
    : Error("MissingReference", "no gold reply for dialogue '" + dialogue_id + "'") {}

JudgeError::JudgeError(std::string code, const std::string& message)
    : Error(std::move(code), message, ErrorKind::Judge) {}

AuthError::AuthError(int status)
    : JudgeError("AuthError", "endpoint rejected the credential (HTTP " + std::to_string(status) + ")") {}

RateLimited::RateLimited(int attempts)
    : JudgeError("RateLimited", "still rate limited after " + std::to_string(attempts) + " attempts") {}

EndpointError::EndpointError(int status, const std::string& body)
    : JudgeError("EndpointError", "HTTP " + std::to_string(status) + ": " + clip(body, 500)), status_(status) {}

CacheMissInReplayMode::CacheMissInReplayMode(const std::string& key)
    : JudgeError("CacheMissInReplayMode", "replay mode forbids network use and cache key " + key + " is not cached"),
      key_(key) {}

BackendUnavailable::BackendUnavailable(const std::string& what) : JudgeError("BackendUnavailable", what) {}

Unparseable::Unparseable(const std::string& raw, std::size_t found_count, const std::string& detail)
    : JudgeError("Unparseable", "found " + std::to_string(found_count) + " labels" +
                                    (detail.empty() ? std::string{} : " (" + detail + ")") + " in judge output '" +
                                    clip(raw) + "'"),
      raw_(raw),
      found_count_(found_count) {}

MalformedEntry::MalformedEntry(std::size_t line_no, const std::string& reason)
    : Error("MalformedEntry", "line " + std::to_string(line_no) + ": " + reason), line_no_(line_no) {}

DuplicatePhrase::DuplicatePhrase(const std::string& phrase, const std::string& behavior, std::size_t line_no)
    : Error("DuplicatePhrase", "'" + phrase + "' listed twice for " + behavior + at_line(line_no)) {}

WeightOutOfRange::WeightOutOfRange(double weight, std::size_t line_no)
    : Error("WeightOutOfRange", "weight " + std::to_string(weight) + " outside (0, 1]" + at_line(line_no)) {}

EmptyCorpus::EmptyCorpus(const std::string& which) : Error("EmptyCorpus", which + " corpus is empty") {}

UnknownQuestion::UnknownQuestion(const std::string& question_id)
    : Error("UnknownQuestion", "no question with id '" + question_id + "'") {}

ValueOutOfRange::ValueOutOfRange(int value)
    : Error("ValueOutOfRange", "Likert value " + std::to_string(value) + " outside 1..5") {}

RejectedDuplicate::RejectedDuplicate(const std::string& key)
    : Error("RejectedDuplicate", "rating already recorded for " + key) {}

UnknownModel::UnknownModel(const std::string& model_id)
    : Error("UnknownModel", "no model with id '" + model_id + "'") {}

LevelMismatch::LevelMismatch(const std::string& question_id, const std::string& reason)
    : Error("LevelMismatch", question_id + ": " + reason) {}

UnknownSession::UnknownSession(const std::string& session_id)
    : Error("UnknownSession", "no session with id '" + session_id + "'") {}

InconsistentModels::InconsistentModels(const std::string& model_id, const std::string& component)
    : Error("InconsistentModels", "component '" + component + "' names model '" + model_id +
                                      "' which the corpus run does not know") {}

}  // namespace empatheval
