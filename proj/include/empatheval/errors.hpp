#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace empatheval {

/// Broad failure class, used by the CLI to pick an exit code.
enum class ErrorKind {
  Validation,  // bad input files, bad arguments, bad ratings
  Judge,       // transport, endpoint, cache-replay or judge-output failures
};

/// Base of every error the toolkit throws on purpose.
///
/// `code()` is a stable machine-readable identifier (e.g. "MalformedRecord")
/// that the HTTP API forwards as `{"code": ...}`.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message, ErrorKind kind = ErrorKind::Validation);

  const std::string& code() const noexcept { return code_; }
  ErrorKind kind() const noexcept { return kind_; }

 private:
  std::string code_;
  ErrorKind kind_;
};

// ---------------------------------------------------------------------------
// corpus

class MalformedRecord : public Error {
 public:
  MalformedRecord(std::size_t line_no, const std::string& reason);
  std::size_t line_no() const noexcept { return line_no_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_no_;
  std::string reason_;
};

class DuplicateId : public Error {
 public:
  DuplicateId(const std::string& id, std::size_t line_no);
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

class UnknownEmotion : public Error {
 public:
  UnknownEmotion(const std::string& label, std::size_t line_no);
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

class UnknownDialogue : public Error {
 public:
  /// line_no = 0 when the reference does not come from a file.
  UnknownDialogue(const std::string& dialogue_id, std::size_t line_no = 0);
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

class DuplicateEntry : public Error {
 public:
  DuplicateEntry(const std::string& dialogue_id, const std::string& model_id, std::size_t line_no = 0);
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

// ---------------------------------------------------------------------------
// offline metrics

class EmptyReference : public Error {
 public:
  EmptyReference();
};

class EmptyLogprobs : public Error {
 public:
  EmptyLogprobs();
};

class NonFinite : public Error {
 public:
  explicit NonFinite(double value);
  double value() const noexcept { return value_; }

 private:
  double value_;
};

class MissingReference : public Error {
 public:
  explicit MissingReference(const std::string& dialogue_id);
};

// ---------------------------------------------------------------------------
// judging

class JudgeError : public Error {
 public:
  JudgeError(std::string code, const std::string& message);
};

class AuthError : public JudgeError {
 public:
  AuthError(int status);
};

class RateLimited : public JudgeError {
 public:
  explicit RateLimited(int attempts);
};

class EndpointError : public JudgeError {
 public:
  EndpointError(int status, const std::string& body);
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class CacheMissInReplayMode : public JudgeError {
 public:
  explicit CacheMissInReplayMode(const std::string& key);
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class BackendUnavailable : public JudgeError {
 public:
  explicit BackendUnavailable(const std::string& what);
};

/// Judge output that does not contain the expected labels.
class Unparseable : public JudgeError {
 public:
  Unparseable(const std::string& raw, std::size_t found_count, const std::string& detail = {});
  const std::string& raw() const noexcept { return raw_; }
  std::size_t found_count() const noexcept { return found_count_; }

 private:
  std::string raw_;
  std::size_t found_count_;
};

// ---------------------------------------------------------------------------
// lexicon

class MalformedEntry : public Error {
 public:
  MalformedEntry(std::size_t line_no, const std::string& reason);
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

class DuplicatePhrase : public Error {
 public:
  DuplicatePhrase(const std::string& phrase, const std::string& behavior, std::size_t line_no = 0);
};

class WeightOutOfRange : public Error {
 public:
  WeightOutOfRange(double weight, std::size_t line_no = 0);
};

class EmptyCorpus : public Error {
 public:
  explicit EmptyCorpus(const std::string& which);
};

// ---------------------------------------------------------------------------
// human evaluation

class UnknownQuestion : public Error {
 public:
  explicit UnknownQuestion(const std::string& question_id);
};

class ValueOutOfRange : public Error {
 public:
  explicit ValueOutOfRange(int value);
};

class RejectedDuplicate : public Error {
 public:
  explicit RejectedDuplicate(const std::string& key);
};

class UnknownModel : public Error {
 public:
  explicit UnknownModel(const std::string& model_id);
};

class LevelMismatch : public Error {
 public:
  LevelMismatch(const std::string& question_id, const std::string& reason);
};

class UnknownSession : public Error {
 public:
  explicit UnknownSession(const std::string& session_id);
};

// ---------------------------------------------------------------------------
// report

class InconsistentModels : public Error {
 public:
  InconsistentModels(const std::string& model_id, const std::string& component);
};

}  // namespace empatheval
