#include "empatheval/human_eval.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <mutex>
#include <ostream>
#include <random>
#include <set>

#include <fcntl.h>
#include <httplib.h>
#include <unistd.h>

#include "empatheval/errors.hpp"
#include "empatheval/format.hpp"
#include "empatheval/text.hpp"

namespace empatheval {

using json = nlohmann::json;

namespace {

std::vector<Question> make_questionnaire() {
  using L = QuestionLevel;
  using P = Polarity;
  return {
      {"q01", L::Utterance,
       "Is the supporter reacting emotionally to the seeker's utterance or trying to mirror the seeker's emotions?",
       P::Positive},
      {"q02", L::Utterance, "Is the supporter attempting to explore the seeker's situation further?", P::Positive},
      {"q03", L::Utterance, "Is the supporter attempting to understand or interpret the seeker's situation?",
       P::Positive},
      {"q04", L::Utterance, "Does the supporter's response appear judgemental?", P::Negative},
      {"q05", L::Utterance,
       "Does the supporter's response indicate lack of interest or concern towards the seeker?", P::Negative},
      {"q06", L::Utterance, "Does the supporter's response indicate genuine concern towards the seeker's situation?",
       P::Positive},
      {"q07", L::Utterance, "Is the supporter attempting to console the seeker?", P::Positive},
      {"q08", L::Utterance,
       "Is the supporter attempting to selflessly help the seeker without expecting anything in return?",
       P::Positive},
      // Printed among the utterance-level rows although it reads like a
      // whole-conversation item; kept where it was printed.
      {"q09", L::Utterance, "The conversation is relevant to the emotion type - <emotion class>", P::Positive},
      {"q10", L::Utterance, "The supporter exhibits sufficient emotion towards the seeker's issues", P::Positive},
      {"q11", L::Dialogue, "The supporter fully understood the seeker's issues", P::Positive},
      {"q12", L::Dialogue,
       "The supporter put himself/herself in the seeker's position and addressed the seeker's issues", P::Positive},
      {"q13", L::Dialogue, "The supporter provided a solution/intervention or suggestion to the seeker", P::Positive},
      {"q14", L::Dialogue, "The emotional distress of the seeker improved towards the end of the conversation",
       P::Positive},
  };
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string label_for(std::size_t i) {
  std::string label;
  do {
    label.insert(label.begin(), static_cast<char>('A' + i % 26));
    i = i / 26;
  } while (i-- > 0);
  return label;
}

json session_json(const Session& s) {
  json tasks = json::array();
  for (const auto& t : s.tasks) {
    json mask = json::array();
    for (const auto& m : t.mask) mask.push_back({{"label", m.label}, {"model_id", m.model_id}});
    tasks.push_back({{"dialogue_id", t.dialogue_id}, {"mask", mask}});
  }
  return {{"kind", "session"}, {"session_id", s.id}, {"rater_id", s.rater_id}, {"tasks", tasks}};
}

Session session_from_json(const json& j) {
  Session s{j.at("session_id").get<std::string>(), j.at("rater_id").get<std::string>(), {}};
  for (const auto& t : j.at("tasks")) {
    SessionTask task{t.at("dialogue_id").get<std::string>(), {}};
    for (const auto& m : t.at("mask"))
      task.mask.push_back({m.at("label").get<std::string>(), m.at("model_id").get<std::string>()});
    s.tasks.push_back(std::move(task));
  }
  return s;
}

json rating_json(const LikertRating& r, const std::string& id, bool overwrite) {
  return {{"kind", "rating"},
          {"id", id},
          {"session_id", r.session_id},
          {"rater_id", r.rater_id},
          {"dialogue_id", r.dialogue_id},
          {"model_id", r.model_id ? json(*r.model_id) : json(nullptr)},
          {"question_id", r.question_id},
          {"value", r.value},
          {"timestamp", r.timestamp},
          {"overwrite", overwrite}};
}

LikertRating rating_from_json(const json& j) {
  LikertRating r;
  r.session_id = j.at("session_id").get<std::string>();
  r.rater_id = j.at("rater_id").get<std::string>();
  r.dialogue_id = j.at("dialogue_id").get<std::string>();
  if (j.contains("model_id") && !j["model_id"].is_null()) r.model_id = j["model_id"].get<std::string>();
  r.question_id = j.at("question_id").get<std::string>();
  r.value = j.at("value").get<int>();
  r.timestamp = j.value("timestamp", std::string{});
  return r;
}

}  // namespace

std::string_view to_string(QuestionLevel level) { return level == QuestionLevel::Utterance ? "utterance" : "dialogue"; }
std::string_view to_string(Polarity polarity) { return polarity == Polarity::Positive ? "positive" : "negative"; }

const std::vector<Question>& questionnaire() {
  static const std::vector<Question> questions = make_questionnaire();
  return questions;
}

const Question* find_question(std::string_view id) {
  for (const auto& q : questionnaire())
    if (q.id == id) return &q;
  return nullptr;
}

// ---------------------------------------------------------------------------

RatingStore::RatingStore(std::filesystem::path journal, const DialogueSet* dialogues, const ResponseTable* responses)
    : journal_(std::move(journal)), dialogues_(dialogues), responses_(responses) {
  if (journal_.has_parent_path()) std::filesystem::create_directories(journal_.parent_path());
  replay();
  fd_ = ::open(journal_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error("JournalError", "cannot open journal " + journal_.string() + ": " + std::strerror(errno));
}

RatingStore::~RatingStore() {
  if (fd_ >= 0) ::close(fd_);
}

RatingStore::Key RatingStore::key_of(const LikertRating& r) {
  return {r.session_id, r.rater_id, r.dialogue_id, r.model_id.value_or(std::string{}), r.question_id};
}

void RatingStore::replay() {
  std::ifstream in(journal_, std::ios::binary);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "session") {
        sessions_.push_back(session_from_json(j));
      } else if (kind == "rating") {
        apply_rating(rating_from_json(j), j.value("overwrite", false));
        ++next_rating_;
      } else {
        throw MalformedRecord(line_no, "unknown journal record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      // A torn final line from a crash mid-append is the only tolerated damage.
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw MalformedRecord(line_no, std::string("journal: ") + e.what());
    }
  }
}

void RatingStore::append_line(const std::string& line) {
  const std::string data = line + '\n';
  const char* p = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    const auto n = ::write(fd_, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("JournalError", std::string("journal write failed: ") + std::strerror(errno));
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
  if (::fsync(fd_) != 0) throw Error("JournalError", std::string("journal fsync failed: ") + std::strerror(errno));
}

void RatingStore::apply_rating(LikertRating rating, bool overwrite) {
  auto key = key_of(rating);
  if (const auto it = index_.find(key); it != index_.end()) {
    if (!overwrite) throw RejectedDuplicate(rating.dialogue_id + "/" + rating.model_id.value_or("-") + "/" +
                                            rating.question_id + " in session " + rating.session_id);
    ratings_[it->second] = std::move(rating);
    return;
  }
  index_.emplace(std::move(key), ratings_.size());
  ratings_.push_back(std::move(rating));
}

Session RatingStore::create_session(const std::string& rater_id, std::vector<std::string> dialogue_ids) {
  if (rater_id.empty()) throw Error("InvalidRequest", "rater_id must be non-empty");
  std::unique_lock lock(mu_);
  if (dialogue_ids.empty() && dialogues_)
    for (const auto& d : dialogues_->dialogues()) dialogue_ids.push_back(d.id);

  Session s;
  s.id = "s" + std::string(4 - std::min<std::size_t>(4, std::to_string(sessions_.size() + 1).size()), '0') +
         std::to_string(sessions_.size() + 1);
  s.rater_id = rater_id;
  for (const auto& did : dialogue_ids) {
    if (dialogues_ && dialogues_->find(did) == nullptr) throw UnknownDialogue(did);
    SessionTask task{did, {}};
    std::vector<std::string> models;
    if (responses_)
      for (const auto* r : responses_->for_dialogue(did)) models.push_back(r->model_id);
    std::mt19937_64 rng(fnv1a64(s.id + "/" + did));
    std::shuffle(models.begin(), models.end(), rng);
    for (std::size_t i = 0; i < models.size(); ++i) task.mask.push_back({label_for(i), models[i]});
    s.tasks.push_back(std::move(task));
  }
  auto record = session_json(s);
  record["timestamp"] = utc_now();
  append_line(record.dump());
  sessions_.push_back(s);
  return s;
}

std::optional<Session> RatingStore::find_session(const std::string& session_id) const {
  std::shared_lock lock(mu_);
  for (const auto& s : sessions_)
    if (s.id == session_id) return s;
  return std::nullopt;
}

std::vector<Session> RatingStore::sessions() const {
  std::shared_lock lock(mu_);
  return sessions_;
}

std::string RatingStore::record_rating(LikertRating rating, bool overwrite) {
  const auto* question = find_question(rating.question_id);
  if (!question) throw UnknownQuestion(rating.question_id);
  if (rating.value < 1 || rating.value > 5) throw ValueOutOfRange(rating.value);
  if (question->level == QuestionLevel::Utterance && !rating.model_id)
    throw LevelMismatch(rating.question_id, "utterance-level questions are answered per response");
  if (question->level == QuestionLevel::Dialogue && rating.model_id)
    throw LevelMismatch(rating.question_id, "dialogue-level questions are not tied to a response");
  if (dialogues_ && dialogues_->find(rating.dialogue_id) == nullptr) throw UnknownDialogue(rating.dialogue_id);
  if (rating.model_id && responses_ && responses_->find(rating.dialogue_id, *rating.model_id) == nullptr)
    throw UnknownModel(*rating.model_id);
  if (rating.rater_id.empty() || rating.session_id.empty())
    throw Error("InvalidRequest", "ratings need a session id and a rater id");
  if (rating.timestamp.empty()) rating.timestamp = utc_now();

  std::unique_lock lock(mu_);
  if (!overwrite && index_.contains(key_of(rating)))
    throw RejectedDuplicate(rating.dialogue_id + "/" + rating.model_id.value_or("-") + "/" + rating.question_id +
                            " in session " + rating.session_id);
  std::string id = std::to_string(next_rating_);
  id = "r" + std::string(id.size() < 6 ? 6 - id.size() : 0, '0') + id;
  append_line(rating_json(rating, id, overwrite).dump());
  ++next_rating_;
  apply_rating(std::move(rating), overwrite);
  return id;
}

std::vector<LikertRating> RatingStore::ratings() const {
  std::shared_lock lock(mu_);
  return ratings_;
}

// ---------------------------------------------------------------------------

RatingAggregate aggregate_ratings(std::span<const LikertRating> ratings) {
  std::size_t question_order_size = questionnaire().size();
  auto question_rank = [&](const std::string& id) {
    for (std::size_t i = 0; i < question_order_size; ++i)
      if (questionnaire()[i].id == id) return i;
    return question_order_size;
  };

  using CellKey = std::tuple<std::optional<std::string>, std::size_t, std::string>;
  std::map<CellKey, std::vector<double>> cells;
  // (dialogue, model, question) -> (rater, value)
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<std::pair<std::string, int>>> items;
  for (const auto& r : ratings) {
    cells[{r.model_id, question_rank(r.question_id), r.question_id}].push_back(r.value);
    items[{r.dialogue_id, r.model_id.value_or(std::string{}), r.question_id}].emplace_back(r.rater_id, r.value);
  }

  RatingAggregate out;
  for (auto& [key, values] : cells) {
    std::sort(values.begin(), values.end());
    QuestionStat qs{std::get<0>(key), std::get<2>(key), *aggregate(values), std::nullopt};
    const auto* q = find_question(qs.question_id);
    if (q && q->polarity == Polarity::Negative) qs.reversed_mean = 6.0 - qs.stat.mean;
    out.cells.push_back(std::move(qs));
  }

  std::map<std::string, std::pair<std::size_t, std::size_t>> pairs;  // question -> (agree, total)
  for (const auto& [key, raters] : items) {
    auto& [agree, total] = pairs[std::get<2>(key)];
    for (std::size_t i = 0; i < raters.size(); ++i)
      for (std::size_t k = i + 1; k < raters.size(); ++k) {
        if (raters[i].first == raters[k].first) continue;
        ++total;
        if (raters[i].second == raters[k].second) ++agree;
      }
  }
  for (const auto& [question, counts] : pairs) {
    out.agreement[question] = counts.second == 0 ? std::nullopt
                                                 : std::optional<double>(static_cast<double>(counts.first) /
                                                                         static_cast<double>(counts.second));
  }
  return out;
}

RatingAggregate aggregate_ratings(const RatingStore& store) {
  const auto ratings = store.ratings();
  return aggregate_ratings(ratings);
}

json to_json(const RatingAggregate& aggregate) {
  json cells = json::array();
  for (const auto& c : aggregate.cells) {
    cells.push_back({{"model_id", c.model_id ? json(*c.model_id) : json(nullptr)},
                     {"question_id", c.question_id},
                     {"mean", c.stat.mean},
                     {"sd", c.stat.sd},
                     {"n", c.stat.n},
                     {"reversed_mean", c.reversed_mean ? json(*c.reversed_mean) : json(nullptr)}});
  }
  json agreement = json::object();
  for (const auto& [q, a] : aggregate.agreement) agreement[q] = a ? json(*a) : json(nullptr);
  return {{"cells", cells}, {"agreement", agreement}};
}

RatingAggregate rating_aggregate_from_json(const json& j) {
  RatingAggregate out;
  for (const auto& c : j.at("cells")) {
    QuestionStat qs;
    if (!c.at("model_id").is_null()) qs.model_id = c["model_id"].get<std::string>();
    qs.question_id = c.at("question_id").get<std::string>();
    qs.stat = {c.at("mean").get<double>(), c.at("sd").get<double>(), c.at("n").get<std::size_t>()};
    if (c.contains("reversed_mean") && !c["reversed_mean"].is_null())
      qs.reversed_mean = c["reversed_mean"].get<double>();
    out.cells.push_back(std::move(qs));
  }
  for (const auto& [q, a] : j.at("agreement").items())
    out.agreement[q] = a.is_null() ? std::nullopt : std::optional<double>(a.get<double>());
  return out;
}

void write_ratings_csv(std::ostream& out, std::span<const LikertRating> ratings) {
  out << "session_id,rater_id,dialogue_id,model_id,question_id,value,timestamp\n";
  for (const auto& r : ratings) {
    out << csv_field(r.session_id) << ',' << csv_field(r.rater_id) << ',' << csv_field(r.dialogue_id) << ','
        << csv_field(r.model_id.value_or("")) << ',' << r.question_id << ',' << r.value << ','
        << csv_field(r.timestamp) << '\n';
  }
}

void write_rating_aggregate_csv(std::ostream& out, const RatingAggregate& aggregate) {
  out << "model_id,question_id,mean,sd,n,reversed_mean,agreement\n";
  for (const auto& c : aggregate.cells) {
    const auto it = aggregate.agreement.find(c.question_id);
    const bool has_agreement = it != aggregate.agreement.end() && it->second.has_value();
    out << csv_field(c.model_id.value_or("")) << ',' << c.question_id << ',' << format_fixed(c.stat.mean, 3) << ','
        << format_fixed(c.stat.sd, 3) << ',' << c.stat.n << ','
        << (c.reversed_mean ? format_fixed(*c.reversed_mean, 3) : "") << ','
        << (has_agreement ? format_fixed(*it->second, 3) : "") << '\n';
  }
}

json next_task_view(const RatingStore& store, const Session& session, const DialogueSet& dialogues,
                    const ResponseTable& responses) {
  std::set<std::tuple<std::string, std::string, std::string>> answered;  // dialogue, model, question
  for (const auto& r : store.ratings())
    if (r.session_id == session.id) answered.emplace(r.dialogue_id, r.model_id.value_or(""), r.question_id);

  std::vector<std::string> utterance_qs, dialogue_qs;
  for (const auto& q : questionnaire())
    (q.level == QuestionLevel::Utterance ? utterance_qs : dialogue_qs).push_back(q.id);

  for (std::size_t t = 0; t < session.tasks.size(); ++t) {
    const auto& task = session.tasks[t];
    json done_items = json::array();
    std::size_t missing = 0;
    for (const auto& m : task.mask)
      for (const auto& q : utterance_qs) {
        if (answered.contains({task.dialogue_id, m.model_id, q}))
          done_items.push_back({{"question_id", q}, {"response_label", m.label}});
        else
          ++missing;
      }
    for (const auto& q : dialogue_qs) {
      if (answered.contains({task.dialogue_id, "", q}))
        done_items.push_back({{"question_id", q}, {"response_label", nullptr}});
      else
        ++missing;
    }
    if (missing == 0) continue;

    const auto* d = dialogues.find(task.dialogue_id);
    json history = json::array();
    json shown = json::array();
    if (d) {
      for (const auto& u : d->history()) history.push_back({{"role", to_string(u.role)}, {"text", u.text}});
    }
    // Only labels and texts leave the server.
    for (const auto& m : task.mask) {
      const auto* r = responses.find(task.dialogue_id, m.model_id);
      shown.push_back({{"label", m.label}, {"text", r ? r->text : std::string{}}});
    }
    return {{"session_id", session.id},
            {"done", false},
            {"task_index", t + 1},
            {"task_count", session.tasks.size()},
            {"dialogue_id", task.dialogue_id},
            {"emotion", d ? d->emotion_class : std::string{}},
            {"history", history},
            {"responses", shown},
            {"utterance_questions", utterance_qs},
            {"dialogue_questions", dialogue_qs},
            {"answered", done_items}};
  }
  return {{"session_id", session.id}, {"done", true}, {"task_count", session.tasks.size()}};
}

// ---------------------------------------------------------------------------

namespace {

int status_for(const Error& e) {
  const auto& code = e.code();
  if (code == "UnknownSession" || code == "UnknownQuestion" || code == "UnknownDialogue" || code == "UnknownModel")
    return 404;
  if (code == "RejectedDuplicate") return 409;
  return 400;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
  send_json(res, status, {{"code", code}, {"message", message}});
}

json questionnaire_json() {
  json out = json::array();
  for (const auto& q : questionnaire())
    out.push_back({{"id", q.id}, {"level", to_string(q.level)}, {"text", q.text}, {"polarity", to_string(q.polarity)}});
  return out;
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, status_for(e), e.code(), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "InvalidRequest", e.what());
    }
  };
}

}  // namespace

struct AnnotationServer::Impl {
  RatingStore& store;
  const DialogueSet& dialogues;
  const ResponseTable& responses;
  AnnotationServerOptions options;
  httplib::Server server;
};

AnnotationServer::AnnotationServer(RatingStore& store, const DialogueSet& dialogues, const ResponseTable& responses,
                                   AnnotationServerOptions options)
    : impl_(new Impl{store, dialogues, responses, std::move(options), {}}) {
  auto& srv = impl_->server;
  Impl* self = impl_.get();

  srv.Get("/api/questionnaire",
          guarded([](const httplib::Request&, httplib::Response& res) { send_json(res, 200, questionnaire_json()); }));

  srv.Post("/api/session", guarded([self](const httplib::Request& req, httplib::Response& res) {
             const auto body = json::parse(req.body);
             std::vector<std::string> ids;
             if (body.contains("dialogue_ids")) ids = body["dialogue_ids"].get<std::vector<std::string>>();
             const auto session = self->store.create_session(body.at("rater_id").get<std::string>(), ids);
             send_json(res, 201, {{"session_id", session.id}, {"task_count", session.tasks.size()}});
           }));

  srv.Get(R"(/api/session/([^/]+)/next-task)", guarded([self](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1].str();
            const auto session = self->store.find_session(id);
            if (!session) throw UnknownSession(id);
            send_json(res, 200, next_task_view(self->store, *session, self->dialogues, self->responses));
          }));

  srv.Post("/api/rating", guarded([self](const httplib::Request& req, httplib::Response& res) {
             const auto body = json::parse(req.body);
             const auto session_id = body.at("session_id").get<std::string>();
             const auto session = self->store.find_session(session_id);
             if (!session) throw UnknownSession(session_id);

             LikertRating rating;
             rating.session_id = session->id;
             rating.rater_id = session->rater_id;
             rating.dialogue_id = body.at("dialogue_id").get<std::string>();
             rating.question_id = body.at("question_id").get<std::string>();
             rating.value = body.at("value").get<int>();

             const auto task = std::find_if(session->tasks.begin(), session->tasks.end(),
                                            [&](const SessionTask& t) { return t.dialogue_id == rating.dialogue_id; });
             if (task == session->tasks.end()) throw UnknownDialogue(rating.dialogue_id);
             if (body.contains("response_label") && !body["response_label"].is_null()) {
               const auto label = body["response_label"].get<std::string>();
               const auto m = std::find_if(task->mask.begin(), task->mask.end(),
                                           [&](const MaskedResponse& r) { return r.label == label; });
               if (m == task->mask.end()) throw UnknownModel("label " + label);
               rating.model_id = m->model_id;
             }
             const auto id = self->store.record_rating(std::move(rating), body.value("overwrite", false));
             send_json(res, 201, {{"id", id}});
           }));

  srv.Get("/api/aggregates", guarded([self](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, to_json(aggregate_ratings(self->store)));
          }));

  if (impl_->options.static_dir) srv.set_mount_point("/", impl_->options.static_dir->string());
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind() {
  auto& o = impl_->options;
  if (o.port == 0) {
    const int port = impl_->server.bind_to_any_port(o.host);
    if (port < 0) throw Error("BindFailed", "cannot bind " + o.host);
    o.port = port;
    return port;
  }
  if (!impl_->server.bind_to_port(o.host, o.port))
    throw Error("BindFailed", "cannot bind " + o.host + ":" + std::to_string(o.port));
  return o.port;
}

void AnnotationServer::listen() { impl_->server.listen_after_bind(); }

void AnnotationServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace empatheval
