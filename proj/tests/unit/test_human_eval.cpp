#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "empatheval/errors.hpp"
#include "empatheval/human_eval.hpp"

using namespace empatheval;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct World {
  fs::path dir;
  DialogueSet dialogues{std::set<std::string>{"sad"}};
  ResponseTable responses;

  World() {
    dir = fs::temp_directory_path() / ("empatheval-human-" + std::to_string(::getpid()) + "-" +
                                       std::to_string(std::rand()));
    fs::create_directories(dir);
    dialogues.add({"d1", "sad", {{Role::Seeker, "My dog died."}}, Split::Test});
    dialogues.add({"d2", "sad", {{Role::Seeker, "I failed."}}, Split::Test});
    int n = 0;
    for (auto d : {"d1", "d2"})
      for (auto m : {"human", "gpt", "vicuna"}) responses.add({d, m, "reply number " + std::to_string(++n), {}});
  }
  ~World() { fs::remove_all(dir); }
  fs::path journal() const { return dir / "ratings.jsonl"; }
};

LikertRating rating(const std::string& session, const std::string& rater, const std::string& d,
                    std::optional<std::string> m, const std::string& q, int v) {
  return {session, rater, d, std::move(m), q, v, "2024-01-01T00:00:00Z"};
}

}  // namespace

TEST_CASE("questionnaire shape") {
  const auto& q = questionnaire();
  REQUIRE(q.size() == 14);
  CHECK(q.front().id == "q01");
  CHECK(q[8].text == "The conversation is relevant to the emotion type - <emotion class>");
  CHECK(q[8].level == QuestionLevel::Utterance);
  CHECK(q[10].level == QuestionLevel::Dialogue);
  CHECK(find_question("q04")->polarity == Polarity::Negative);
  CHECK(find_question("q05")->polarity == Polarity::Negative);
  CHECK(find_question("q06")->polarity == Polarity::Positive);
  CHECK(find_question("q15") == nullptr);
}

TEST_CASE("rating validation") {
  World w;
  RatingStore store(w.journal(), &w.dialogues, &w.responses);
  CHECK_THROWS_AS(store.record_rating(rating("s1", "r1", "d1", "gpt", "q01", 0)), ValueOutOfRange);
  CHECK_THROWS_AS(store.record_rating(rating("s1", "r1", "d1", "gpt", "q01", 6)), ValueOutOfRange);
  CHECK_THROWS_AS(store.record_rating(rating("s1", "r1", "d1", "gpt", "q99", 3)), UnknownQuestion);
  CHECK_THROWS_AS(store.record_rating(rating("s1", "r1", "d1", std::nullopt, "q01", 3)), LevelMismatch);
  CHECK_THROWS_AS(store.record_rating(rating("s1", "r1", "d1", "gpt", "q11", 3)), LevelMismatch);
  CHECK_THROWS_AS(store.record_rating(rating("s1", "r1", "d9", "gpt", "q01", 3)), UnknownDialogue);
  CHECK_THROWS_AS(store.record_rating(rating("s1", "r1", "d1", "llama", "q01", 3)), UnknownModel);

  CHECK(store.record_rating(rating("s1", "r1", "d1", "gpt", "q01", 3)) == "r000001");
  CHECK_THROWS_AS(store.record_rating(rating("s1", "r1", "d1", "gpt", "q01", 4)), RejectedDuplicate);
  store.record_rating(rating("s1", "r1", "d1", "gpt", "q01", 4), true);
  REQUIRE(store.ratings().size() == 1);
  CHECK(store.ratings()[0].value == 4);
  store.record_rating(rating("s1", "r1", "d1", std::nullopt, "q11", 5));
  CHECK(store.ratings().size() == 2);
}

TEST_CASE("journal replay restores ratings and sessions") {
  World w;
  RatingAggregate before;
  Session session;
  {
    RatingStore store(w.journal(), &w.dialogues, &w.responses);
    session = store.create_session("alice");
    store.record_rating(rating(session.id, "alice", "d1", "gpt", "q02", 2));
    store.record_rating(rating(session.id, "alice", "d1", "gpt", "q02", 5), true);
    store.record_rating(rating(session.id, "alice", "d2", "vicuna", "q04", 1));
    store.record_rating(rating(session.id, "alice", "d2", std::nullopt, "q14", 3));
    before = aggregate_ratings(store);
  }
  RatingStore reopened(w.journal(), &w.dialogues, &w.responses);
  CHECK(to_json(aggregate_ratings(reopened)) == to_json(before));
  CHECK(reopened.ratings().size() == 3);
  const auto s = reopened.find_session(session.id);
  REQUIRE(s);
  REQUIRE(s->tasks.size() == 2);
  CHECK(s->tasks[0].mask.size() == 3);
  CHECK(s->tasks[0].mask[0].model_id == session.tasks[0].mask[0].model_id);
  CHECK(reopened.record_rating(rating(session.id, "alice", "d1", "human", "q01", 1)) == "r000005");
}

TEST_CASE("a torn final journal line is ignored") {
  World w;
  {
    RatingStore store(w.journal(), &w.dialogues, &w.responses);
    store.record_rating(rating("s", "r", "d1", "gpt", "q01", 3));
  }
  {
    std::ofstream out(w.journal(), std::ios::app);
    out << R"({"kind":"rating","session_id":"s")";
  }
  RatingStore reopened(w.journal(), &w.dialogues, &w.responses);
  CHECK(reopened.ratings().size() == 1);
}

TEST_CASE("session masks") {
  World w;
  RatingStore store(w.journal(), &w.dialogues, &w.responses);
  const auto s = store.create_session("bob", {"d2"});
  REQUIRE(s.tasks.size() == 1);
  std::vector<std::string> labels, models;
  for (const auto& m : s.tasks[0].mask) {
    labels.push_back(m.label);
    models.push_back(m.model_id);
  }
  CHECK(labels == std::vector<std::string>{"A", "B", "C"});
  std::sort(models.begin(), models.end());
  CHECK(models == std::vector<std::string>{"gpt", "human", "vicuna"});
  CHECK_THROWS_AS(store.create_session("bob", {"nope"}), UnknownDialogue);
  CHECK(store.create_session("carol").id != s.id);
}

TEST_CASE("aggregation") {
  std::vector<LikertRating> rs{
      rating("s1", "r1", "d1", "gpt", "q01", 4), rating("s2", "r2", "d1", "gpt", "q01", 4),
      rating("s3", "r3", "d1", "gpt", "q01", 2), rating("s1", "r1", "d1", "gpt", "q04", 1),
      rating("s1", "r1", "d1", std::nullopt, "q11", 5),
  };
  const auto agg = aggregate_ratings(rs);
  const QuestionStat* q01 = nullptr;
  const QuestionStat* q04 = nullptr;
  for (const auto& c : agg.cells) {
    if (c.model_id == std::optional<std::string>("gpt") && c.question_id == "q01") q01 = &c;
    if (c.question_id == "q04") q04 = &c;
  }
  REQUIRE(q01);
  CHECK(q01->stat.mean == doctest::Approx(10.0 / 3.0));
  CHECK(q01->stat.n == 3);
  CHECK_FALSE(q01->reversed_mean);
  REQUIRE(q04);
  CHECK(*q04->reversed_mean == 5.0);
  CHECK(agg.cells.front().question_id == "q11");  // dialogue-level cells sort first
  // three raters on q01: one agreeing pair out of three
  CHECK(*agg.agreement.at("q01") == doctest::Approx(1.0 / 3.0));
  CHECK_FALSE(agg.agreement.at("q04"));
  CHECK_FALSE(agg.agreement.at("q11"));
}

TEST_CASE("aggregates do not depend on arrival order") {
  std::mt19937 rng(9);
  std::vector<LikertRating> rs;
  for (int i = 0; i < 60; ++i) {
    const auto& q = questionnaire()[rng() % 14];
    std::optional<std::string> model;
    if (q.level == QuestionLevel::Utterance) model = (rng() & 1) ? "gpt" : "human";
    rs.push_back(rating("s" + std::to_string(i % 4), "r" + std::to_string(i % 4), "d" + std::to_string(rng() % 3),
                        model, q.id, 1 + static_cast<int>(rng() % 5)));
  }
  const auto reference = to_json(aggregate_ratings(rs)).dump();
  for (int k = 0; k < 20; ++k) {
    std::shuffle(rs.begin(), rs.end(), rng);
    CHECK(to_json(aggregate_ratings(rs)).dump() == reference);
  }
}

TEST_CASE("csv export") {
  std::vector<LikertRating> rs{rating("s1", "r,1", "d1", "gpt", "q01", 4)};
  std::ostringstream raw, agg;
  write_ratings_csv(raw, rs);
  CHECK(raw.str() == "session_id,rater_id,dialogue_id,model_id,question_id,value,timestamp\n"
                     "s1,\"r,1\",d1,gpt,q01,4,2024-01-01T00:00:00Z\n");
  write_rating_aggregate_csv(agg, aggregate_ratings(rs));
  CHECK(agg.str() == "model_id,question_id,mean,sd,n,reversed_mean,agreement\ngpt,q01,4.000,0.000,1,,\n");
}

TEST_CASE("concurrent writers lose nothing") {
  World w;
  RatingStore store(w.journal(), &w.dialogues, &w.responses);
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&, t] {
      for (int i = 0; i < 10; ++i) {
        const auto& q = questionnaire()[i];
        store.record_rating(rating("s" + std::to_string(t), "r" + std::to_string(t), "d1", "gpt", q.id, 1 + i % 5));
      }
    });
  for (auto& t : threads) t.join();
  CHECK(store.ratings().size() == 80);
  RatingStore reopened(w.journal(), &w.dialogues, &w.responses);
  CHECK(reopened.ratings().size() == 80);
}

TEST_CASE("HTTP API") {
  World w;
  RatingStore store(w.journal(), &w.dialogues, &w.responses);
  AnnotationServerOptions opts;
  opts.port = 0;
  AnnotationServer server(store, w.dialogues, w.responses, opts);
  const int port = server.bind();
  std::thread t([&] { server.listen(); });
  httplib::Client client("127.0.0.1", port);
  for (int i = 0; i < 100 && !client.Get("/api/questionnaire"); ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(10));

  auto q = client.Get("/api/questionnaire");
  REQUIRE(q);
  CHECK(q->status == 200);
  CHECK(json::parse(q->body).size() == 14);

  auto s = client.Post("/api/session", R"({"rater_id":"alice","dialogue_ids":["d1"]})", "application/json");
  REQUIRE(s);
  CHECK(s->status == 201);
  const auto session_id = json::parse(s->body).at("session_id").get<std::string>();

  auto task = client.Get("/api/session/" + session_id + "/next-task");
  REQUIRE(task);
  CHECK(task->status == 200);
  const auto view = json::parse(task->body);
  CHECK(view.at("done") == false);
  CHECK(view.at("dialogue_id") == "d1");
  CHECK(view.at("responses").size() == 3);
  CHECK(task->body.find("vicuna") == std::string::npos);
  CHECK(task->body.find("\"model_id\"") == std::string::npos);

  json body{{"session_id", session_id}, {"dialogue_id", "d1"}, {"response_label", "A"}, {"question_id", "q01"},
            {"value", 4}};
  auto r = client.Post("/api/rating", body.dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == 201);
  r = client.Post("/api/rating", body.dump(), "application/json");
  CHECK(r->status == 409);
  CHECK(json::parse(r->body).at("code") == "RejectedDuplicate");
  body["overwrite"] = true;
  CHECK(client.Post("/api/rating", body.dump(), "application/json")->status == 201);

  body["value"] = 9;
  r = client.Post("/api/rating", body.dump(), "application/json");
  CHECK(r->status == 400);
  CHECK(json::parse(r->body).at("code") == "ValueOutOfRange");

  body["value"] = 3;
  body["response_label"] = "Z";
  CHECK(client.Post("/api/rating", body.dump(), "application/json")->status == 404);
  body.erase("response_label");
  CHECK(json::parse(client.Post("/api/rating", body.dump(), "application/json")->body).at("code") ==
        "LevelMismatch");
  body["session_id"] = "nope";
  CHECK(client.Post("/api/rating", body.dump(), "application/json")->status == 404);
  CHECK(client.Get("/api/session/nope/next-task")->status == 404);
  CHECK(client.Post("/api/rating", "{oops", "application/json")->status == 400);

  auto agg = client.Get("/api/aggregates");
  REQUIRE(agg);
  CHECK(json::parse(agg->body).at("cells").size() == 1);

  server.stop();
  t.join();
}

TEST_CASE("next task walks through a session") {
  World w;
  RatingStore store(w.journal(), &w.dialogues, &w.responses);
  const auto s = store.create_session("dan", {"d2"});
  auto view = next_task_view(store, s, w.dialogues, w.responses);
  CHECK(view.at("done") == false);
  for (const auto& m : s.tasks[0].mask)
    for (const auto& q : questionnaire())
      if (q.level == QuestionLevel::Utterance) store.record_rating(rating(s.id, "dan", "d2", m.model_id, q.id, 3));
  view = next_task_view(store, s, w.dialogues, w.responses);
  CHECK(view.at("done") == false);
  CHECK(view.at("answered").size() == 30);
  for (const auto& q : questionnaire())
    if (q.level == QuestionLevel::Dialogue) store.record_rating(rating(s.id, "dan", "d2", std::nullopt, q.id, 3));
  CHECK(next_task_view(store, s, w.dialogues, w.responses).at("done") == true);
}
