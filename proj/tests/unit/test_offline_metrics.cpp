#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "empatheval/errors.hpp"
#include "empatheval/offline_metrics.hpp"

using namespace empatheval;

TEST_CASE("bleu identities") {
  const auto x = tokenize("i am so sorry to hear about your dog");
  CHECK(sentence_bleu(x, x) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sentence_bleu(tokenize("hi"), tokenize("hi")) == doctest::Approx(1.0));
  CHECK(sentence_bleu({}, x) == 0.0);
  CHECK_THROWS_AS(sentence_bleu(x, {}), EmptyReference);
  CHECK(sentence_bleu(tokenize("apple banana"), tokenize("cherry date")) == 0.0);
}

TEST_CASE("bleu hand-computed values") {
  // (2/7 * 1/7 * 1/6 * 1/5)^(1/4), brevity penalty 1
  CHECK(sentence_bleu(tokenize("the the the the the the the"), tokenize("the cat is on the mat")) ==
        doctest::Approx(0.19205612637498934).epsilon(1e-12));
  CHECK(sentence_bleu(tokenize("i am so sorry"), tokenize("i am really so sorry to hear")) ==
        doctest::Approx(0.27272095638120036).epsilon(1e-12));
}

TEST_CASE("bleu stays in [0,1]") {
  std::mt19937 rng(3);
  const std::vector<std::string> vocab{"a", "b", "c", "d", "e", "."};
  for (int i = 0; i < 300; ++i) {
    TokenSequence c, r;
    for (unsigned k = 0; k < rng() % 12; ++k) c.push_back(vocab[rng() % vocab.size()]);
    for (unsigned k = 0; k < 1 + rng() % 12; ++k) r.push_back(vocab[rng() % vocab.size()]);
    const double b = sentence_bleu(c, r);
    CHECK(b >= 0.0);
    CHECK(b <= 1.0 + 1e-12);
  }
}

TEST_CASE("distinct-n") {
  CHECK(distinct_n(tokenize("a a a a"), 1) == doctest::Approx(0.25));
  CHECK(distinct_n(tokenize("a b c d"), 1) == 1.0);
  CHECK(distinct_n(tokenize("a b a b"), 2) == doctest::Approx(2.0 / 3.0));
  CHECK(distinct_n({}, 1) == 0.0);
  CHECK(distinct_n(tokenize("a"), 2) == 0.0);
}

TEST_CASE("perplexity") {
  const double lp[] = {std::log(0.5), std::log(0.5)};
  CHECK(perplexity(lp) == doctest::Approx(2.0));
  const double zero[] = {0.0, 0.0};
  CHECK(perplexity(zero) == 1.0);
  CHECK_THROWS_AS(perplexity(std::span<const double>{}), EmptyLogprobs);
  const double nan[] = {std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(perplexity(nan), NonFinite);
  const double inf[] = {-std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(perplexity(inf), NonFinite);
}

namespace {

struct Fixture {
  DialogueSet dialogues{{"sad"}};
  ResponseTable responses;

  Fixture() {
    dialogues.add({"d1", "sad", {{Role::Seeker, "My dog died."}, {Role::Supporter, "I am so sorry."}}, Split::Test});
    dialogues.add({"d2", "sad", {{Role::Seeker, "I failed my exam."}}, Split::Test});
    responses.add({"d1", "human", "I am so sorry.", std::nullopt});
    responses.add({"d1", "bot", "so sorry", std::vector<TokenLogprob>{{"so", -1.0}, {"sorry", -2.0}}});
    responses.add({"d2", "bot", "That is hard.", std::nullopt});
  }
};

}  // namespace

TEST_CASE("gold reference prefers the human row, then the last supporter turn") {
  Fixture f;
  CHECK(gold_reference(*f.dialogues.find("d1"), f.responses) == "I am so sorry.");
  CHECK_THROWS_AS(gold_reference(*f.dialogues.find("d2"), f.responses), MissingReference);
  f.responses.add({"d2", "human", "That sounds awful.", std::nullopt});
  CHECK(gold_reference(*f.dialogues.find("d2"), f.responses) == "That sounds awful.");
}

TEST_CASE("score_offline and aggregates") {
  Fixture f;
  f.responses.add({"d2", "human", "That sounds really hard.", std::nullopt});
  const auto scores = score_offline(f.dialogues, f.responses);
  REQUIRE(scores.size() == 4);
  CHECK(scores[0].model_id == "human");
  CHECK_FALSE(scores[0].bleu);
  CHECK_FALSE(scores[0].perplexity);
  CHECK(scores[1].model_id == "bot");
  REQUIRE(scores[1].perplexity);
  CHECK(*scores[1].perplexity == doctest::Approx(std::exp(1.5)));
  REQUIRE(scores[1].bleu);

  const auto agg = aggregate_offline_scores(scores);
  CHECK_FALSE(agg.at("human").perplexity);
  CHECK_FALSE(agg.at("human").bleu);
  CHECK(agg.at("bot").perplexity->n == 1);
  CHECK(agg.at("bot").distinct_1->n == 2);
  CHECK(agg == aggregate_offline(f.dialogues, f.responses));
}

TEST_CASE("constant perplexity aggregates with zero SD") {
  std::vector<OfflineScores> scores;
  for (int i = 0; i < 5; ++i) scores.push_back({"d" + std::to_string(i), "FE", 8.322, std::nullopt, 0.9});
  const auto agg = aggregate_offline_scores(scores);
  CHECK(agg.at("FE").perplexity->mean == doctest::Approx(8.322));
  CHECK(agg.at("FE").perplexity->sd == doctest::Approx(0.0));
  CHECK_FALSE(agg.at("FE").bleu);
}

TEST_CASE("offline csv round trip") {
  Fixture f;
  CHECK_THROWS_AS(score_offline(f.dialogues, f.responses), MissingReference);
  f.responses.add({"d2", "human", "Oh no.", std::nullopt});
  const auto scores = score_offline(f.dialogues, f.responses);
  std::stringstream ss;
  write_offline_csv(ss, scores);
  CHECK(ss.str().rfind("dialogue_id,model_id,perplexity,bleu,distinct_1\n", 0) == 0);
  CHECK(read_offline_csv(ss) == scores);
}
