#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "empatheval/behavior.hpp"
#include "empatheval/errors.hpp"
#include "empatheval/format.hpp"
#include "support/scripted_judge.hpp"
#include "support/verdict_cases.hpp"

using namespace empatheval;

namespace {

Dialogue dialogue() {
  return {"d1", "sad", {{Role::Seeker, "My dog died."}, {Role::Supporter, "I'm sorry."}}, Split::Test};
}

std::vector<CandidateResponse> candidates(std::size_t n) {
  std::vector<CandidateResponse> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"m" + std::to_string(i), "reply " + std::to_string(i)});
  return out;
}

}  // namespace

TEST_CASE("ids round trip") {
  for (auto b : kAllBehaviors) CHECK(parse_behavior_id(behavior_id(b)) == b);
  CHECK_FALSE(parse_behavior_id("kindness"));
  CHECK(is_positive(BehaviorType::Consolation));
  CHECK_FALSE(is_positive(BehaviorType::Apathetic));
}

TEST_CASE("batch prompt") {
  const auto d = dialogue();
  const auto rs = candidates(8);
  const auto p = build_behavior_prompt(BehaviorType::EmpathicConcern, d.history(), rs, true);
  CHECK(p.find("[template behavior-v1]") != std::string::npos);
  CHECK(p.find("eight different assistants") != std::string::npos);
  CHECK(p.find("'empathetic concern'") != std::string::npos);
  CHECK(p.find("User: My dog died.") != std::string::npos);
  CHECK(p.find("Listener: I'm sorry.") == std::string::npos);  // the slot being filled is not history
  CHECK(p.find("Assistant 8: reply 7") != std::string::npos);
  CHECK(p.find("m0") == std::string::npos);
  CHECK(p.ends_with("Please make sure to provide the output only as 'yes' or 'no' for each response."));

  BehaviorPromptOptions bare;
  bare.include_definitions = false;
  const auto q = build_behavior_prompt(BehaviorType::EmpathicConcern, d.history(), rs, true, bare);
  CHECK(q.find("Definition of") == std::string::npos);
  CHECK(p.find("Definition of") != std::string::npos);
}

TEST_CASE("single prompt") {
  const auto d = dialogue();
  const auto rs = candidates(1);
  const auto p = build_behavior_prompt(BehaviorType::Mirroring, d.history(), rs, false);
  CHECK(p.find("a response from an assistant") != std::string::npos);
  CHECK(p.find("'mirroring'") != std::string::npos);
  CHECK_THROWS(build_behavior_prompt(BehaviorType::Mirroring, d.history(), candidates(2), false));
}

TEST_CASE("curated judge outputs") {
  for (const auto& c : stub::verdict_cases()) {
    CAPTURE(c.raw);
    if (c.verdicts) {
      CHECK(parse_verdicts(c.raw, c.expected) == *c.verdicts);
    } else {
      CHECK_THROWS_AS(parse_verdicts(c.raw, c.expected), Unparseable);
    }
  }
}

TEST_CASE("render/parse round trip") {
  std::mt19937 rng(5);
  for (int i = 0; i < 200; ++i) {
    std::vector<bool> v(1 + rng() % 8);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = rng() & 1;
    CHECK(parse_verdicts(render_verdicts(v), v.size()) == v);
  }
}

TEST_CASE("batch judging keeps the raw line per verdict") {
  stub::ScriptedJudge judge;
  judge.queue({"Assistant 1: yes\nAssistant 2: no\nAssistant 3: YES"});
  BehaviorJudgeOptions opts;
  opts.mode = JudgeMode::Batch;
  const auto rs = candidates(3);
  const auto v = judge_behavior(dialogue(), rs, BehaviorType::Consolation, judge, opts);
  REQUIRE(v.size() == 3);
  CHECK(v[0].verdict);
  CHECK_FALSE(v[1].verdict);
  CHECK(v[2].verdict);
  CHECK(v[1].raw == "Assistant 2: no");
  CHECK(v[2].model_id == "m2");
  CHECK(v[0].prompt_version == "behavior-v1");
  CHECK(judge.requests().size() == 1);
}

TEST_CASE("wrong verdict count triggers re-asks, then Unparseable") {
  stub::ScriptedJudge judge;
  judge.queue({"yes", "yes\nno"});
  BehaviorJudgeOptions opts;
  opts.mode = JudgeMode::Batch;
  const auto rs = candidates(2);
  CHECK(judge_behavior(dialogue(), rs, BehaviorType::Mirroring, judge, opts).size() == 2);
  CHECK(judge.requests().size() == 2);

  stub::ScriptedJudge stubborn([](const JudgeRequest&) { return std::string("hmm"); });
  CHECK_THROWS_AS(judge_behavior(dialogue(), rs, BehaviorType::Mirroring, stubborn, opts), Unparseable);
  CHECK(stubborn.requests().size() == 3);
}

TEST_CASE("single mode asks once per response") {
  stub::ScriptedJudge judge([](const JudgeRequest&) { return std::string("Yes."); });
  const auto rs = candidates(4);
  const auto v = judge_behavior(dialogue(), rs, BehaviorType::Mirroring, judge);
  CHECK(v.size() == 4);
  CHECK(judge.requests().size() == 4);
}

TEST_CASE("judge_all_behaviors orders by dialogue, behaviour, model") {
  DialogueSet dialogues({"sad"});
  dialogues.add({"d1", "sad", {{Role::Seeker, "a"}}, Split::Test});
  dialogues.add({"d2", "sad", {{Role::Seeker, "b"}}, Split::Test});
  ResponseTable responses;
  for (auto d : {"d1", "d2"})
    for (auto m : {"x", "y"}) responses.add({d, m, std::string(m) + " says hi", {}});
  stub::ScriptedJudge judge([](const JudgeRequest&) { return std::string("no"); }, 4);
  const std::array<BehaviorType, 2> bs{BehaviorType::Mirroring, BehaviorType::Apathetic};
  const auto v = judge_all_behaviors(dialogues, responses, bs, judge);
  REQUIRE(v.size() == 8);
  CHECK(v[0].dialogue_id == "d1");
  CHECK(v[0].behavior == BehaviorType::Mirroring);
  CHECK(v[1].model_id == "y");
  CHECK(v[2].behavior == BehaviorType::Apathetic);
  CHECK(v[4].dialogue_id == "d2");
}

TEST_CASE("proportions are exact") {
  std::vector<JudgeVerdict> v;
  for (int i = 0; i < 10000; ++i) v.push_back({"d", "Vicuna_FT", BehaviorType::Mirroring, i < 9408, "", ""});
  const auto p = aggregate_behavior(v);
  const auto& cell = p.at("Vicuna_FT").at(BehaviorType::Mirroring);
  CHECK(cell == ProportionCell{9408, 10000});
  CHECK(format_percent(cell.yes, cell.total) == "94.08");
}

TEST_CASE("verdict JSONL round trip") {
  std::vector<JudgeVerdict> v{{"d1", "a", BehaviorType::Judgmental, true, "1. yes", "behavior-v1"},
                              {"d1", "b", BehaviorType::Mirroring, false, "no \"really\"", "behavior-v1"}};
  std::stringstream ss;
  write_verdicts_jsonl(ss, v);
  CHECK(read_verdicts_jsonl(ss) == v);
  std::istringstream bad(R"({"dialogue_id":"d","model_id":"m","behavior":"rude","verdict":true})");
  CHECK_THROWS_AS(read_verdicts_jsonl(bad), MalformedRecord);
}
