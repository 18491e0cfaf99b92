#include <fstream>
#include <sstream>

#include "doctest.h"
#include "soei/error.hpp"
#include "soei/gateway.hpp"
#include "soei/json_io.hpp"
#include "soei/judge.hpp"
#include "test_support.hpp"

using namespace soei;
using namespace soei::test;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected soei::Error");
  return ErrorCode::InvalidArgument;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

BackendConfig judge_cfg() {
  clear_backend_env();
  return default_backend_config(BackendRole::Judge);
}

std::vector<DialoguePair> fixture_pairs() {
  std::vector<DialoguePair> out;
  for (const auto& j : read_jsonl_file(data_dir() / "fixtures" / "dialogues_hn.jsonl")) {
    auto r = j.get<DatasetRecord>();
    out.push_back({std::to_string(out.size() + 1), r.query, r.response});
  }
  return out;
}

std::vector<DialogueTurn> short_session() {
  return {{0, Role::Teacher, "Who wrote this essay?", 0, 0},
          {1, Role::Student, "Um, Lao She?", 10, 900},
          {2, Role::Teacher, "Good. Why is winter a treasure?", 20, 5000},
          {3, Role::Student, "Uh, because, um, it is warm?", 30, 800}};
}

}  // namespace

TEST_CASE("rubric loads with four dimensions and fifteen criteria") {
  auto r = load_rubric(data_dir() / "rubric" / "realness_v1.json");
  CHECK(r.dimensions.size() == 4);
  std::size_t criteria = 0;
  for (const auto& d : r.dimensions) criteria += d.criteria.size();
  CHECK(criteria == 15);
  auto text = render_rubric(r);
  CHECK(text.find("- Please consider") != std::string::npos);
  CHECK(text.find("    - Complexity") != std::string::npos);

  auto bad = r;
  bad.dimensions.back().criteria.pop_back();
  CHECK(code_of([&] { validate_rubric(bad); }) == ErrorCode::InvalidArgument);
  bad = r;
  bad.dimensions.pop_back();
  CHECK(code_of([&] { validate_rubric(bad); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("realness answer fixture parses into ten verdicts") {
  auto raw = slurp(data_dir() / "fixtures" / "judge_answer_hn.md");
  auto items = parse_realness_answer(raw, 10);
  REQUIRE(items.size() == 10);
  for (std::size_t i = 0; i < items.size(); ++i) {
    REQUIRE(items[i].has_value());
    CHECK(items[i]->compliant == (i != 5));
    CHECK_FALSE(items[i]->rationale.empty());
  }
  CHECK(items[5]->rationale.find("repetition") != std::string::npos);
}

TEST_CASE("realness parser rejects unreadable or missing blocks") {
  std::string raw =
      "Question 1:\nChain-of-thought reasoning: fine.\nCompliance: 1\n\n"
      "Question 2:\nChain-of-thought reasoning: odd.\nCompliance: 3\n\n"
      "Question 3:\nCompliance: 1\nCompliance: 2\n";
  auto items = parse_realness_answer(raw, 4);
  CHECK(items[0].has_value());
  CHECK_FALSE(items[1].has_value());
  CHECK_FALSE(items[2].has_value());
  CHECK_FALSE(items[3].has_value());
  CHECK(parse_realness_answer("Question 1: Compliance: 2 (not realistic)", 1)[0]->compliant == false);
}

TEST_CASE("judge marks an item invalid when the re-ask still fails") {
  auto backend = std::make_shared<ScriptedBackend>(std::vector<ScriptedBackend::Reply>{
      "Question 1:\nChain-of-thought reasoning: ok.\nCompliance: 1\n\nQuestion 2:\nCompliance: 3\n",
      "Question 2:\nCompliance: maybe\n"});
  Judge judge(backend, judge_cfg(), load_judge_prompts(data_dir() / "templates"));
  auto rubric = load_rubric(data_dir() / "rubric" / "realness_v1.json");
  auto v = judge.judge_realness_batch({{"a", "T1", "S1"}, {"b", "T2", "S2"}}, rubric);
  REQUIRE(v.size() == 2);
  CHECK(v[0].valid);
  CHECK(v[0].compliant);
  CHECK_FALSE(v[1].valid);
  CHECK(v[1].sample_id == "b");
  CHECK(backend->call_count() == 2);
  auto reask = backend->calls()[1].back().content;
  CHECK(reask.find('2') != std::string::npos);
}

TEST_CASE("judge re-ask recovers a missing item") {
  auto backend = std::make_shared<ScriptedBackend>(std::vector<ScriptedBackend::Reply>{
      "Question 1:\nCompliance: 2\n", "Question 2:\nChain-of-thought reasoning: fine.\nCompliance: 1\n"});
  Judge judge(backend, judge_cfg(), load_judge_prompts(data_dir() / "templates"));
  auto rubric = load_rubric(data_dir() / "rubric" / "realness_v1.json");
  auto v = judge.judge_realness_batch({{"a", "T1", "S1"}, {"b", "T2", "S2"}}, rubric);
  CHECK(v[0].valid);
  CHECK_FALSE(v[0].compliant);
  CHECK(v[1].valid);
  CHECK(v[1].compliant);
}

TEST_CASE("judge errors surface as JudgeUnavailable") {
  auto backend = std::make_shared<ScriptedBackend>(std::vector<ScriptedBackend::Reply>{ErrorCode::ExhaustedRetries});
  Judge judge(backend, judge_cfg(), load_judge_prompts(data_dir() / "templates"));
  auto rubric = load_rubric(data_dir() / "rubric" / "realness_v1.json");
  CHECK(code_of([&] { judge.judge_realness_batch({{"a", "T", "S"}}, rubric); }) == ErrorCode::JudgeUnavailable);
}

TEST_CASE("recorded judge cassette replays the fixture verdicts") {
  auto cassette = std::make_shared<CassetteBackend>(
      CassetteMode::Replay, source_dir() / "tests" / "cassettes" / "judge_realness_hn.jsonl", nullptr);
  Judge judge(cassette, judge_cfg(), load_judge_prompts(data_dir() / "templates"));
  auto rubric = load_rubric(data_dir() / "rubric" / "realness_v1.json");
  auto v = judge.judge_realness_batch(fixture_pairs(), rubric);
  REQUIRE(v.size() == 10);
  int compliant = 0;
  for (const auto& x : v) {
    CHECK(x.valid);
    compliant += x.compliant ? 1 : 0;
  }
  CHECK(compliant == 9);
  CHECK_FALSE(v[5].compliant);
}

TEST_CASE("annotation label aliases") {
  auto t = std::get<TeacherLabels>(
      parse_annotation("**Bloom Level**: analyse\nQuestion Type: open-ended question\nTeacher Act: praise", Role::Teacher));
  CHECK(t.bloom == BloomLevel::Analyze);
  CHECK(t.question_type == QuestionType::Open);
  CHECK(t.teacher_act == TeacherAct::PositiveReinforcement);
  CHECK(std::get<StudentLabels>(parse_annotation("Student Act: wrong answer", Role::Student)).student_act ==
        StudentAct::IncorrectAnswer);
  CHECK(code_of([] { parse_annotation("Bloom Level: Apply\nQuestion Type: Open\nTeacher Act: Probing", Role::Teacher); }) ==
        ErrorCode::AnnotationFailure);
  CHECK(code_of([] { parse_annotation("nothing useful", Role::Student); }) == ErrorCode::AnnotationFailure);
}

TEST_CASE("annotate_turn re-asks once then fails") {
  auto session = short_session();
  auto backend = std::make_shared<ScriptedBackend>(
      std::vector<ScriptedBackend::Reply>{"Student Act: mumbling", "Student Act: correct answer"});
  Judge judge(backend, judge_cfg(), load_judge_prompts(data_dir() / "templates"));
  auto labels = judge.annotate_turn(session, session[1]);
  CHECK(std::get<StudentLabels>(labels).student_act == StudentAct::CorrectAnswer);

  backend->push("Student Act: ?");
  backend->push("Student Act: ??");
  CHECK(code_of([&] { judge.annotate_turn(session, session[3]); }) == ErrorCode::AnnotationFailure);
  DialogueTurn stranger{9, Role::Student, "not here", 0, 0};
  CHECK(code_of([&] { judge.annotate_turn(session, stranger); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("ranking parser") {
  CHECK(parse_ranking("Ranking: HA > HE > HN > LO > LC") ==
        std::vector<TraitCode>{TraitCode::HA, TraitCode::HE, TraitCode::HN, TraitCode::LO, TraitCode::LC});
  CHECK(parse_ranking("Some thoughts.\n1. HN (anxious) > 2. HE > LC.") ==
        std::vector<TraitCode>{TraitCode::HN, TraitCode::HE, TraitCode::LC});
  CHECK(code_of([] { parse_ranking("HA > HA"); }) == ErrorCode::RankParseFailure);
  CHECK(code_of([] { parse_ranking("I think it is the anxious one"); }) == ErrorCode::RankParseFailure);
  CHECK(code_of([] { parse_ranking("Ranking: HA > XX"); }) == ErrorCode::RankParseFailure);
}

TEST_CASE("rank_personality scores the true trait position") {
  auto session = short_session();
  auto backend = std::make_shared<ScriptedBackend>(std::vector<ScriptedBackend::Reply>{
      "Ranking: HN > HE > HA > LC > LO", "Ranking: HE > HN > HA > LC > LO", "Ranking: HE > HA"});
  Judge judge(backend, judge_cfg(), load_judge_prompts(data_dir() / "templates"));
  auto p1 = judge.rank_personality(session, TraitCode::HN);
  CHECK(p1.turn_index == 3);
  CHECK(p1.score == 1.0);
  CHECK(judge.rank_personality(session, TraitCode::HN).score == doctest::Approx(0.8));
  CHECK(judge.rank_personality(session, TraitCode::HN).score == 0.0);

  std::vector<DialogueTurn> teacher_last(session.begin(), session.begin() + 3);
  CHECK(code_of([&] { judge.rank_personality(teacher_last, TraitCode::HN); }) == ErrorCode::InvalidArgument);
  backend->push("no idea");
  backend->push("still no idea");
  CHECK(code_of([&] { judge.rank_personality(session, TraitCode::HN); }) == ErrorCode::RankParseFailure);
}

TEST_CASE("multiple-choice scoring") {
  auto item = [](std::string id, std::string cat, char correct) {
    return McItem{id, cat, "stem", {{'A', "a"}, {'B', "b"}, {'C', "c"}, {'D', "d"}}, correct, ""};
  };
  std::vector<McItem> items = {item("1", "Chinese", 'A'), item("2", "Chinese", 'B'), item("3", "Math", 'C'),
                               item("4", "Math", 'D')};
  auto s = score_mc(items, {{"1", 'A'}, {"2", 'B'}, {"3", 'C'}, {"4", 'A'}});
  CHECK(s.correct == 3);
  CHECK(s.accuracy == doctest::Approx(0.75));
  CHECK(s.per_category.at("Chinese") == 1.0);
  CHECK(s.per_category.at("Math") == doctest::Approx(0.5));
  CHECK(s.summary_average == doctest::Approx(0.75));
  CHECK(score_mc(items, {{"1", 'A'}, {"2", 'B'}, {"3", 'C'}, {"4", 'D'}}).accuracy == 1.0);
  CHECK(score_mc(items, {}).accuracy == 0.0);
  CHECK(code_of([&] { score_mc(items, {{"99", 'A'}}); }) == ErrorCode::UnknownItem);
  auto bad = items;
  bad[0].options.erase('D');
  CHECK(code_of([&] { score_mc(bad, {}); }) == ErrorCode::InvalidArgument);
}
