#include <set>

#include "doctest.h"
#include "soei/domain.hpp"
#include "soei/error.hpp"
#include "soei/event_log.hpp"
#include "soei/ids.hpp"
#include "soei/json_io.hpp"
#include "soei/text_util.hpp"
#include "soei/tokenize.hpp"
#include "test_support.hpp"

using namespace soei;

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

TaskTuple spring_tuple() {
  TaskTuple t;
  t.content_ref = "spring.txt";
  t.phase = InstructionalPhase::PI;
  t.question_type = QuestionType::Closed;
  t.trait = TraitCode::HN;
  return t;
}

}  // namespace

TEST_CASE("error codes render as snake_case") {
  CHECK(to_string(ErrorCode::TurnInFlight) == "turn_in_flight");
  CHECK(to_string(ErrorCode::InvalidTuple) == "invalid_tuple");
  CHECK(to_string(ErrorCode::GatewayError) == "gateway_error");
}

TEST_CASE("trait parsing accepts codes and display names") {
  CHECK(parse_trait("HN") == TraitCode::HN);
  CHECK(parse_trait("high extraversion") == TraitCode::HE);
  CHECK(parse_trait("lo") == TraitCode::LO);
  CHECK_FALSE(parse_trait("XX").has_value());
  CHECK(code_of([] { parse_trait_or_throw("XX"); }) == ErrorCode::InvalidArgument);
  for (auto t : kAllTraits) {
    CHECK(parse_trait(to_string(t)) == t);
    CHECK_FALSE(trait_info(t).descriptors.empty());
  }
}

TEST_CASE("cohort members") {
  CHECK(CohortMember::real_student().label() == "RS");
  CHECK(CohortMember::lvsa(TraitCode::HA).label() == "HA");
  CHECK(CohortMember::parse("RS") == CohortMember::real_student());
  CHECK(CohortMember::parse("LC") == CohortMember::lvsa(TraitCode::LC));
}

TEST_CASE("task tuple validation") {
  CHECK_NOTHROW(validate_task_tuple(spring_tuple()));

  auto t = spring_tuple();
  t.question_type = QuestionType::NonQuestion;
  CHECK(code_of([&] { validate_task_tuple(t); }) == ErrorCode::InvalidTuple);

  t = spring_tuple();
  t.constraints.max_sentence_tokens = 0;
  CHECK(code_of([&] { validate_task_tuple(t); }) == ErrorCode::InvalidTuple);

  t = spring_tuple();
  t.content_ref = "  ";
  CHECK(code_of([&] { validate_task_tuple(t); }) == ErrorCode::InvalidTuple);

  t = spring_tuple();
  t.constraints.filler_policy = FillerPolicy::Required;
  t.constraints.filler_lexicon.clear();
  CHECK(code_of([&] { validate_task_tuple(t); }) == ErrorCode::InvalidTuple);
}

TEST_CASE("tuple json rejects several traits") {
  json j = spring_tuple();
  CHECK(j.get<TaskTuple>() == spring_tuple());
  j["traits"] = {"HN", "HE"};
  CHECK(code_of([&] { (void)j.get<TaskTuple>(); }) == ErrorCode::InvalidTuple);
}

TEST_CASE("scene partition") {
  const auto t = spring_tuple();
  CHECK(scene_partition(t, ByPurpose{DatasetPurpose::Diagnostic}) == ScenePartition::DS);
  CHECK(scene_partition(t, ByPurpose{DatasetPurpose::FineTune}) == ScenePartition::DO);
  CHECK(scene_partition(t, ByPurpose{DatasetPurpose::Evaluation}) == ScenePartition::DE);
  CHECK(scene_partition(t, ByPurpose{DatasetPurpose::Interaction}) == ScenePartition::DI);
  ByPhase by_phase{{{InstructionalPhase::PI, ScenePartition::DE}}, ScenePartition::DO};
  CHECK(scene_partition(t, by_phase) == ScenePartition::DE);
  CHECK(scene_partition(t, by_phase) == scene_partition(t, by_phase));
  auto other = t;
  other.phase = InstructionalPhase::LS;
  CHECK(scene_partition(other, by_phase) == ScenePartition::DO);
}

TEST_CASE("session invariants") {
  Session s;
  s.id = "s1";
  s.turns = {{0, Role::Teacher, "Q", 1, 0}, {1, Role::Student, "A", 2, 5}};
  CHECK_NOTHROW(check_session_invariants(s));
  s.turns.push_back({2, Role::Student, "again", 3, 0});
  CHECK(code_of([&] { check_session_invariants(s); }) == ErrorCode::WrongTurnOrder);
  s.turns.pop_back();
  s.turns.push_back({3, Role::Teacher, "skip", 3, 0});
  CHECK(code_of([&] { check_session_invariants(s); }) == ErrorCode::WrongTurnOrder);
  s.turns.pop_back();
  s.survey = SurveyResponse{};
  CHECK(code_of([&] { check_session_invariants(s); }) == ErrorCode::NotEnded);
  s.status = SessionStatus::Ended;
  CHECK_NOTHROW(check_session_invariants(s));
}

TEST_CASE("survey likert range") {
  SurveyResponse ok{{{"q1", 1}, {"q2", 5}}, {}, {}};
  CHECK_NOTHROW(validate_survey(ok));
  SurveyResponse bad{{{"q1", 6}}, {}, {}};
  CHECK(code_of([&] { validate_survey(bad); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("ranking and verdict guards") {
  std::vector<TraitCode> dup = {TraitCode::HA, TraitCode::HA};
  CHECK(code_of([&] { check_ranking(dup); }) == ErrorCode::InvalidArgument);
  std::vector<Verdict> vs = {{"1", "e1", EvaluatorKind::Human, true, "", true},
                             {"1", "e1", EvaluatorKind::Human, false, "", true}};
  CHECK(code_of([&] { check_unique_verdicts(vs); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("json round trips") {
  Session s;
  s.id = "abc";
  s.teacher_id = "t";
  s.trait = TraitCode::LC;
  s.content_ref = "spring";
  s.backend_label = "mock";
  s.turns = {{0, Role::Teacher, "Q", 10, 0}, {1, Role::Student, "A", 20, 7}};
  s.status = SessionStatus::Ended;
  s.survey = SurveyResponse{{{"q1", 3}}, {{"q2", {"a", "b"}}}, {{"q3", "fine"}}};
  CHECK(json(s).get<Session>() == s);

  DatasetRecord r{"sys", "q", "a", {TraitCode::HE, InstructionalPhase::KC, QuestionType::Open, "x", RecordSource::Fixture}};
  CHECK(json(r).get<DatasetRecord>() == r);

  Verdict v{"7", "e2", EvaluatorKind::Human, false, "why", true};
  CHECK(json(v).get<Verdict>() == v);

  RankingPrediction p{3, {TraitCode::HA, TraitCode::HE}, TraitCode::HE, 0.8};
  CHECK(json(p).get<RankingPrediction>() == p);
}

TEST_CASE("jsonl parsing skips blank lines") {
  auto rows = parse_jsonl("{\"a\":1}\n\n{\"a\":2}\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1]["a"] == 2);
  CHECK_THROWS(parse_jsonl("{oops}\n"));
}

TEST_CASE("id generator is time ordered and unique") {
  std::int64_t now = 1000;
  IdGenerator gen([&] { return now; }, 42);
  std::set<std::string> seen;
  std::string prev;
  for (int i = 0; i < 500; ++i) {
    if (i % 7 == 0) ++now;
    auto id = gen.next();
    CHECK(id.size() == 24);
    CHECK(id > prev);
    CHECK(seen.insert(id).second);
    prev = id;
  }
}

TEST_CASE("tokenizer") {
  CHECK(tokenize("a b c", {}).size() == 3);
  CHECK(tokenize("", {}).empty());
  CHECK(tokenize("你好吗", {TokenMode::Characters, true}).size() == 3);
  CHECK(tokenize("你好吗", {}).size() == 3);
  auto words = tokenize("Hello, WORLD! It's fine.", {});
  CHECK(words.front() == "hello");
  CHECK(tokenize("It was written in the Song Dynasty", {}).size() == 7);
  auto bad = decode_utf8("a\xff");
  REQUIRE(bad.size() == 2);
  CHECK(bad[1] == U'�');
  CHECK(encode_utf8(U'好') == "好");
}

TEST_CASE("text helpers") {
  CHECK(text::trim("  x ") == "x");
  CHECK(text::iequals("AbC", "abc"));
  CHECK(text::normalize_label("Question-Type ") == "question type");
  CHECK(text::strip_markdown("- **Teacher**: hi") == "Teacher: hi");
  CHECK(text::split_lines("a\r\nb").size() == 2);
}

// ---------------------------------------------------------------------------

namespace {

SessionEvent created(std::int64_t seq = 0) {
  return {seq, EventKind::Created,
          {{"id", "s1"}, {"teacher_id", "t"}, {"trait", "HN"}, {"content_ref", "c"}, {"backend_label", "b"}}, 1};
}

SessionEvent turn(std::int64_t seq, std::int64_t index, Role role) {
  return {seq, role == Role::Teacher ? EventKind::TeacherTurn : EventKind::StudentTurn,
          DialogueTurn{index, role, "x", 5, 0}, 5};
}

}  // namespace

TEST_CASE("event fold enforces the log invariants") {
  std::vector<SessionEvent> log = {created(), turn(1, 0, Role::Teacher), turn(2, 1, Role::Student),
                                   {3, EventKind::Ended, json::object(), 9},
                                   {4, EventKind::SurveySubmitted, SurveyResponse{{{"q", 2}}, {}, {}}, 10}};
  auto s = fold_events(log);
  CHECK(s.id == "s1");
  CHECK(s.turns.size() == 2);
  CHECK(s.status == SessionStatus::Ended);
  CHECK(s.survey.has_value());

  SUBCASE("gap in seq") {
    log[2].seq = 5;
    CHECK(code_of([&] { fold_events(log); }) == ErrorCode::StorageFailure);
  }
  SUBCASE("out of order turn") {
    std::swap(log[1].payload, log[2].payload);
    CHECK(code_of([&] { fold_events(log); }) == ErrorCode::StorageFailure);
  }
  SUBCASE("event after survey") {
    log.push_back({5, EventKind::Ended, json::object(), 11});
    CHECK(code_of([&] { fold_events(log); }) == ErrorCode::StorageFailure);
  }
  SUBCASE("survey before end") {
    std::vector<SessionEvent> early = {created(), {1, EventKind::SurveySubmitted, SurveyResponse{}, 2}};
    CHECK(code_of([&] { fold_events(early); }) == ErrorCode::StorageFailure);
  }
  SUBCASE("empty log") { CHECK(code_of([] { fold_events({}); }) == ErrorCode::StorageFailure); }
}

TEST_CASE("event store appends and reloads") {
  test::TempDir dir;
  EventStore store(dir.path());
  std::vector<SessionEvent> log = {created(), turn(1, 0, Role::Teacher), turn(2, 1, Role::Student)};
  for (const auto& e : log) store.append("s1", e);
  store.add_to_index({"s1", "t", TraitCode::HN, 1});

  auto back = store.load("s1");
  REQUIRE(back.size() == 3);
  CHECK(event_to_json(back[2]) == event_to_json(log[2]));
  CHECK(fold_events(back) == fold_events(log));
  CHECK(store.exists("s1"));
  CHECK_FALSE(store.exists("../etc"));
  CHECK(code_of([&] { store.load("nope"); }) == ErrorCode::NotFound);
  CHECK(code_of([&] { store.load("../x"); }) == ErrorCode::NotFound);
  auto idx = store.index();
  REQUIRE(idx.size() == 1);
  CHECK(idx[0].trait == TraitCode::HN);
}
