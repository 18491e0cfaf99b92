#include <cstdlib>
#include <fstream>
#include <regex>

#include "doctest.h"
#include "soei/error.hpp"
#include "soei/json_io.hpp"
#include "soei/prompting.hpp"
#include "soei/text_util.hpp"
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

std::string fixture_text() { return read_text_file(test::data_dir() / "fixtures" / "generated_dialogues_hn.md"); }

ParseContext hn_context() { return {TraitCode::HN, "winter_in_jinan", "SYSTEM", RecordSource::Generated}; }

Session session_with_pairs(int pairs) {
  Session s;
  s.id = "s";
  s.trait = TraitCode::HN;
  for (int i = 0; i < pairs; ++i) {
    s.turns.push_back({2 * i, Role::Teacher, "T" + std::to_string(i), 0, 0});
    s.turns.push_back({2 * i + 1, Role::Student, "S" + std::to_string(i), 0, 0});
  }
  s.turns.push_back({2 * pairs, Role::Teacher, "pending", 0, 0});
  return s;
}

}  // namespace

TEST_CASE("template placeholders and escapes") {
  PromptTemplate t("x", "Hi {name}, {{literal}} {student personality}.");
  CHECK(t.required_placeholders() == std::set<std::string>{"name", "student personality"});
  CHECK(t.render({{"name", "Li"}, {"student personality", "HN"}}) == "Hi Li, {literal} HN.");
  CHECK(code_of([&] { t.render({{"name", "Li"}}); }) == ErrorCode::MissingPlaceholder);
}

TEST_CASE("system prompt carries descriptors and every few-shot") {
  const auto shots = load_few_shots(test::data_dir() / "fewshots" / "HN.jsonl");
  REQUIRE(shots.size() == 2);
  const auto prompt = assemble_student_system_prompt(TraitCode::HN, {}, shots);
  const auto lower = text::to_lower_ascii(prompt);
  for (auto d : trait_info(TraitCode::HN).descriptors) CHECK(lower.find(text::to_lower_ascii(d)) != std::string::npos);
  for (const auto& s : shots) {
    CHECK(prompt.find(s.teacher_text) != std::string::npos);
    CHECK(prompt.find(s.student_text) != std::string::npos);
  }
}

TEST_CASE("system prompt without examples has no example section") {
  const auto prompt = assemble_student_system_prompt(TraitCode::HE, {}, {});
  CHECK(prompt.find("Example") == std::string::npos);
  CHECK(prompt.find("high extraversion") != std::string::npos);
}

TEST_CASE("foreign few-shot is rejected") {
  FewShotExample hn{"q", "a", TraitCode::HN, {}, {}};
  CHECK(code_of([&] { assemble_student_system_prompt(TraitCode::HA, {}, {hn}); }) == ErrorCode::TraitMismatch);
}

TEST_CASE("constraint paragraph follows the filler policy") {
  LinguisticConstraints c;
  c.max_sentence_tokens = 12;
  c.filler_policy = FillerPolicy::Required;
  c.first_person_required = true;
  auto p = assemble_student_system_prompt(TraitCode::HN, c, {});
  CHECK(p.find("within 12 words") != std::string::npos);
  CHECK(p.find("\"um\"") != std::string::npos);
  CHECK(p.find("first person") != std::string::npos);
  c.filler_policy = FillerPolicy::Forbidden;
  CHECK(assemble_student_system_prompt(TraitCode::HN, c, {}).find("Do not use filler words") != std::string::npos);
}

TEST_CASE("session messages window the history") {
  auto one = assemble_session_messages(session_with_pairs(0), 5);
  REQUIRE(one.size() == 2);
  CHECK(one[0].role == ChatRole::System);
  CHECK(one[1].content == "pending");

  auto msgs = assemble_session_messages(session_with_pairs(7), 3);
  REQUIRE(msgs.size() == 1 + 6 + 1);
  CHECK(msgs[1].content == "T4");
  CHECK(msgs[2].content == "S4");
  CHECK(msgs[6].content == "S6");
  CHECK(msgs.back().content == "pending");

  auto ended = session_with_pairs(1);
  ended.status = SessionStatus::Ended;
  CHECK(code_of([&] { assemble_session_messages(ended, 3); }) == ErrorCode::WrongTurnOrder);
  auto no_pending = session_with_pairs(1);
  no_pending.turns.pop_back();
  CHECK(code_of([&] { assemble_session_messages(no_pending, 3); }) == ErrorCode::WrongTurnOrder);
  CHECK(code_of([&] { assemble_session_messages(session_with_pairs(1), 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("generation prompt rendering") {
  auto tmpl = load_template(test::data_dir() / "templates", "generation");
  TaskTuple t{"winter_in_jinan", InstructionalPhase::NL, QuestionType::Open, {}, TraitCode::HN};
  const auto lesson = read_text_file(test::data_dir() / "lessons" / "winter_in_jinan.txt");
  auto shots = load_few_shots(test::data_dir() / "fewshots" / "HN.jsonl");
  auto a = render_generation_prompt(tmpl, t, lesson, shots);
  CHECK(a.find(lesson) != std::string::npos);
  CHECK(a.find(std::string(trait_info(TraitCode::HN).description)) != std::string::npos);
  CHECK(a.find("New lesson learning") != std::string::npos);
  CHECK(a == render_generation_prompt(tmpl, t, lesson, shots));

  PromptTemplate needs_file("g", "{filename} {content}");
  PromptTemplate extra("g", "{filename} {unknown binding}");
  CHECK(code_of([&] { render_generation_prompt(extra, t, lesson, shots); }) == ErrorCode::MissingPlaceholder);
  CHECK_NOTHROW(render_generation_prompt(needs_file, t, lesson, shots));
}

TEST_CASE("parser reads the ten-dialogue fixture") {
  auto parsed = parse_generated_dialogues(fixture_text(), hn_context());
  REQUIRE(parsed.records.size() == 10);
  CHECK(parsed.skipped.empty());
  using P = InstructionalPhase;
  using Q = QuestionType;
  const std::vector<std::pair<P, Q>> expected = {{P::PI, Q::Closed}, {P::PI, Q::Open}, {P::NL, Q::Closed},
                                                 {P::NL, Q::Open},   {P::KC, Q::Closed}, {P::KC, Q::Open},
                                                 {P::CE, Q::Closed}, {P::CE, Q::Open}, {P::LS, Q::Open},
                                                 {P::LS, Q::Open}};
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(parsed.records[i].meta.phase == expected[i].first);
    CHECK(parsed.records[i].meta.question_type == expected[i].second);
    CHECK(parsed.records[i].meta.trait == TraitCode::HN);
    CHECK(parsed.records[i].system == "SYSTEM");
  }
  CHECK(parsed.records[0].query == "Class, do you know who wrote this essay?");
  CHECK(parsed.records[0].response == "Uh, it's, it's, um, Mr. Lao She.");
}

TEST_CASE("a corrupted block is skipped with one diagnostic") {
  auto raw = fixture_text();
  const std::string cut = "**Student**: Um, I, I think, uh, maybe it will be... very, very cold.\n";
  auto pos = raw.find(cut);
  REQUIRE(pos != std::string::npos);
  raw.erase(pos, cut.size());
  auto parsed = parse_generated_dialogues(raw, hn_context());
  CHECK(parsed.records.size() == 9);
  REQUIRE(parsed.skipped.size() == 1);
  CHECK(parsed.skipped[0].message.find("Dialogue 2") != std::string::npos);
}

TEST_CASE("parser edge cases") {
  auto empty = parse_generated_dialogues("", hn_context());
  CHECK(empty.records.empty());
  CHECK(empty.skipped.empty());

  const std::string unknown_stage =
      "[Dialogue 1]\nTeacher: Q?\nStudent: A.\nQuestion Type: Open-ended question\nLearning Stage: Recess\n";
  auto p = parse_generated_dialogues(unknown_stage, hn_context());
  CHECK(p.records.empty());
  CHECK(p.skipped.size() == 1);

  const std::string continuation =
      "Dialogue 1:\nTeacher: First line\nsecond line\nStudent: A.\nQuestion Type: Closed\nStage: lesson summary\n";
  auto c = parse_generated_dialogues(continuation, hn_context());
  REQUIRE(c.records.size() == 1);
  CHECK(c.records[0].query.find("second line") != std::string::npos);
  CHECK(c.records[0].meta.phase == InstructionalPhase::LS);
}

TEST_CASE("block format round trips through the parser") {
  auto parsed = parse_generated_dialogues(fixture_text(), hn_context());
  auto again = parse_generated_dialogues(serialize_dialogue_records(parsed.records), hn_context());
  CHECK(again.records == parsed.records);
}

TEST_CASE("label aliases") {
  CHECK(phase_from_label("New Lesson Learning.") == InstructionalPhase::NL);
  CHECK(phase_from_label("pre-lesson introduction") == InstructionalPhase::PI);
  CHECK(question_type_from_label("Closed-ended question") == QuestionType::Closed);
  CHECK_FALSE(phase_from_label("break time").has_value());
}

TEST_CASE("word frequencies") {
  using V = std::vector<std::pair<std::string, int>>;
  CHECK(word_frequencies({"a b a"}, {}, 2) == V{{"a", 2}, {"b", 1}});
  CHECK(word_frequencies({"y x"}, {}, 5) == V{{"x", 1}, {"y", 1}});
  CHECK(word_frequencies({"c b a"}, {}, 10).size() == 3);
}

// Golden snapshots: set SOEI_UPDATE_GOLDEN=1 to rewrite them.
TEST_CASE("per-trait system prompt snapshots") {
  const bool update = std::getenv("SOEI_UPDATE_GOLDEN") != nullptr;
  const auto personas = read_json_file(test::data_dir() / "personas.json");
  for (auto trait : kAllTraits) {
    const std::string code(to_string(trait));
    CAPTURE(code);
    const auto& entry = personas.at(code);
    const auto shots = load_few_shots(test::data_dir() / entry.at("few_shots").get<std::string>());
    const auto prompt =
        assemble_student_system_prompt(trait, entry.at("constraints").get<LinguisticConstraints>(), shots);
    const auto golden = test::source_dir() / "tests" / "golden" / ("system_prompt_" + code + ".txt");
    if (update) write_text_file(golden, prompt);
    CHECK(read_text_file(golden) == prompt);
    const auto lower = text::to_lower_ascii(prompt);
    for (auto d : trait_info(trait).descriptors) CHECK(lower.find(text::to_lower_ascii(d)) != std::string::npos);
    for (const auto& s : shots) CHECK(prompt.find("Student: " + s.student_text) != std::string::npos);
  }
}
