#include "soei/json_io.hpp"

#include <fstream>
#include <sstream>

#include "soei/error.hpp"

namespace soei {

namespace {

template <typename Enum, typename Parse>
Enum parse_enum(const json& j, Parse parse, const char* what) {
  if (!j.is_string()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be a string");
  auto parsed = parse(j.get<std::string>());
  if (!parsed) throw Error(ErrorCode::InvalidArgument, std::string("unknown ") + what + " '" + j.get<std::string>() + "'");
  return *parsed;
}

}  // namespace

void to_json(json& j, TraitCode t) { j = std::string(to_string(t)); }
void from_json(const json& j, TraitCode& t) {
  t = parse_enum<TraitCode>(j, [](const std::string& s) { return parse_trait(s); }, "trait");
}

void to_json(json& j, InstructionalPhase p) { j = std::string(to_string(p)); }
void from_json(const json& j, InstructionalPhase& p) {
  p = parse_enum<InstructionalPhase>(j, [](const std::string& s) { return parse_phase_code(s); }, "phase");
}

void to_json(json& j, QuestionType q) { j = std::string(to_string(q)); }
void from_json(const json& j, QuestionType& q) {
  q = parse_enum<QuestionType>(j, [](const std::string& s) { return parse_question_type_code(s); }, "question_type");
}

void to_json(json& j, Role r) { j = std::string(to_string(r)); }
void from_json(const json& j, Role& r) {
  r = parse_enum<Role>(
      j,
      [](const std::string& s) -> std::optional<Role> {
        if (s == "Teacher") return Role::Teacher;
        if (s == "Student") return Role::Student;
        return std::nullopt;
      },
      "role");
}

void to_json(json& j, const LinguisticConstraints& c) {
  j = json{{"max_sentence_tokens", c.max_sentence_tokens},
           {"filler_policy", std::string(to_string(c.filler_policy))},
           {"filler_lexicon", c.filler_lexicon},
           {"first_person_required", c.first_person_required}};
}

void from_json(const json& j, LinguisticConstraints& c) {
  c = LinguisticConstraints{};
  if (j.contains("max_sentence_tokens")) c.max_sentence_tokens = j.at("max_sentence_tokens").get<int>();
  if (j.contains("filler_policy")) {
    c.filler_policy = parse_enum<FillerPolicy>(
        j.at("filler_policy"), [](const std::string& s) { return parse_filler_policy(s); }, "filler_policy");
  }
  if (j.contains("filler_lexicon")) c.filler_lexicon = j.at("filler_lexicon").get<std::vector<std::string>>();
  if (j.contains("first_person_required")) c.first_person_required = j.at("first_person_required").get<bool>();
}

void to_json(json& j, const TaskTuple& t) {
  j = json{{"content_ref", t.content_ref},
           {"phase", t.phase},
           {"question_type", t.question_type},
           {"constraints", t.constraints},
           {"trait", t.trait}};
}

void from_json(const json& j, TaskTuple& t) {
  if (j.contains("traits")) {
    throw Error(ErrorCode::InvalidTuple, "invalid task tuple: exactly one trait may be active");
  }
  t = TaskTuple{};
  t.content_ref = j.at("content_ref").get<std::string>();
  t.phase = j.at("phase").get<InstructionalPhase>();
  t.question_type = j.at("question_type").get<QuestionType>();
  if (j.contains("constraints")) t.constraints = j.at("constraints").get<LinguisticConstraints>();
  t.trait = j.at("trait").get<TraitCode>();
}

void to_json(json& j, const DialogueTurn& t) {
  j = json{{"index", t.index},
           {"role", t.role},
           {"text", t.text},
           {"created_at", t.created_at_ms},
           {"latency_ms", t.latency_ms}};
}

void from_json(const json& j, DialogueTurn& t) {
  t.index = j.at("index").get<std::int64_t>();
  t.role = j.at("role").get<Role>();
  t.text = j.at("text").get<std::string>();
  t.created_at_ms = j.value("created_at", std::int64_t{0});
  t.latency_ms = j.value("latency_ms", std::int64_t{0});
}

void to_json(json& j, const SurveyResponse& s) {
  j = json{{"likert_answers", s.likert_answers}, {"choice_answers", s.choice_answers}, {"free_text", s.free_text}};
}

void from_json(const json& j, SurveyResponse& s) {
  s = SurveyResponse{};
  if (j.contains("likert_answers")) s.likert_answers = j.at("likert_answers").get<std::map<std::string, int>>();
  if (j.contains("choice_answers")) {
    for (const auto& [k, v] : j.at("choice_answers").items()) {
      if (v.is_string()) {
        s.choice_answers[k] = {v.get<std::string>()};
      } else {
        s.choice_answers[k] = v.get<std::vector<std::string>>();
      }
    }
  }
  if (j.contains("free_text")) s.free_text = j.at("free_text").get<std::map<std::string, std::string>>();
}

void to_json(json& j, const Session& s) {
  j = json{{"id", s.id},
           {"teacher_id", s.teacher_id},
           {"trait", s.trait},
           {"content_ref", s.content_ref},
           {"status", std::string(to_string(s.status))},
           {"turns", s.turns},
           {"survey", s.survey ? json(*s.survey) : json(nullptr)},
           {"backend_label", s.backend_label}};
}

void from_json(const json& j, Session& s) {
  s = Session{};
  s.id = j.at("id").get<std::string>();
  s.teacher_id = j.at("teacher_id").get<std::string>();
  s.trait = j.at("trait").get<TraitCode>();
  s.content_ref = j.at("content_ref").get<std::string>();
  s.status = j.at("status").get<std::string>() == "Ended" ? SessionStatus::Ended : SessionStatus::Active;
  s.turns = j.at("turns").get<std::vector<DialogueTurn>>();
  if (j.contains("survey") && !j.at("survey").is_null()) s.survey = j.at("survey").get<SurveyResponse>();
  s.backend_label = j.value("backend_label", std::string{});
}

void to_json(json& j, const DatasetRecord& r) {
  j = json{{"system", r.system},
           {"query", r.query},
           {"response", r.response},
           {"meta",
            {{"trait", r.meta.trait},
             {"phase", r.meta.phase},
             {"question_type", r.meta.question_type},
             {"content_ref", r.meta.content_ref},
             {"source", std::string(to_string(r.meta.source))}}}};
}

void from_json(const json& j, DatasetRecord& r) {
  r = DatasetRecord{};
  r.system = j.at("system").get<std::string>();
  r.query = j.at("query").get<std::string>();
  r.response = j.at("response").get<std::string>();
  const auto& m = j.at("meta");
  r.meta.trait = m.at("trait").get<TraitCode>();
  r.meta.phase = m.at("phase").get<InstructionalPhase>();
  r.meta.question_type = m.at("question_type").get<QuestionType>();
  r.meta.content_ref = m.value("content_ref", std::string{});
  r.meta.source = parse_enum<RecordSource>(
      m.at("source"), [](const std::string& s) { return parse_record_source(s); }, "source");
}

void to_json(json& j, const Verdict& v) {
  j = json{{"sample_id", v.sample_id},
           {"evaluator_id", v.evaluator_id},
           {"evaluator_kind", v.evaluator_kind == EvaluatorKind::Human ? "Human" : "Model"},
           {"compliant", v.compliant},
           {"rationale", v.rationale},
           {"valid", v.valid}};
}

void from_json(const json& j, Verdict& v) {
  v.sample_id = j.at("sample_id").get<std::string>();
  v.evaluator_id = j.at("evaluator_id").get<std::string>();
  v.evaluator_kind = j.value("evaluator_kind", std::string("Model")) == "Human" ? EvaluatorKind::Human
                                                                                : EvaluatorKind::Model;
  v.compliant = j.at("compliant").get<bool>();
  v.rationale = j.value("rationale", std::string{});
  v.valid = j.value("valid", true);
}

void to_json(json& j, const RankingPrediction& p) {
  j = json{{"turn_index", p.turn_index}, {"ranking", p.ranking}, {"truth", p.truth}, {"score", p.score}};
}

void from_json(const json& j, RankingPrediction& p) {
  p.turn_index = j.value("turn_index", std::int64_t{0});
  p.ranking = j.at("ranking").get<std::vector<TraitCode>>();
  p.truth = j.at("truth").get<TraitCode>();
  p.score = j.value("score", 0.0);
  check_ranking(p.ranking);
}

json labels_to_json(const AnnotationLabels& labels) {
  if (const auto* t = std::get_if<TeacherLabels>(&labels)) {
    return json{{"bloom", std::string(to_string(t->bloom))},
                {"question_type", std::string(to_string(t->question_type))},
                {"teacher_act", std::string(to_string(t->teacher_act))}};
  }
  return json{{"student_act", std::string(to_string(std::get<StudentLabels>(labels).student_act))}};
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::StorageFailure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::StorageFailure, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::StorageFailure, "write failed for " + path.string());
}

json read_json_file(const std::filesystem::path& path) {
  auto content = read_text_file(path);
  try {
    return json::parse(content);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
}

std::vector<json> parse_jsonl(const std::string& content) {
  std::vector<json> out;
  std::istringstream in(content);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<json> read_jsonl_file(const std::filesystem::path& path) { return parse_jsonl(read_text_file(path)); }

}  // namespace soei
