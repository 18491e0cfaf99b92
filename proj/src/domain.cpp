#include "soei/domain.hpp"

#include <set>
#include <utility>

#include "soei/error.hpp"
#include "soei/text_util.hpp"

namespace soei {

namespace {

constexpr std::string_view kHeDescriptors[] = {"active participation", "strong social skills", "ease of performance",
                                               "high visibility", "fluent and confident", "elaborative",
                                               "structured"};
constexpr std::string_view kHnDescriptors[] = {"anxiety and nervousness", "repetitive backtracking",
                                               "emotional fluctuations", "hesitant fillers"};
constexpr std::string_view kHaDescriptors[] = {"cooperation and empathy", "thoughtfulness and patience",
                                               "positive feedback", "warm and friendly", "elaborative",
                                               "accurate"};
constexpr std::string_view kLcDescriptors[] = {"carelessness", "inconsistency", "lack of systematic thinking",
                                               "simple and direct", "self-correct"};
constexpr std::string_view kLoDescriptors[] = {"low receptivity to new content", "lack of initiative in exploration",
                                               "weaker ability to handle complex", "simple and direct",
                                               "filler words"};

constexpr std::string_view kCommonProcedure =
    "When answering questions, first focus on the question and identify which stage of the lesson it belongs to "
    "(whether it's during the pre-lesson introduction, new lesson instruction, consolidation of new knowledge, "
    "classroom practice, or lesson summary). Next, understand the nature of the question: determine if it is an "
    "open-ended or closed-ended question. If it's a closed-ended question, briefly answer it based on your "
    "knowledge. If it's an open-ended question, answer according to your personality traits.";

const PersonalityTrait kTraits[] = {
    {TraitCode::HE, "High Extraversion",
     "Student with high extraversion: active participation (a strong desire to engage, frequently answering "
     "questions, and proactively showcasing themselves), strong social skills (active in class, interacting "
     "frequently with teachers and peers, and expressing themselves with confidence), ease of performance "
     "(responding to classroom activities and questions naturally and confidently), and high visibility (eager to "
     "display themselves and enjoying being the center of attention). Their language style is fluent and confident, "
     "elaborative, positive, and structured.",
     "You exhibit traits such as active participation (a strong desire to engage, frequently answering questions, "
     "and proactively showcasing yourself), strong social skills (you are lively in class, interact frequently with "
     "teachers and classmates, and express yourself confidently), ease of performance (you respond to classroom "
     "activities and questions naturally and confidently, and are not easily influenced by the environment), and "
     "high visibility (you enjoy showing yourself in class, actively participate in discussions, and like to be the "
     "center of attention).",
     "Therefore, your language style is fluent and confident (you speak smoothly and confidently, with occasional "
     "hesitation or pauses when you explain too much), elaborative (you usually provide detailed explanations or "
     "examples when answering questions to show your understanding), positive (you use enthusiastic language, with "
     "energy and interest in the topic), and structured (your responses are clear and organized, without "
     "unnecessary repetition or rambling).",
     kCommonProcedure, kHeDescriptors},
    {TraitCode::HN, "High Neuroticism",
     "Student with high neuroticism: anxiety and nervousness (displaying heightened tension and unease, easily "
     "influenced by the classroom environment), repetitive backtracking (repeating and revisiting responses, "
     "reflecting worry and uncertainty about their answers), and emotional fluctuations (prone to emotional "
     "instability). Their language style is hesitant (fillers like 'um' and 'uh'), repetitively backtracking, and "
     "disjointed.",
     "You exhibit traits such as anxiety and nervousness (showing heightened tension and unease, easily influenced "
     "by the classroom environment), repetitive backtracking (revisiting and repeating your answers, reflecting "
     "worry and uncertainty about your responses), and emotional fluctuations (prone to emotional instability).",
     "Your language style is characterized by hesitancy (your responses include hesitant fillers like \"um\" and "
     "\"uh\"), repetitive backtracking (you may repeat parts of your answers to confirm or correct what you're "
     "uncertain about), and disjointedness (your speech may not be very coherent, with fragmented or interrupted "
     "sentences).",
     "When answering questions, first, you should confirm your personality traits and corresponding language "
     "style: expect to use many fillers like \"um\" and \"uh,\" as shown in the examples below. Then, focus on the "
     "question itself, confirming which stage of the lesson the question belongs to (whether it's during the "
     "pre-lesson introduction, new lesson instruction, consolidation of new knowledge, classroom practice, or "
     "lesson summary). You also need to understand the nature of the question: determine if it's an open-ended or "
     "closed-ended question. If it's a closed-ended question, briefly answer the question based on your existing "
     "knowledge and understanding. If it's an open-ended question, answer based on your personality traits.",
     kHnDescriptors},
    {TraitCode::HA, "High Agreeableness",
     "Student with high agreeableness: cooperation and empathy (eager to assist peers, actively engage in "
     "discussions, and show concern for others), thoughtfulness and patience (remaining open to the opinions of "
     "teachers and classmates, and expressing understanding and support), and positive feedback (responding with "
     "consideration for others' emotional states). Their language style is warm and friendly, elaborative, and "
     "accurate.",
     "You exhibit traits such as cooperation and empathy (willing to help classmates, actively participate in "
     "discussions, and show concern for others), thoughtfulness and patience (remaining open to the opinions of "
     "teachers and classmates, and expressing understanding and support), and positive feedback (demonstrating "
     "understanding and care for others' emotional states when responding).",
     "Consequently, your language style is warm and friendly (using soft and kind language), elaborative "
     "(providing detailed explanations that reflect understanding and thoughtfulness), and accurate (language is "
     "precise and clear).",
     kCommonProcedure, kHaDescriptors},
    {TraitCode::LC, "Low Conscientiousness",
     "Student with low conscientiousness: carelessness (frequently making mistakes, though occasionally providing "
     "correct answers), inconsistency (sometimes recognizing and correcting their own errors, other times making "
     "outright mistakes), and lack of systematic thinking (disorganized responses that occasionally omit important "
     "details). Their language style is simple and direct, occasionally self-corrected, and unreliable.",
     "You exhibit traits such as carelessness (you often make mistakes, but sometimes give correct answers), "
     "inconsistency (occasionally, you notice and correct your own mistakes, but sometimes you make errors "
     "outright), and lack of systematic thinking (your responses tend to be disorganized, and you occasionally "
     "leave out important details).",
     "As a result, your language style is simple and direct (your answers are brief and prone to errors), "
     "occasionally self-corrected (you sometimes catch and fix your mistakes, but inconsistently), and unreliable "
     "(your responses may be disjointed, sometimes wrong, sometimes right).",
     kCommonProcedure, kLcDescriptors},
    {TraitCode::LO, "Low Openness",
     "Student with low openness: low receptivity to new content (preferring familiar knowledge, often confused or "
     "uninterested in unfamiliar or complex topics), lack of initiative in exploration (rarely participating in "
     "discussions or asking questions), and weaker ability to handle complex issues. Their language style is simple "
     "and direct, relies on filler words such as 'um' and 'uh', and shows difficulty expanding discussions.",
     "You exhibit traits such as low receptivity to new content (you tend to rely on familiar knowledge and "
     "experience, and you often feel confused or uninterested in unfamiliar or complex topics), lack of initiative "
     "in exploration (you are not very active in exploring or thinking about new problems, and you rarely "
     "participate in discussions or ask questions), and weaker ability to handle complex problems (you struggle to "
     "provide effective responses or solutions to more challenging questions or content that requires deep "
     "understanding).",
     "Therefore, your language style tends to be simple and direct (you avoid complex analysis or evaluation and "
     "may respond to unfamiliar questions with simple \"um\" or \"uh\" answers), rely on filler words (using "
     "\"um,\" \"uh,\" and similar words to express confusion or hesitation), and you have difficulty expanding "
     "discussions (you do not usually offer additional information or opinions).",
     kCommonProcedure, kLoDescriptors},
};

}  // namespace

const PersonalityTrait& trait_info(TraitCode code) {
  for (const auto& t : kTraits) {
    if (t.code == code) return t;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown trait code");
}

std::string_view to_string(TraitCode code) {
  switch (code) {
    case TraitCode::HE: return "HE";
    case TraitCode::HN: return "HN";
    case TraitCode::HA: return "HA";
    case TraitCode::LC: return "LC";
    case TraitCode::LO: return "LO";
  }
  return "??";
}

std::optional<TraitCode> parse_trait(std::string_view text) {
  auto s = text::trim(text);
  for (auto code : kAllTraits) {
    if (text::iequals(s, to_string(code)) || text::normalize_label(s) == text::normalize_label(trait_info(code).display_name)) {
      return code;
    }
  }
  return std::nullopt;
}

TraitCode parse_trait_or_throw(std::string_view text) {
  if (auto t = parse_trait(text)) return *t;
  throw Error(ErrorCode::InvalidArgument, "unknown trait code '" + std::string(text) + "'");
}

std::string CohortMember::label() const { return trait_ ? std::string(to_string(*trait_)) : std::string("RS"); }

std::optional<CohortMember> CohortMember::parse(std::string_view text) {
  if (text::iequals(text::trim(text), "RS")) return real_student();
  if (auto t = parse_trait(text)) return lvsa(*t);
  return std::nullopt;
}

std::string_view to_string(InstructionalPhase phase) {
  switch (phase) {
    case InstructionalPhase::PI: return "PI";
    case InstructionalPhase::NL: return "NL";
    case InstructionalPhase::KC: return "KC";
    case InstructionalPhase::CE: return "CE";
    case InstructionalPhase::LS: return "LS";
  }
  return "??";
}

std::string_view display_name(InstructionalPhase phase) {
  switch (phase) {
    case InstructionalPhase::PI: return "Pre-lesson introduction";
    case InstructionalPhase::NL: return "New lesson instruction";
    case InstructionalPhase::KC: return "Knowledge consolidation";
    case InstructionalPhase::CE: return "Classroom exercises";
    case InstructionalPhase::LS: return "Lesson summary";
  }
  return "";
}

std::optional<InstructionalPhase> parse_phase_code(std::string_view text) {
  for (auto p : kAllPhases) {
    if (text::iequals(text::trim(text), to_string(p))) return p;
  }
  return std::nullopt;
}

std::string_view to_string(QuestionType type) {
  switch (type) {
    case QuestionType::Closed: return "Closed";
    case QuestionType::Open: return "Open";
    case QuestionType::NonQuestion: return "NonQuestion";
  }
  return "";
}

std::optional<QuestionType> parse_question_type_code(std::string_view text) {
  for (auto q : {QuestionType::Closed, QuestionType::Open, QuestionType::NonQuestion}) {
    if (text::iequals(text::trim(text), to_string(q))) return q;
  }
  return std::nullopt;
}

std::string_view to_string(FillerPolicy policy) {
  switch (policy) {
    case FillerPolicy::Required: return "Required";
    case FillerPolicy::Forbidden: return "Forbidden";
    case FillerPolicy::Free: return "Free";
  }
  return "";
}

std::optional<FillerPolicy> parse_filler_policy(std::string_view text) {
  for (auto p : {FillerPolicy::Required, FillerPolicy::Forbidden, FillerPolicy::Free}) {
    if (text::iequals(text::trim(text), to_string(p))) return p;
  }
  return std::nullopt;
}

const TaskTuple& validate_task_tuple(const TaskTuple& tuple) {
  auto fail = [](const std::string& reason) { throw Error(ErrorCode::InvalidTuple, "invalid task tuple: " + reason); };
  if (text::trim(tuple.content_ref).empty()) fail("content_ref is empty");
  if (tuple.question_type == QuestionType::NonQuestion) fail("question_type must be Closed or Open");
  if (tuple.constraints.max_sentence_tokens < 1) fail("max_sentence_tokens must be >= 1");
  if (tuple.constraints.filler_policy == FillerPolicy::Required && tuple.constraints.filler_lexicon.empty()) {
    fail("filler_lexicon must be non-empty when fillers are required");
  }
  return tuple;
}

std::string_view to_string(ScenePartition target) {
  switch (target) {
    case ScenePartition::DS: return "DS";
    case ScenePartition::DO: return "DO";
    case ScenePartition::DE: return "DE";
    case ScenePartition::DI: return "DI";
  }
  return "";
}

std::optional<DatasetPurpose> parse_purpose(std::string_view text) {
  auto s = text::normalize_label(text);
  if (s == "diagnostic") return DatasetPurpose::Diagnostic;
  if (s == "finetune" || s == "fine tune") return DatasetPurpose::FineTune;
  if (s == "evaluation") return DatasetPurpose::Evaluation;
  if (s == "interaction") return DatasetPurpose::Interaction;
  return std::nullopt;
}

ScenePartition scene_partition(const TaskTuple& tuple, const PartitionRule& rule) {
  validate_task_tuple(tuple);
  struct Visitor {
    const TaskTuple& t;
    ScenePartition operator()(const ByPurpose& r) const {
      switch (r.purpose) {
        case DatasetPurpose::Diagnostic: return ScenePartition::DS;
        case DatasetPurpose::FineTune: return ScenePartition::DO;
        case DatasetPurpose::Evaluation: return ScenePartition::DE;
        case DatasetPurpose::Interaction: return ScenePartition::DI;
      }
      return ScenePartition::DO;
    }
    ScenePartition operator()(const ByPhase& r) const {
      auto it = r.table.find(t.phase);
      return it == r.table.end() ? r.fallback : it->second;
    }
  };
  return std::visit(Visitor{tuple}, rule);
}

std::string_view to_string(Role role) { return role == Role::Teacher ? "Teacher" : "Student"; }

void validate_survey(const SurveyResponse& survey) {
  for (const auto& [id, value] : survey.likert_answers) {
    if (value < 1 || value > 5) {
      throw Error(ErrorCode::InvalidArgument,
                  "likert answer for '" + id + "' must be within [1,5], got " + std::to_string(value));
    }
  }
}

std::string_view to_string(SessionStatus status) { return status == SessionStatus::Active ? "Active" : "Ended"; }

void check_session_invariants(const Session& session) {
  for (std::size_t i = 0; i < session.turns.size(); ++i) {
    const auto& turn = session.turns[i];
    if (turn.index != static_cast<std::int64_t>(i)) {
      throw Error(ErrorCode::WrongTurnOrder, "turn indices must be consecutive from 0");
    }
    if (turn.role != expected_role(turn.index)) {
      throw Error(ErrorCode::WrongTurnOrder, "turn roles must alternate starting with Teacher");
    }
    if (turn.latency_ms < 0) throw Error(ErrorCode::InvalidArgument, "negative latency");
  }
  if (session.survey && session.status != SessionStatus::Ended) {
    throw Error(ErrorCode::NotEnded, "survey present on an active session");
  }
}

std::string_view to_string(RecordSource source) {
  switch (source) {
    case RecordSource::Generated: return "Generated";
    case RecordSource::Transcribed: return "Transcribed";
    case RecordSource::Fixture: return "Fixture";
  }
  return "";
}

std::optional<RecordSource> parse_record_source(std::string_view text) {
  for (auto s : {RecordSource::Generated, RecordSource::Transcribed, RecordSource::Fixture}) {
    if (text::iequals(text::trim(text), to_string(s))) return s;
  }
  return std::nullopt;
}

void validate_record(const DatasetRecord& record) {
  if (record.system.empty() || record.query.empty() || record.response.empty()) {
    throw Error(ErrorCode::InvalidArgument, "dataset record requires non-empty system, query and response");
  }
}

void check_unique_verdicts(std::span<const Verdict> verdicts) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& v : verdicts) {
    if (!seen.emplace(v.sample_id, v.evaluator_id).second) {
      throw Error(ErrorCode::InvalidArgument,
                  "duplicate verdict for sample '" + v.sample_id + "' by evaluator '" + v.evaluator_id + "'");
    }
  }
}

std::string_view to_string(BloomLevel level) {
  switch (level) {
    case BloomLevel::Remember: return "Remember";
    case BloomLevel::Understand: return "Understand";
    case BloomLevel::Apply: return "Apply";
    case BloomLevel::Analyze: return "Analyze";
    case BloomLevel::Evaluate: return "Evaluate";
    case BloomLevel::Create: return "Create";
  }
  return "";
}

std::string_view to_string(TeacherAct act) {
  switch (act) {
    case TeacherAct::Criticism: return "Criticism";
    case TeacherAct::Directive: return "Directive";
    case TeacherAct::Questioning: return "Questioning";
    case TeacherAct::EmotionalExpression: return "EmotionalExpression";
    case TeacherAct::Lecture: return "Lecture";
    case TeacherAct::AcceptingSuggestions: return "AcceptingSuggestions";
    case TeacherAct::PositiveReinforcement: return "PositiveReinforcement";
  }
  return "";
}

std::string_view to_string(StudentAct act) {
  switch (act) {
    case StudentAct::SpontaneousQuestion: return "SpontaneousQuestion";
    case StudentAct::IrrelevantResponse: return "IrrelevantResponse";
    case StudentAct::InvalidUtterance: return "InvalidUtterance";
    case StudentAct::NoResponse: return "NoResponse";
    case StudentAct::CorrectAnswer: return "CorrectAnswer";
    case StudentAct::RepeatedAnswer: return "RepeatedAnswer";
    case StudentAct::IncorrectAnswer: return "IncorrectAnswer";
  }
  return "";
}

void check_ranking(std::span<const TraitCode> ranking) {
  if (ranking.size() > kAllTraits.size()) {
    throw Error(ErrorCode::InvalidArgument, "ranking longer than five entries");
  }
  std::set<TraitCode> seen;
  for (auto t : ranking) {
    if (!seen.insert(t).second) {
      throw Error(ErrorCode::InvalidArgument, "ranking repeats " + std::string(to_string(t)));
    }
  }
}

}  // namespace soei
