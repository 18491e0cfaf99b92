#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace soei {

// ---------------------------------------------------------------------------
// Personality traits
// ---------------------------------------------------------------------------

// One pole of each Big Five dimension. Exactly one is active per agent.
enum class TraitCode { HE, HN, HA, LC, LO };

struct PersonalityTrait {
  TraitCode code;
  std::string_view display_name;
  // Third-person profile of the student type.
  std::string_view description;
  // Second-person sentences used when conditioning a student agent.
  std::string_view behavior_prompt;
  std::string_view style_prompt;
  std::string_view procedure_prompt;
  // Short phrases that must survive into every system prompt for the trait.
  std::span<const std::string_view> descriptors;
};

inline constexpr std::array<TraitCode, 5> kAllTraits = {TraitCode::HE, TraitCode::HN, TraitCode::HA,
                                                        TraitCode::LC, TraitCode::LO};

const PersonalityTrait& trait_info(TraitCode code);
std::string_view to_string(TraitCode code);
// Accepts the two-letter code or the display name, case-insensitively.
std::optional<TraitCode> parse_trait(std::string_view text);
TraitCode parse_trait_or_throw(std::string_view text);

// A member of an evaluation cohort: an agent with a trait, or a real student.
class CohortMember {
 public:
  static CohortMember lvsa(TraitCode trait) { return CohortMember(trait); }
  static CohortMember real_student() { return CohortMember(std::nullopt); }

  bool is_real_student() const { return !trait_.has_value(); }
  std::optional<TraitCode> trait() const { return trait_; }
  // "HE".."LO" or "RS".
  std::string label() const;
  static std::optional<CohortMember> parse(std::string_view text);

  friend bool operator==(const CohortMember&, const CohortMember&) = default;
  friend auto operator<=>(const CohortMember&, const CohortMember&) = default;

 private:
  explicit CohortMember(std::optional<TraitCode> t) : trait_(t) {}
  std::optional<TraitCode> trait_;
};

// ---------------------------------------------------------------------------
// Instructional structure
// ---------------------------------------------------------------------------

// Declaration order is lesson order: PI < NL < KC < CE < LS.
enum class InstructionalPhase { PI, NL, KC, CE, LS };
inline constexpr std::array<InstructionalPhase, 5> kAllPhases = {
    InstructionalPhase::PI, InstructionalPhase::NL, InstructionalPhase::KC, InstructionalPhase::CE,
    InstructionalPhase::LS};

std::string_view to_string(InstructionalPhase phase);
std::string_view display_name(InstructionalPhase phase);
std::optional<InstructionalPhase> parse_phase_code(std::string_view text);

enum class QuestionType { Closed, Open, NonQuestion };

std::string_view to_string(QuestionType type);
std::optional<QuestionType> parse_question_type_code(std::string_view text);

enum class FillerPolicy { Required, Forbidden, Free };

std::string_view to_string(FillerPolicy policy);
std::optional<FillerPolicy> parse_filler_policy(std::string_view text);

struct LinguisticConstraints {
  int max_sentence_tokens = 30;
  FillerPolicy filler_policy = FillerPolicy::Free;
  std::vector<std::string> filler_lexicon = {"um", "uh"};
  bool first_person_required = false;

  friend bool operator==(const LinguisticConstraints&, const LinguisticConstraints&) = default;
};

// The instructional unit every prompt is derived from. Holding a single
// TraitCode makes multi-trait composition unrepresentable.
struct TaskTuple {
  std::string content_ref;
  InstructionalPhase phase = InstructionalPhase::PI;
  QuestionType question_type = QuestionType::Closed;
  LinguisticConstraints constraints;
  TraitCode trait = TraitCode::HN;

  friend bool operator==(const TaskTuple&, const TaskTuple&) = default;
};

// Throws Error(InvalidTuple) naming the first violated invariant.
const TaskTuple& validate_task_tuple(const TaskTuple& tuple);

enum class ScenePartition { DS, DO, DE, DI };
std::string_view to_string(ScenePartition target);

enum class DatasetPurpose { Diagnostic, FineTune, Evaluation, Interaction };
std::optional<DatasetPurpose> parse_purpose(std::string_view text);

struct ByPurpose {
  DatasetPurpose purpose;
};
// Route by phase; phases missing from the table fall back to `fallback`.
struct ByPhase {
  std::map<InstructionalPhase, ScenePartition> table;
  ScenePartition fallback = ScenePartition::DO;
};
using PartitionRule = std::variant<ByPurpose, ByPhase>;

ScenePartition scene_partition(const TaskTuple& tuple, const PartitionRule& rule);

// ---------------------------------------------------------------------------
// Sessions
// ---------------------------------------------------------------------------

enum class Role { Teacher, Student };
std::string_view to_string(Role role);

struct DialogueTurn {
  std::int64_t index = 0;
  Role role = Role::Teacher;
  std::string text;
  std::int64_t created_at_ms = 0;
  // Student: backend round trip. Teacher: think time since the previous
  // student turn, 0 for the first turn.
  std::int64_t latency_ms = 0;

  friend bool operator==(const DialogueTurn&, const DialogueTurn&) = default;
};

struct SurveyResponse {
  std::map<std::string, int> likert_answers;
  std::map<std::string, std::vector<std::string>> choice_answers;
  std::map<std::string, std::string> free_text;

  friend bool operator==(const SurveyResponse&, const SurveyResponse&) = default;
};

void validate_survey(const SurveyResponse& survey);

enum class SessionStatus { Active, Ended };
std::string_view to_string(SessionStatus status);

struct Session {
  std::string id;
  std::string teacher_id;
  TraitCode trait = TraitCode::HN;
  std::string content_ref;
  SessionStatus status = SessionStatus::Active;
  std::vector<DialogueTurn> turns;
  std::optional<SurveyResponse> survey;
  std::string backend_label;

  friend bool operator==(const Session&, const Session&) = default;
};

// Role of the turn at position `index` in any well-formed session.
inline Role expected_role(std::int64_t index) { return index % 2 == 0 ? Role::Teacher : Role::Student; }

// Checks index contiguity, strict alternation, and status/survey coupling.
void check_session_invariants(const Session& session);

// ---------------------------------------------------------------------------
// Dataset and evaluation records
// ---------------------------------------------------------------------------

enum class RecordSource { Generated, Transcribed, Fixture };
std::string_view to_string(RecordSource source);
std::optional<RecordSource> parse_record_source(std::string_view text);

struct RecordMeta {
  TraitCode trait = TraitCode::HN;
  InstructionalPhase phase = InstructionalPhase::PI;
  QuestionType question_type = QuestionType::Closed;
  std::string content_ref;
  RecordSource source = RecordSource::Generated;

  friend bool operator==(const RecordMeta&, const RecordMeta&) = default;
};

struct DatasetRecord {
  std::string system;
  std::string query;
  std::string response;
  RecordMeta meta;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

void validate_record(const DatasetRecord& record);

enum class EvaluatorKind { Human, Model };

struct Verdict {
  std::string sample_id;
  std::string evaluator_id;
  EvaluatorKind evaluator_kind = EvaluatorKind::Model;
  bool compliant = false;
  std::string rationale;
  // False when the judge output for this item could not be parsed.
  bool valid = true;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

// Throws InvalidArgument on a repeated (sample_id, evaluator_id) pair.
void check_unique_verdicts(std::span<const Verdict> verdicts);

enum class BloomLevel { Remember, Understand, Apply, Analyze, Evaluate, Create };
enum class TeacherAct {
  Criticism,
  Directive,
  Questioning,
  EmotionalExpression,
  Lecture,
  AcceptingSuggestions,
  PositiveReinforcement
};
enum class StudentAct {
  SpontaneousQuestion,
  IrrelevantResponse,
  InvalidUtterance,
  NoResponse,
  CorrectAnswer,
  RepeatedAnswer,
  IncorrectAnswer
};

std::string_view to_string(BloomLevel level);
std::string_view to_string(TeacherAct act);
std::string_view to_string(StudentAct act);

struct TeacherLabels {
  BloomLevel bloom;
  QuestionType question_type;
  TeacherAct teacher_act;
  friend bool operator==(const TeacherLabels&, const TeacherLabels&) = default;
};

struct StudentLabels {
  StudentAct student_act;
  friend bool operator==(const StudentLabels&, const StudentLabels&) = default;
};

// Teacher turns carry the three teacher dimensions; student turns carry one.
using AnnotationLabels = std::variant<TeacherLabels, StudentLabels>;

struct RankingPrediction {
  std::int64_t turn_index = 0;
  std::vector<TraitCode> ranking;
  TraitCode truth = TraitCode::HN;
  double score = 0.0;

  friend bool operator==(const RankingPrediction&, const RankingPrediction&) = default;
};

// Duplicate-free, at most five entries.
void check_ranking(std::span<const TraitCode> ranking);

}  // namespace soei
