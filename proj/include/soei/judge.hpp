#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "soei/domain.hpp"
#include "soei/gateway.hpp"
#include "soei/prompting.hpp"

namespace soei {

// ---------------------------------------------------------------------------
// Rubric
// ---------------------------------------------------------------------------

struct RubricCriterion {
  std::string name;
  std::string text;
};

struct RubricDimension {
  std::string name;
  // The instruction bullet given to the judge.
  std::string instruction;
  std::vector<RubricCriterion> criteria;
};

struct RubricCriteria {
  std::string version;
  std::vector<RubricDimension> dimensions;
};

// Throws InvalidArgument unless there are 4 dimensions and 15 criteria.
void validate_rubric(const RubricCriteria& rubric);
RubricCriteria load_rubric(const std::filesystem::path& path);
// Instruction bullets, each followed by its indented sub-criteria.
std::string render_rubric(const RubricCriteria& rubric);

// ---------------------------------------------------------------------------
// Judge output parsing
// ---------------------------------------------------------------------------

struct RealnessItem {
  bool compliant = false;
  std::string rationale;
};

// Parses "Question N" blocks. Entry i holds question i + 1, or nullopt when
// that block is missing or has no readable "Compliance: 1|2" line.
std::vector<std::optional<RealnessItem>> parse_realness_answer(std::string_view raw, std::size_t expected);

std::optional<BloomLevel> bloom_from_label(std::string_view label);
std::optional<TeacherAct> teacher_act_from_label(std::string_view label);
std::optional<StudentAct> student_act_from_label(std::string_view label);
// Throws AnnotationFailure carrying the raw output.
AnnotationLabels parse_annotation(std::string_view raw, Role role);
// Accepts "HA > HE > ..." with codes or full names. Throws RankParseFailure.
std::vector<TraitCode> parse_ranking(std::string_view raw);

// ---------------------------------------------------------------------------
// Judge
// ---------------------------------------------------------------------------

struct DialoguePair {
  std::string sample_id;
  std::string teacher_text;
  std::string student_text;
};

struct JudgePrompts {
  PromptTemplate realness_system{"judge_realness_system", ""};
  PromptTemplate realness_user{"judge_realness_user", ""};
  PromptTemplate realness_reask{"judge_realness_reask", ""};
  PromptTemplate annotate{"judge_annotate", ""};
  PromptTemplate annotate_reask{"judge_annotate_reask", ""};
  PromptTemplate rank{"judge_rank", ""};
  PromptTemplate rank_reask{"judge_rank_reask", ""};
  PromptTemplate sentiment{"judge_sentiment", ""};
};

JudgePrompts load_judge_prompts(const std::filesystem::path& template_dir);

class Judge {
 public:
  Judge(std::shared_ptr<ChatBackend> backend, BackendConfig cfg, JudgePrompts prompts,
        std::string evaluator_id = "judge");

  // One verdict per input, in input order. Unparseable items come back with
  // valid = false after one re-ask per batch.
  std::vector<Verdict> judge_realness_batch(const std::vector<DialoguePair>& dialogues, const RubricCriteria& rubric,
                                            int batch_size = 10);

  // `context` is the recent window of the session and must contain `target`.
  AnnotationLabels annotate_turn(const std::vector<DialogueTurn>& context, const DialogueTurn& target);

  // `context` must end with a Student turn. turn_index is that turn's index.
  RankingPrediction rank_personality(const std::vector<DialogueTurn>& context, TraitCode truth);

  // Raw judge reply for an arbitrary prompt pair; gateway errors surface as
  // JudgeUnavailable.
  std::string ask(const std::vector<ChatMessage>& messages);

  const JudgePrompts& prompts() const { return prompts_; }

 private:
  std::vector<Verdict> judge_one_batch(const std::vector<DialoguePair>& batch, std::size_t offset,
                                       const std::string& rubric_text);

  std::shared_ptr<ChatBackend> backend_;
  BackendConfig cfg_;
  JudgePrompts prompts_;
  std::string evaluator_id_;
};

std::string format_turns(const std::vector<DialogueTurn>& turns);

// ---------------------------------------------------------------------------
// Multiple-choice scoring
// ---------------------------------------------------------------------------

struct McItem {
  std::string id;
  std::string category;
  std::string stem;
  std::map<char, std::string> options;
  char correct = 'A';
  std::string explanation;
};

// Exactly options A-D, with `correct` among them.
void validate_mc_item(const McItem& item);

struct McScore {
  int correct = 0;
  int total = 0;
  double accuracy = 0.0;
  std::map<std::string, double> per_category;
  // Unweighted mean of the category accuracies.
  double summary_average = 0.0;
};

// Unanswered items count as wrong. Throws UnknownItem for an answer whose id
// matches no item.
McScore score_mc(const std::vector<McItem>& items, const std::map<std::string, char>& answers);

}  // namespace soei
