#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "soei/chat_types.hpp"
#include "soei/domain.hpp"
#include "soei/tokenize.hpp"

namespace soei {

// Text with `{name}` placeholders. `{{` and `}}` render as literal braces.
class PromptTemplate {
 public:
  PromptTemplate(std::string id, std::string body);

  const std::string& id() const { return id_; }
  const std::string& body() const { return body_; }
  const std::set<std::string>& required_placeholders() const { return required_; }

  // Throws Error(MissingPlaceholder) naming the first unbound placeholder.
  std::string render(const std::map<std::string, std::string>& bindings) const;

 private:
  std::string id_;
  std::string body_;
  std::set<std::string> required_;
};

// Reads `<dir>/<id>.tmpl`.
PromptTemplate load_template(const std::filesystem::path& dir, const std::string& id);

struct FewShotExample {
  std::string teacher_text;
  std::string student_text;
  TraitCode trait = TraitCode::HN;
  std::optional<InstructionalPhase> phase;
  std::optional<QuestionType> question_type;
};

// JSONL with teacher, student, trait and optional phase/question_type.
std::vector<FewShotExample> load_few_shots(const std::filesystem::path& path);

std::string assemble_student_system_prompt(TraitCode trait, const LinguisticConstraints& constraints,
                                           const std::vector<FewShotExample>& examples);

struct PersonaConfig {
  LinguisticConstraints constraints;
  std::vector<FewShotExample> examples;
};

// System prompt, then the last `window` complete teacher/student pairs, then
// the pending teacher turn. Requires an active session ending in a Teacher turn.
std::vector<ChatMessage> assemble_session_messages(const Session& session, int window,
                                                   const PersonaConfig& persona = {});

// Bindings: filename, content, student personality, student personality
// description, few-shot, phase, question type, constraints.
std::string render_generation_prompt(const PromptTemplate& tmpl, const TaskTuple& tuple,
                                     const std::string& lesson_plan, const std::vector<FewShotExample>& few_shots);

// "[Dialogue N]" blocks in the generator's output format.
std::string format_dialogue_blocks(const std::vector<FewShotExample>& examples);
std::string serialize_dialogue_records(const std::vector<DatasetRecord>& records);

struct ParseContext {
  TraitCode trait = TraitCode::HN;
  std::string content_ref;
  std::string system;
  RecordSource source = RecordSource::Generated;
};

struct ParseDiagnostic {
  int line = 0;
  std::string message;
};

struct ParsedDialogues {
  std::vector<DatasetRecord> records;
  std::vector<ParseDiagnostic> skipped;
};

ParsedDialogues parse_generated_dialogues(std::string_view raw, const ParseContext& ctx);

// Label aliases used by the block parser. Case, hyphens and extra spaces
// are ignored.
std::optional<InstructionalPhase> phase_from_label(std::string_view label);
std::optional<QuestionType> question_type_from_label(std::string_view label);
std::string_view phase_label(InstructionalPhase phase);
std::string_view question_type_label(QuestionType type);

// Descending by count, ties broken lexicographically, at most top_n entries.
std::vector<std::pair<std::string, int>> word_frequencies(const std::vector<std::string>& corpus,
                                                          const TokenizerConfig& tokenizer, int top_n);

}  // namespace soei
