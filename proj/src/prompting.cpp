#include "soei/prompting.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

#include "soei/error.hpp"
#include "soei/json_io.hpp"
#include "soei/text_util.hpp"

namespace soei {

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------

namespace {

bool is_placeholder_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ' ' || c == '-';
}

// Walks the body, calling on_text for literal runs and on_name for placeholders.
template <typename OnText, typename OnName>
void scan_template(const std::string& body, OnText on_text, OnName on_name) {
  std::size_t i = 0;
  while (i < body.size()) {
    char c = body[i];
    if (c == '{' && i + 1 < body.size() && body[i + 1] == '{') {
      on_text("{");
      i += 2;
      continue;
    }
    if (c == '}' && i + 1 < body.size() && body[i + 1] == '}') {
      on_text("}");
      i += 2;
      continue;
    }
    if (c == '{') {
      auto close = body.find('}', i + 1);
      if (close != std::string::npos) {
        auto name = body.substr(i + 1, close - i - 1);
        if (!name.empty() && std::all_of(name.begin(), name.end(), is_placeholder_char) &&
            !text::trim(name).empty()) {
          on_name(std::string(text::trim(name)));
          i = close + 1;
          continue;
        }
      }
    }
    on_text(std::string_view(&body[i], 1));
    ++i;
  }
}

}  // namespace

PromptTemplate::PromptTemplate(std::string id, std::string body) : id_(std::move(id)), body_(std::move(body)) {
  scan_template(body_, [](std::string_view) {}, [this](const std::string& name) { required_.insert(name); });
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& bindings) const {
  for (const auto& name : required_) {
    if (!bindings.count(name)) {
      throw Error(ErrorCode::MissingPlaceholder, "template '" + id_ + "' has no binding for {" + name + "}");
    }
  }
  std::string out;
  out.reserve(body_.size());
  scan_template(
      body_, [&](std::string_view s) { out += s; }, [&](const std::string& name) { out += bindings.at(name); });
  return out;
}

PromptTemplate load_template(const std::filesystem::path& dir, const std::string& id) {
  return PromptTemplate(id, read_text_file(dir / (id + ".tmpl")));
}

std::vector<FewShotExample> load_few_shots(const std::filesystem::path& path) {
  std::vector<FewShotExample> out;
  for (const auto& j : read_jsonl_file(path)) {
    FewShotExample ex;
    ex.teacher_text = j.at("teacher").get<std::string>();
    ex.student_text = j.at("student").get<std::string>();
    ex.trait = j.at("trait").get<TraitCode>();
    if (j.contains("phase")) ex.phase = j.at("phase").get<InstructionalPhase>();
    if (j.contains("question_type")) ex.question_type = j.at("question_type").get<QuestionType>();
    if (ex.teacher_text.empty() || ex.student_text.empty()) {
      throw Error(ErrorCode::InvalidArgument, path.string() + ": few-shot teacher/student text must be non-empty");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Student prompts
// ---------------------------------------------------------------------------

namespace {

std::string constraints_paragraph(const LinguisticConstraints& c) {
  std::ostringstream out;
  out << "Keep each sentence within " << c.max_sentence_tokens << " words.";
  auto quoted = [&] {
    std::vector<std::string> q;
    for (const auto& f : c.filler_lexicon) q.push_back("\"" + f + "\"");
    return text::join(q, ", ");
  };
  if (c.filler_policy == FillerPolicy::Required) {
    out << " Use hesitation fillers such as " << quoted() << ".";
  } else if (c.filler_policy == FillerPolicy::Forbidden) {
    out << " Do not use filler words";
    if (!c.filler_lexicon.empty()) out << " such as " << quoted();
    out << ".";
  }
  if (c.first_person_required) out << " Answer in the first person (for example, \"I think...\").";
  return out.str();
}

}  // namespace

std::string assemble_student_system_prompt(TraitCode trait, const LinguisticConstraints& constraints,
                                           const std::vector<FewShotExample>& examples) {
  for (const auto& ex : examples) {
    if (ex.trait != trait) {
      throw Error(ErrorCode::TraitMismatch, "few-shot example for " + std::string(to_string(ex.trait)) +
                                                " supplied to a " + std::string(to_string(trait)) + " prompt");
    }
  }
  if (constraints.max_sentence_tokens < 1) {
    throw Error(ErrorCode::InvalidArgument, "max_sentence_tokens must be >= 1");
  }
  const auto& info = trait_info(trait);
  std::ostringstream out;
  out << "You are a first-year junior high school student with a " << text::to_lower_ascii(info.display_name)
      << " personality. In class, your task is to answer the teacher's questions. " << info.behavior_prompt << ' '
      << info.style_prompt << "\n\n"
      << info.procedure_prompt << "\n\n"
      << constraints_paragraph(constraints);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    out << "\n\nExample " << (i + 1) << ":\nTeacher: " << examples[i].teacher_text
        << "\nStudent: " << examples[i].student_text;
  }
  out << '\n';
  return out.str();
}

std::vector<ChatMessage> assemble_session_messages(const Session& session, int window, const PersonaConfig& persona) {
  if (window < 1) throw Error(ErrorCode::InvalidArgument, "window must be positive");
  if (session.status != SessionStatus::Active) {
    throw Error(ErrorCode::WrongTurnOrder, "session " + session.id + " has ended");
  }
  if (session.turns.empty() || session.turns.back().role != Role::Teacher) {
    throw Error(ErrorCode::WrongTurnOrder, "session " + session.id + " has no pending teacher turn");
  }
  std::vector<ChatMessage> messages;
  messages.push_back({ChatRole::System, assemble_student_system_prompt(session.trait, persona.constraints,
                                                                       persona.examples)});
  const auto history = static_cast<std::int64_t>(session.turns.size()) - 1;
  const auto pairs = history / 2;
  const auto first_pair = std::max<std::int64_t>(0, pairs - window);
  for (auto p = first_pair; p < pairs; ++p) {
    messages.push_back({ChatRole::User, session.turns[2 * p].text});
    messages.push_back({ChatRole::Assistant, session.turns[2 * p + 1].text});
  }
  messages.push_back({ChatRole::User, session.turns.back().text});
  return messages;
}

// ---------------------------------------------------------------------------
// Generation prompts and block format
// ---------------------------------------------------------------------------

std::string_view phase_label(InstructionalPhase phase) {
  switch (phase) {
    case InstructionalPhase::PI: return "Pre-lesson introduction";
    case InstructionalPhase::NL: return "New lesson learning";
    case InstructionalPhase::KC: return "Knowledge consolidation";
    case InstructionalPhase::CE: return "Classroom exercises";
    case InstructionalPhase::LS: return "Lesson summary";
  }
  return "";
}

std::string_view question_type_label(QuestionType type) {
  switch (type) {
    case QuestionType::Closed: return "Closed-ended question";
    case QuestionType::Open: return "Open-ended question";
    case QuestionType::NonQuestion: return "No question";
  }
  return "";
}

std::optional<InstructionalPhase> phase_from_label(std::string_view label) {
  static const std::map<std::string, InstructionalPhase> kAliases = {
      {"pi", InstructionalPhase::PI},
      {"pre lesson introduction", InstructionalPhase::PI},
      {"prelesson introduction", InstructionalPhase::PI},
      {"introduction", InstructionalPhase::PI},
      {"nl", InstructionalPhase::NL},
      {"new lesson learning", InstructionalPhase::NL},
      {"new lesson instruction", InstructionalPhase::NL},
      {"new lesson teaching", InstructionalPhase::NL},
      {"new knowledge learning", InstructionalPhase::NL},
      {"kc", InstructionalPhase::KC},
      {"knowledge consolidation", InstructionalPhase::KC},
      {"consolidation of new knowledge", InstructionalPhase::KC},
      {"consolidation", InstructionalPhase::KC},
      {"ce", InstructionalPhase::CE},
      {"classroom exercises", InstructionalPhase::CE},
      {"classroom exercise", InstructionalPhase::CE},
      {"class exercises", InstructionalPhase::CE},
      {"classroom practice", InstructionalPhase::CE},
      {"ls", InstructionalPhase::LS},
      {"lesson summary", InstructionalPhase::LS},
      {"summary", InstructionalPhase::LS},
  };
  auto key = text::normalize_label(label);
  while (!key.empty() && (key.back() == '.' || key.back() == ',')) key.pop_back();
  auto it = kAliases.find(key);
  return it == kAliases.end() ? std::nullopt : std::optional(it->second);
}

std::optional<QuestionType> question_type_from_label(std::string_view label) {
  static const std::map<std::string, QuestionType> kAliases = {
      {"closed", QuestionType::Closed},
      {"closed ended", QuestionType::Closed},
      {"closed ended question", QuestionType::Closed},
      {"closed question", QuestionType::Closed},
      {"closedended question", QuestionType::Closed},
      {"cq", QuestionType::Closed},
      {"open", QuestionType::Open},
      {"open ended", QuestionType::Open},
      {"open ended question", QuestionType::Open},
      {"open question", QuestionType::Open},
      {"openended question", QuestionType::Open},
      {"oq", QuestionType::Open},
      {"no question", QuestionType::NonQuestion},
      {"non question", QuestionType::NonQuestion},
      {"nonquestion", QuestionType::NonQuestion},
      {"not a question", QuestionType::NonQuestion},
      {"none", QuestionType::NonQuestion},
  };
  auto key = text::normalize_label(label);
  while (!key.empty() && (key.back() == '.' || key.back() == ',')) key.pop_back();
  auto it = kAliases.find(key);
  return it == kAliases.end() ? std::nullopt : std::optional(it->second);
}

std::string format_dialogue_blocks(const std::vector<FewShotExample>& examples) {
  std::ostringstream out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    if (i) out << '\n';
    out << "[Dialogue " << (i + 1) << "]\nTeacher: " << ex.teacher_text << "\nStudent: " << ex.student_text << '\n';
    if (ex.question_type) out << "Question Type: " << question_type_label(*ex.question_type) << '\n';
    if (ex.phase) out << "Learning Stage: " << phase_label(*ex.phase) << '\n';
  }
  return out.str();
}

std::string serialize_dialogue_records(const std::vector<DatasetRecord>& records) {
  std::vector<FewShotExample> blocks;
  blocks.reserve(records.size());
  for (const auto& r : records) {
    blocks.push_back({r.query, r.response, r.meta.trait, r.meta.phase, r.meta.question_type});
  }
  return format_dialogue_blocks(blocks);
}

std::string render_generation_prompt(const PromptTemplate& tmpl, const TaskTuple& tuple,
                                     const std::string& lesson_plan, const std::vector<FewShotExample>& few_shots) {
  validate_task_tuple(tuple);
  for (const auto& ex : few_shots) {
    if (ex.trait != tuple.trait) {
      throw Error(ErrorCode::TraitMismatch, "few-shot example trait differs from the task tuple trait");
    }
  }
  const auto& info = trait_info(tuple.trait);
  std::map<std::string, std::string> bindings = {
      {"filename", tuple.content_ref},
      {"content", lesson_plan},
      {"student personality", std::string(info.display_name)},
      {"student personality description", std::string(info.description)},
      {"few-shot", format_dialogue_blocks(few_shots)},
      {"phase", std::string(phase_label(tuple.phase))},
      {"question type", std::string(question_type_label(tuple.question_type))},
      {"constraints", constraints_paragraph(tuple.constraints)},
  };
  return tmpl.render(bindings);
}

// ---------------------------------------------------------------------------
// Block parser
// ---------------------------------------------------------------------------

namespace {

enum class Field { Teacher, Student, QuestionType, Stage };

std::optional<Field> field_from_label(std::string_view label) {
  auto key = text::normalize_label(label);
  if (key == "teacher" || key == "t") return Field::Teacher;
  if (key == "student" || key == "s") return Field::Student;
  if (key == "question type" || key == "questiontype" || key == "type of question") return Field::QuestionType;
  if (key == "learning stage" || key == "stage" || key == "learning phase" || key == "phase" ||
      key == "instructional phase" || key == "teaching stage") {
    return Field::Stage;
  }
  return std::nullopt;
}

struct Block {
  int line = 0;
  std::string header;
  std::map<Field, std::string> fields;
  std::optional<Field> last;
  std::string error;
};

// Splits "Label: value" on the first ASCII or fullwidth colon.
std::optional<std::pair<std::string, std::string>> split_label(const std::string& line) {
  auto ascii = line.find(':');
  auto wide = line.find("\xEF\xBC\x9A");
  std::size_t pos = std::min(ascii, wide);
  if (pos == std::string::npos || pos == 0) return std::nullopt;
  std::size_t skip = pos == wide ? 3 : 1;
  return std::pair{line.substr(0, pos), std::string(text::trim(std::string_view(line).substr(pos + skip)))};
}

}  // namespace

ParsedDialogues parse_generated_dialogues(std::string_view raw, const ParseContext& ctx) {
  static const std::regex kHeader(R"(^\[?\s*dialogue\s*(\d+)\s*\]?\s*[:.]?$)", std::regex::icase);
  ParsedDialogues result;
  std::optional<Block> block;

  auto finish = [&] {
    if (!block) return;
    auto skip = [&](const std::string& why) {
      result.skipped.push_back({block->line, block->header + " at line " + std::to_string(block->line) + ": " + why});
    };
    static const std::pair<Field, const char*> kRequired[] = {{Field::Teacher, "Teacher"},
                                                              {Field::Student, "Student"},
                                                              {Field::QuestionType, "Question Type"},
                                                              {Field::Stage, "Learning Stage"}};
    if (!block->error.empty()) {
      skip(block->error);
    } else if (auto missing = std::find_if(std::begin(kRequired), std::end(kRequired),
                                           [&](const auto& r) { return block->fields[r.first].empty(); });
               missing != std::end(kRequired)) {
      skip(std::string("missing ") + missing->second + " line");
    } else {
      auto qt = question_type_from_label(block->fields[Field::QuestionType]);
      auto phase = phase_from_label(block->fields[Field::Stage]);
      if (!qt || *qt == QuestionType::NonQuestion) {
        skip("unknown question type '" + block->fields[Field::QuestionType] + "'");
      } else if (!phase) {
        skip("unknown learning stage '" + block->fields[Field::Stage] + "'");
      } else {
        DatasetRecord rec;
        rec.system = ctx.system;
        rec.query = block->fields[Field::Teacher];
        rec.response = block->fields[Field::Student];
        rec.meta = RecordMeta{ctx.trait, *phase, *qt, ctx.content_ref, ctx.source};
        result.records.push_back(std::move(rec));
      }
    }
    block.reset();
  };

  auto lines = text::split_lines(raw);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int lineno = static_cast<int>(i) + 1;
    auto line = text::strip_markdown(lines[i]);
    if (line.empty()) {
      if (block) block->last.reset();
      continue;
    }
    if (std::regex_match(line, kHeader)) {
      finish();
      block = Block{lineno, line, {}, std::nullopt, {}};
      continue;
    }
    if (!block) continue;
    auto labelled = split_label(line);
    auto field = labelled ? field_from_label(labelled->first) : std::nullopt;
    if (field) {
      if (!block->fields[*field].empty() && block->error.empty()) {
        block->error = "repeated " + labelled->first + " line at line " + std::to_string(lineno);
      }
      block->fields[*field] = labelled->second;
      block->last = field;
    } else if (block->last == Field::Teacher || block->last == Field::Student) {
      auto& value = block->fields[*block->last];
      if (!value.empty()) value += ' ';
      value += line;
    }
  }
  finish();
  return result;
}

// ---------------------------------------------------------------------------
// Word frequencies
// ---------------------------------------------------------------------------

std::vector<std::pair<std::string, int>> word_frequencies(const std::vector<std::string>& corpus,
                                                          const TokenizerConfig& tokenizer, int top_n) {
  if (top_n < 1) throw Error(ErrorCode::InvalidArgument, "top_n must be >= 1");
  std::map<std::string, int> counts;
  for (const auto& doc : corpus) {
    for (auto& tok : tokenize(doc, tokenizer)) ++counts[std::move(tok)];
  }
  std::vector<std::pair<std::string, int>> out(counts.begin(), counts.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (out.size() > static_cast<std::size_t>(top_n)) out.resize(top_n);
  return out;
}

}  // namespace soei
